"""Linear (in)dependence of curvature tensors and checkers for the
three-term independence results."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import gmpy2
import numpy as np
from gmpy2 import mpq

from .curvature import CurvatureTensor, build_RLambda, build_RS, flatten, identity_tensor
from .errors import ContextError, HypothesisError
from .linalg_core import (
    Kind,
    Operator,
    SpaceContext,
    identity,
    nullspace,
    operators_independent,
    rank,
)

PROPER_ENUMERATION_LIMIT = 5
RATIONALIZE_DENOMINATOR = 10**6


@dataclass
class DependenceVerdict:
    independent: bool
    coefficients: Optional[list] = None
    proper: Optional[bool] = None
    rank: int = 0
    size: int = 0
    nullity: int = 0
    smallest_singular_ratio: Optional[float] = None
    referee: str = "exact"

    @property
    def dependent(self) -> bool:
        return not self.independent

    def to_dict(self) -> dict:
        from .serialization import scalar_to_json

        return {
            "independent": self.independent,
            "coefficients": None if self.coefficients is None else [scalar_to_json(c) for c in self.coefficients],
            "proper": self.proper,
            "rank": self.rank,
            "size": self.size,
            "nullity": self.nullity,
            "smallest_singular_ratio": self.smallest_singular_ratio,
            "referee": self.referee,
        }


def flatten_matrix(tensors: Sequence[CurvatureTensor]) -> np.ndarray:
    """Columns are the flattened tensors."""
    return np.column_stack([flatten(T) for T in tensors])


def _normalize_exact(v: np.ndarray) -> list:
    den = gmpy2.mpz(1)
    for c in v:
        den = gmpy2.lcm(den, c.denominator)
    ints = [c * den for c in v]
    g = gmpy2.mpz(0)
    for c in ints:
        g = gmpy2.gcd(g, c.numerator)
    first = next(c for c in ints if c != 0)
    sign = 1 if first > 0 else -1
    return [mpq(sign * c.numerator // g) for c in ints]


def _normalize_float(v: np.ndarray, tol: float) -> list:
    v = np.asarray(v, dtype=float)
    v = v / np.max(np.abs(v))
    first = next(c for c in v if abs(c) > tol)
    if first < 0:
        v = -v
    return [float(c) for c in v]


def _rationalize(ctx: SpaceContext, arr: np.ndarray) -> Optional[np.ndarray]:
    """Exact rational copy of a float array when every entry is a short fraction."""
    out = np.empty(arr.shape, dtype=object)
    flat = out.reshape(-1)
    for i, x in enumerate(arr.reshape(-1)):
        q = Fraction(float(x)).limit_denominator(RATIONALIZE_DENOMINATOR)
        if abs(float(q) - x) > 1e-12 * (1 + abs(x)):
            return None
        flat[i] = mpq(q.numerator, q.denominator)
    return out


def _column_dependence(ctx: SpaceContext, M: np.ndarray) -> DependenceVerdict:
    size = M.shape[1]
    if ctx.exact:
        basis = nullspace(ctx, M)
        if not basis:
            return DependenceVerdict(True, rank=size, size=size)
        return DependenceVerdict(
            False,
            coefficients=_normalize_exact(basis[0]),
            rank=size - len(basis),
            size=size,
            nullity=len(basis),
        )
    s = np.linalg.svd(M, compute_uv=False)
    smax = s[0] if s.size else 0.0
    padded = np.concatenate([s, np.zeros(max(0, size - s.size))])
    ratio = 0.0 if smax == 0 else float(padded[-1] / smax)
    verdict = DependenceVerdict(True, rank=size, size=size, smallest_singular_ratio=ratio, referee="float")
    tol = ctx.tolerance
    if 0.1 * tol <= ratio <= 10 * tol:
        rational = _rationalize(ctx, M)
        if rational is not None:
            exact = _column_dependence(ctx.with_mode("exact"), rational)
            exact.coefficients = None if exact.coefficients is None else [float(c) for c in exact.coefficients]
            exact.smallest_singular_ratio = ratio
            exact.referee = "exact"
            return exact
        verdict.referee = "float-ambiguous"
    if ratio < tol:
        basis = nullspace(ctx, M)
        verdict.independent = False
        verdict.nullity = len(basis)
        verdict.rank = size - len(basis)
        verdict.coefficients = _normalize_float(basis[0], tol)
    return verdict


def dependence(tensors: Sequence[CurvatureTensor], check_proper: bool = True) -> DependenceVerdict:
    """Decide linear dependence of the flattened tensors.

    Exact mode computes the nullspace directly.  Float mode declares
    dependence when ``s_min / s_max < tol``; inside the band
    ``[0.1 tol, 10 tol]`` it re-decides exactly if every entry rationalizes.
    For a dependent set, ``proper`` says whether every proper subset is
    independent (enumerated for sets of at most five tensors).
    """
    tensors = list(tensors)
    if not tensors:
        raise ValueError("dependence of an empty family is undefined")
    ctx = tensors[0].ctx
    for T in tensors[1:]:
        if not ctx.compatible(T.ctx):
            raise ContextError("tensors live in different contexts")
    verdict = _column_dependence(ctx, flatten_matrix(tensors))
    if verdict.dependent and check_proper:
        verdict.proper = _is_proper(ctx, tensors, verdict)
    return verdict


def _is_proper(ctx: SpaceContext, tensors: list, verdict: DependenceVerdict) -> bool:
    m = len(tensors)
    if m > PROPER_ENUMERATION_LIMIT:
        # equivalent criterion: one-dimensional relation space with full support
        return verdict.nullity == 1 and all(c != 0 for c in verdict.coefficients)
    for size in range(1, m):
        for subset in itertools.combinations(range(m), size):
            sub = _column_dependence(ctx, flatten_matrix([tensors[i] for i in subset]))
            if sub.dependent:
                return False
    return True


def resubstitute(tensors: Sequence[CurvatureTensor], coefficients: Sequence) -> np.ndarray:
    ctx = tensors[0].ctx
    total = ctx.zeros(tensors[0].entries.size)
    for c, T in zip(coefficients, tensors):
        total = total + flatten(T) * ctx.scalar(c)
    return total


# theorem checkers -----------------------------------------------------------


@dataclass
class TheoremReport:
    """Hypothesis status plus one status per conclusion: ``pass``, ``fail`` or ``not_applicable``."""

    theorem: str
    hypothesis_met: bool
    conclusions: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def falsified(self) -> bool:
        return any(v == "fail" for v in self.conclusions.values())

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "hypothesis_met": self.hypothesis_met,
            "conclusions": dict(self.conclusions),
            "details": _jsonable(self.details),
            "falsified": self.falsified,
        }


def _jsonable(obj):
    from .serialization import jsonable

    return jsonable(obj)


def _require_kind(op: Operator, kind: Kind, name: str) -> None:
    if op.kind is not kind:
        raise HypothesisError(f"{name} must be {kind.value}, got {op.kind.value}")


def _independence_theorem(name: str, ops: list, tensors: list) -> TheoremReport:
    ops_indep = operators_independent(ops)
    verdict = dependence(tensors)
    nonzero = [not T.is_zero(scale=T.max_abs()) for T in tensors]
    subsets_indep = True
    if verdict.dependent:
        subsets_indep = bool(verdict.proper)
    report = TheoremReport(name, hypothesis_met=ops_indep and subsets_indep and all(nonzero))
    report.details = {
        "operators_independent": ops_indep,
        "tensors_independent": verdict.independent,
        "tensors_nonzero": nonzero,
        "proper_subsets_independent": subsets_indep,
        "coefficients": verdict.coefficients,
        # the unconditioned statement "operators independent => tensors independent"
        "literal_statement_holds": (not ops_indep) or verdict.independent,
    }
    if not ops_indep:
        report.details["hypothesis_status"] = "hypothesis_unmet"
    elif not (subsets_indep and all(nonzero)):
        report.details["hypothesis_status"] = "improper_dependence"
    else:
        report.details["hypothesis_status"] = "met"
    if report.hypothesis_met:
        report.conclusions["tensors_independent"] = "pass" if verdict.independent else "fail"
    else:
        report.conclusions["tensors_independent"] = "not_applicable"
    return report


def check_theorem_SSL(B: Operator, C: Operator) -> TheoremReport:
    """``{I, B, C}`` independent implies ``{R^S_I, R^S_B, R^Lambda_C}`` independent (dim > 3)."""
    _require_kind(B, Kind.SELF_ADJOINT, "B")
    _require_kind(C, Kind.SKEW_ADJOINT, "C")
    if B.dim <= 3:
        raise HypothesisError("the S/S/Lambda independence theorem needs dim > 3")
    I = identity(B.ctx)
    return _independence_theorem("SSL", [I, B, C], [identity_tensor(B.ctx), build_RS(B), build_RLambda(C)])


def check_theorem_SLL(C: Operator, D: Operator) -> TheoremReport:
    """``{I, C, D}`` independent implies ``{R^S_I, R^Lambda_C, R^Lambda_D}`` independent (dim >= 3)."""
    _require_kind(C, Kind.SKEW_ADJOINT, "C")
    _require_kind(D, Kind.SKEW_ADJOINT, "D")
    if C.dim < 3:
        raise HypothesisError("the S/Lambda/Lambda independence theorem needs dim >= 3")
    I = identity(C.ctx)
    return _independence_theorem("SLL", [I, C, D], [identity_tensor(C.ctx), build_RLambda(C), build_RLambda(D)])


def necessary_conditions_SSL(B: Operator, C: Operator) -> TheoremReport:
    """If ``{R^S_I, R^S_B, R^Lambda_C}`` is properly dependent then ``BC = CB`` and rank C = 2."""
    _require_kind(B, Kind.SELF_ADJOINT, "B")
    _require_kind(C, Kind.SKEW_ADJOINT, "C")
    if B.dim < 3:
        raise HypothesisError("the commutation condition needs dim >= 3")
    ctx = B.ctx
    tensors = [identity_tensor(ctx), build_RS(B), build_RLambda(C)]
    verdict = dependence(tensors)
    commutator = B.matrix @ C.matrix - C.matrix @ B.matrix
    scale = ctx.max_abs(B.matrix) * ctx.max_abs(C.matrix)
    commute = ctx.is_zero(commutator, scale=scale)
    rank_c = rank(C)
    applies = verdict.dependent and bool(verdict.proper)
    report = TheoremReport("SSL-necessary", hypothesis_met=applies)
    report.details = {
        "dependent": verdict.dependent,
        "proper": verdict.proper,
        "coefficients": verdict.coefficients,
        "commutator_max_abs": ctx.max_abs(commutator),
        "rank_C": rank_c,
    }
    if applies:
        report.conclusions["BC_equals_CB"] = "pass" if commute else "fail"
        report.conclusions["rank_C_is_2"] = "pass" if rank_c == 2 else "fail"
    else:
        report.conclusions["BC_equals_CB"] = "not_applicable"
        report.conclusions["rank_C_is_2"] = "not_applicable"
    return report


def pairwise_exclusions(A: Operator, B: Operator) -> TheoremReport:
    """Non-equalities between two canonical tensors, chosen by the operator kinds.

    * ``A`` skew, ``B`` self-adjoint: ``R^Lambda_A != +-R^S_B`` (needs ``A != 0``, rank B >= 3)
    * both self-adjoint: ``R^S_A != -R^S_B`` (needs rank A >= 4)
    * both skew: ``R^Lambda_A != -R^Lambda_B`` (needs both nonzero)
    """
    kinds = (A.kind, B.kind)
    if kinds == (Kind.SELF_ADJOINT, Kind.SKEW_ADJOINT):
        A, B = B, A
        kinds = (A.kind, B.kind)
    details: dict = {}
    conclusions: dict = {}
    if kinds == (Kind.SKEW_ADJOINT, Kind.SELF_ADJOINT):
        if A.is_zero():
            raise HypothesisError("the skew operator must be nonzero")
        if rank(B) < 3:
            raise HypothesisError("the self-adjoint operator needs rank >= 3")
        L, S = build_RLambda(A), build_RS(B)
        name = "Lambda_vs_S"
        conclusions["R_Lambda_A_ne_R_S_B"] = "fail" if L.equals(S) else "pass"
        conclusions["R_Lambda_A_ne_minus_R_S_B"] = "fail" if L.equals(-S) else "pass"
    elif kinds == (Kind.SELF_ADJOINT, Kind.SELF_ADJOINT):
        if rank(A) < 4:
            raise HypothesisError("the first operator needs rank >= 4")
        name = "S_vs_S"
        details["operators_independent"] = operators_independent([A, B])
        conclusions["R_S_A_ne_minus_R_S_B"] = "fail" if build_RS(A).equals(-build_RS(B)) else "pass"
    elif kinds == (Kind.SKEW_ADJOINT, Kind.SKEW_ADJOINT):
        if A.is_zero() or B.is_zero():
            raise HypothesisError("both skew operators must be nonzero")
        name = "Lambda_vs_Lambda"
        conclusions["R_Lambda_A_ne_minus_R_Lambda_B"] = (
            "fail" if build_RLambda(A).equals(-build_RLambda(B)) else "pass"
        )
    else:
        raise HypothesisError("pairwise exclusions need self- or skew-adjoint operators")
    return TheoremReport(name, True, conclusions, details)
