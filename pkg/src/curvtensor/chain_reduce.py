"""Operators arranged in chain complexes, and kernel reduction of decompositions.

Every analysis first verifies the premise sum entrywise and raises
:class:`PremiseError` when it does not vanish; conclusions are never reported
for unverified premises.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .curvature import CurvatureTensor, canonical_tensor, is_act, precompose
from .dependence import TheoremReport
from .errors import ContextError, DomainError, HypothesisError, KernelError, NotAChainError, PremiseError
from .linalg_core import (
    Kind,
    Operator,
    SpaceContext,
    congruence,
    is_invertible,
    kernel_basis,
    operators_independent,
    orthogonal_projection,
    rank,
)


def _product_vanishes(second: Operator, first: Operator) -> bool:
    ctx = first.ctx
    P = second.matrix @ first.matrix
    scale = ctx.max_abs(second.matrix) * ctx.max_abs(first.matrix)
    return ctx.is_zero(P, scale=scale)


@dataclass(frozen=True)
class ChainCheck:
    ok: bool
    failing_pair: Optional[tuple[int, int]] = None

    def __bool__(self) -> bool:
        return self.ok

    def to_dict(self) -> dict:
        return {"is_chain": self.ok, "failing_pair": None if self.failing_pair is None else list(self.failing_pair)}


def is_chain(ops: Sequence[Operator]) -> ChainCheck:
    """Whether ``ops[i+1] @ ops[i] == 0`` for every consecutive pair (pairs are 1-based)."""
    ops = list(ops)
    for a, b in zip(ops, ops[1:]):
        a._check(b)
    for i in range(len(ops) - 1):
        if not _product_vanishes(ops[i + 1], ops[i]):
            return ChainCheck(False, (i + 1, i + 2))
    return ChainCheck(True)


@dataclass(frozen=True)
class ChainComplex:
    ops: tuple

    def __post_init__(self) -> None:
        ops = tuple(self.ops)
        if not ops:
            raise ValueError("a chain needs at least one operator")
        check = is_chain(ops)
        if not check:
            i, j = check.failing_pair
            raise NotAChainError(f"operator {j} composed with operator {i} is nonzero")
        object.__setattr__(self, "ops", ops)

    @property
    def ctx(self) -> SpaceContext:
        return self.ops[0].ctx

    def exact_at(self, i: int) -> bool:
        """Exactness at the target of ``ops[i]`` (0-based): ``dim Im ops[i] == dim ker ops[i+1]``."""
        return rank(self.ops[i]) == self.ctx.dim - rank(self.ops[i + 1])

    def is_exact(self) -> bool:
        return all(self.exact_at(i) for i in range(len(self.ops) - 1))


# decompositions -------------------------------------------------------------


@dataclass(frozen=True)
class Decomposition:
    """``target = sum of term tensors``; the target is optional."""

    ctx: SpaceContext
    terms: tuple = ()
    target: Optional[CurvatureTensor] = None

    def __post_init__(self) -> None:
        terms = tuple(self.terms)
        for t in terms:
            if not self.ctx.compatible(t.ctx):
                raise ContextError("term lives in a different context")
        if self.target is not None and not self.ctx.compatible(self.target.ctx):
            raise ContextError("target lives in a different context")
        object.__setattr__(self, "terms", terms)

    def __len__(self) -> int:
        return len(self.terms)

    def total(self) -> CurvatureTensor:
        out = CurvatureTensor.zero(self.ctx)
        for t in self.terms:
            out = out + t.tensor()
        return out

    def residual(self):
        """``max |target - sum|``; zero when no target is attached."""
        if self.target is None:
            return self.ctx.scalar(0)
        return self.ctx.max_abs(self.target.entries - self.total().entries)

    def holds(self) -> bool:
        return self.target is None or self.target.equals(self.total())

    def with_target(self, target: Optional[CurvatureTensor] = None) -> "Decomposition":
        return Decomposition(self.ctx, self.terms, self.total() if target is None else target)


def _require_canonical_kind(op: Operator, name: str) -> None:
    if op.kind not in (Kind.SELF_ADJOINT, Kind.SKEW_ADJOINT):
        raise HypothesisError(f"{name} must be self- or skew-adjoint, got {op.kind.value}")


def _check_sign(s: int, name: str) -> int:
    if s not in (1, -1):
        raise ValueError(f"{name} must be +1 or -1, got {s!r}")
    return int(s)


def _premise(ops: Sequence[Operator], signs: Sequence[int]):
    """Verify ``sum signs[i] * R_{ops[i]} = 0`` with builds chosen by kind; returns the entry scale."""
    ctx = ops[0].ctx
    total = CurvatureTensor.zero(ctx)
    scale = ctx.scalar(0)
    for op, s in zip(ops, signs):
        T = canonical_tensor(op)
        scale = max(scale, T.max_abs())
        total = total + T.scaled(s)
    if not total.is_zero(scale=scale):
        raise PremiseError(f"premise sum does not vanish (max entry {float(total.max_abs()):.3g})")
    return scale


def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


def _pm_equal(X: np.ndarray, Y: np.ndarray, ctx: SpaceContext) -> Optional[int]:
    scale = max(ctx.max_abs(X), ctx.max_abs(Y))
    if ctx.is_zero(X - Y, scale=scale):
        return 1
    if ctx.is_zero(X + Y, scale=scale):
        return -1
    return None


def analyze_three_chain(A: Operator, B: Operator, C: Operator, eps: int, delta: int) -> TheoremReport:
    """Chain ``V -A-> V -B-> V -C-> V`` with ``R_A + eps R_B + delta R_C = 0``.

    Conclusions: ``R_B = 0``; under rank(A), rank(C) >= 4 also ``C = +-A`` and
    ``delta = -1``; for an exact chain with skew ``B``, ``A`` and ``C`` invertible.
    """
    for op, name in ((A, "A"), (B, "B"), (C, "C")):
        _require_canonical_kind(op, name)
    eps, delta = _check_sign(eps, "eps"), _check_sign(delta, "delta")
    chain = ChainComplex((A, B, C))
    scale = _premise([A, B, C], [1, eps, delta])

    ctx = A.ctx
    rank_a, rank_b, rank_c = rank(A), rank(B), rank(C)
    exact = chain.is_exact()
    report = TheoremReport("three_chain", hypothesis_met=True)
    report.conclusions["R_B_zero"] = _status(canonical_tensor(B).is_zero(scale=scale))
    if rank_a >= 4 and rank_c >= 4:
        report.conclusions["C_equals_pm_A"] = _status(_pm_equal(C.matrix, A.matrix, ctx) is not None)
        report.conclusions["delta_is_minus_one"] = _status(delta == -1)
    else:
        report.conclusions["C_equals_pm_A"] = "not_applicable"
        report.conclusions["delta_is_minus_one"] = "not_applicable"
    if exact and B.kind is Kind.SKEW_ADJOINT:
        report.conclusions["A_C_invertible"] = _status(is_invertible(A) and is_invertible(C))
    else:
        report.conclusions["A_C_invertible"] = "not_applicable"
    report.details = {
        "ranks": [rank_a, rank_b, rank_c],
        "exact": exact,
        "signs": [eps, delta],
        "kinds": [A.kind.value, B.kind.value, C.kind.value],
        # recorded only: without the rank gate the operators need not be dependent
        "operators_dependent": not operators_independent([A, B, C]),
    }
    return report


def _star_orientation(A: Operator, Bs: Sequence[Operator]) -> list[str]:
    out = []
    if all(_product_vanishes(Bi, A) for Bi in Bs):
        out.append("image_of_A_in_kernels")
    if all(_product_vanishes(A, Bi) for Bi in Bs):
        out.append("images_in_kernel_of_A")
    return out


def analyze_star(A: Operator, Bs: Sequence[Operator], eps_list: Sequence[int]) -> TheoremReport:
    """``k`` length-two chains through ``A`` with ``R_A + sum eps_i R_{B_i} = 0``.

    Conclusions: ``R_A = 0``; if ``A`` is skew, ``A = 0`` and every ``B_i``
    on an exact leg is invertible.
    """
    Bs = list(Bs)
    if len(Bs) != len(eps_list):
        raise ValueError("need one sign per B_i")
    if not Bs:
        raise ValueError("need at least one B_i")
    _require_canonical_kind(A, "A")
    for i, Bi in enumerate(Bs, 1):
        _require_canonical_kind(Bi, f"B_{i}")
        A._check(Bi)
    signs = [_check_sign(s, "eps_i") for s in eps_list]
    orientation = _star_orientation(A, Bs)
    if not orientation:
        raise NotAChainError("neither B_i A = 0 for all i nor A B_i = 0 for all i")
    scale = _premise([A] + Bs, [1] + signs)

    n = A.dim
    rank_a = rank(A)
    ranks_b = [rank(Bi) for Bi in Bs]
    exact_legs = []
    for rb in ranks_b:
        leg = False
        if "image_of_A_in_kernels" in orientation:
            leg |= rank_a == n - rb
        if "images_in_kernel_of_A" in orientation:
            leg |= rb == n - rank_a
        exact_legs.append(leg)

    report = TheoremReport("star", hypothesis_met=True)
    report.conclusions["R_A_zero"] = _status(canonical_tensor(A).is_zero(scale=scale))
    if A.kind is Kind.SKEW_ADJOINT:
        report.conclusions["A_zero"] = _status(A.is_zero())
        for i, (leg, Bi) in enumerate(zip(exact_legs, Bs), 1):
            key = f"B_{i}_invertible"
            report.conclusions[key] = _status(is_invertible(Bi)) if leg else "not_applicable"
    else:
        report.conclusions["A_zero"] = "not_applicable"
    report.details = {
        "orientation": orientation,
        "rank_A": rank_a,
        "ranks_B": ranks_b,
        "exact_legs": exact_legs,
        "signs": signs,
    }
    return report


def analyze_four_chain(
    A: Operator, B: Operator, C: Operator, D: Operator, eps1: int, eps2: int, eps3: int
) -> TheoremReport:
    """Chain ``A, B, C, D`` with rank(B), rank(C) >= 4 and
    ``R_A + eps1 R_B + eps2 R_C + eps3 R_D = 0``.
    """
    for op, name in ((A, "A"), (B, "B"), (C, "C"), (D, "D")):
        _require_canonical_kind(op, name)
    signs = [_check_sign(s, f"eps{i}") for i, s in enumerate((eps1, eps2, eps3), 1)]
    ChainComplex((A, B, C, D))
    rank_b, rank_c = rank(B), rank(C)
    if rank_b < 4 or rank_c < 4:
        raise HypothesisError(f"need rank(B) >= 4 and rank(C) >= 4, got {rank_b} and {rank_c}")
    _premise([A, B, C, D], [1] + signs)

    ctx = A.ctx
    Bm, Cm = B.matrix, C.matrix
    b_sign = _pm_equal(Bm @ Bm @ Bm, Bm @ D.matrix @ Bm, ctx)
    c_sign = _pm_equal(Cm @ Cm @ Cm, Cm @ A.matrix @ Cm, ctx)
    report = TheoremReport("four_chain", hypothesis_met=True)
    report.conclusions["A_C_same_build"] = _status(A.kind is C.kind)
    report.conclusions["B_D_same_build"] = _status(B.kind is D.kind)
    report.conclusions["B3_equals_pm_BDB"] = _status(b_sign is not None)
    report.conclusions["C3_equals_pm_CAC"] = _status(c_sign is not None)
    report.conclusions["eps2_is_minus_one"] = _status(signs[1] == -1)
    report.conclusions["eps1_equals_minus_eps3"] = _status(signs[0] == -signs[2])
    report.details = {
        "ranks": [rank(A), rank_b, rank_c, rank(D)],
        "signs": signs,
        "kinds": [op.kind.value for op in (A, B, C, D)],
        "B3_BDB_sign": b_sign,
        "C3_CAC_sign": c_sign,
    }
    return report


# kernel reduction -------------------------------------------------------------


def _reduction_map(decomp: Decomposition, pivot_index: int, A: Optional[Operator]) -> Operator:
    if not 0 <= pivot_index < len(decomp.terms):
        raise IndexError(f"pivot index {pivot_index} out of range for {len(decomp.terms)} terms")
    B = decomp.terms[pivot_index].op
    kernel = kernel_basis(B)
    if not kernel:
        raise KernelError("the pivot operator is invertible")
    if A is None:
        return orthogonal_projection(decomp.ctx, kernel)
    B._check(A)
    if not _product_vanishes(B, A):
        raise DomainError("the image of the reduction map is not inside the kernel of the pivot")
    return A


def _reduce(decomp: Decomposition, pivot_index: int, A: Operator, target: CurvatureTensor) -> Decomposition:
    # A* B_i A keeps the kind of B_i, so every term stays canonical of the same build
    terms = tuple(t.with_op(congruence(A, t.op)) for i, t in enumerate(decomp.terms) if i != pivot_index)
    out = Decomposition(decomp.ctx, terms, target)
    if not out.holds():
        raise PremiseError("reduced terms do not sum to the reduced target; the input decomposition is inconsistent")
    return out


def _require_consistent(decomp: Decomposition) -> None:
    if not decomp.holds():
        raise PremiseError("decomposition terms do not sum to its target")


def reduce_by_kernel(decomp: Decomposition, pivot_index: int, A: Optional[Operator] = None) -> Decomposition:
    """Precompose with a map into ``ker B`` (``B`` the pivot operator), dropping the pivot term.

    With ``A`` omitted the phi-orthogonal projection onto ``ker B`` is used.
    The returned target is ``A* target`` and equality is re-verified entrywise.
    """
    _require_consistent(decomp)
    A = _reduction_map(decomp, pivot_index, A)
    target = decomp.target if decomp.target is not None else decomp.total()
    return _reduce(decomp, pivot_index, A, precompose(A, target))


def reduce_preserving_target(
    decomp: Decomposition, pivot_index: int, A: Optional[Operator] = None, C: Optional[Operator] = None
) -> Decomposition:
    """Reduction whose map satisfies ``A* C = +-C`` for the target ``R_C``, so the target is unchanged.

    ``C`` defaults to the operator recorded in the target's canonical provenance.
    """
    _require_consistent(decomp)
    if C is None:
        if decomp.target is None or decomp.target.canonical is None:
            raise HypothesisError("the target must be a canonical tensor R_C")
        C = decomp.target.canonical.op
    A = _reduction_map(decomp, pivot_index, A)
    if _pm_equal(congruence(A, C).matrix, C.matrix, decomp.ctx) is None:
        raise HypothesisError("the reduction map does not pull C back to +-C")
    target = decomp.target if decomp.target is not None else canonical_tensor(C)
    return _reduce(decomp, pivot_index, A, target)


def reduced_terms_are_acts(decomp: Decomposition) -> bool:
    return all(is_act(t.tensor()).ok for t in decomp.terms)
