"""Estimates of the minimal number of canonical terms needed to write a tensor.

Three families are searched: symmetric builds only, anti-symmetric builds
only, and mixed.  ``constructive_decomposition`` gives a guaranteed (but
long) decomposition from a sampled spanning set; ``minimal_search`` runs a
multi-start nonlinear least-squares search over Gram-matrix parameters for
increasing term counts.

Search conventions:

* a sign pattern is a multiset of ``(build, sign)`` pairs, so the starts for
  a pattern depend only on ``(seed, k, pattern)``; the mixed family therefore
  reproduces every run of the two single-build families exactly;
* the ``k + 1`` starts include the best ``k``-term solution of each
  sub-pattern padded with a zero operator, so best residuals never increase
  with ``k``;
* float hits are re-verified exactly after rationalizing term directions.
"""

from __future__ import annotations

import enum
import itertools
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import gmpy2
import numpy as np
from gmpy2 import mpq
from scipy.optimize import least_squares

from .chain_reduce import Decomposition
from .curvature import Build, CanonicalTerm, CurvatureTensor, act_dimension, build_RLambda, build_RS, flatten, is_act
from .errors import DomainError, SamplingError
from .linalg_core import (
    Kind,
    Mode,
    Operator,
    SeedLike,
    SpaceContext,
    identity,
    inverse,
    make_rng,
    matrix_rank,
    random_operator,
)


class Family(str, enum.Enum):
    SYM = "sym"
    SKEW = "skew"
    MIXED = "mixed"


class BoundKind(str, enum.Enum):
    EXACT = "Exact"
    HEURISTIC = "Heuristic"


_FAMILY_BUILDS = {
    Family.SYM: (Build.S,),
    Family.SKEW: (Build.LAMBDA,),
    Family.MIXED: (Build.S, Build.LAMBDA),
}


def _kind_of(build: Build) -> Kind:
    return Kind.SELF_ADJOINT if build is Build.S else Kind.SKEW_ADJOINT


def _require_act(R: CurvatureTensor) -> None:
    if not is_act(R).ok:
        raise DomainError("the target is not an algebraic curvature tensor")


# exact helpers ------------------------------------------------------------------


def _rational_sqrt(q) -> Optional[mpq]:
    q = mpq(q)
    if q < 0:
        return None
    num, den = gmpy2.mpz(q.numerator), gmpy2.mpz(q.denominator)
    if gmpy2.is_square(num) and gmpy2.is_square(den):
        return mpq(gmpy2.isqrt(num), gmpy2.isqrt(den))
    return None


def _signed_term(op: Operator, coeff) -> CanonicalTerm:
    """Term equal to ``coeff * R_op``, absorbing ``sqrt|coeff|`` into the operator when possible."""
    ctx = op.ctx
    sign = 1 if coeff > 0 else -1
    mag = abs(coeff)
    if not ctx.exact:
        return CanonicalTerm.of(op.scaled(float(np.sqrt(mag))), sign)
    root = _rational_sqrt(mag)
    if root is not None:
        return CanonicalTerm.of(op.scaled(root), sign)
    return CanonicalTerm.of(op, sign, weight=mag)


def _solve_columns(ctx: SpaceContext, M: np.ndarray, r: np.ndarray) -> Optional[np.ndarray]:
    """Solve ``M c = r`` for full-column-rank ``M``; ``None`` if inconsistent."""
    if ctx.exact:
        c = inverse(ctx, M.T @ M) @ (M.T @ r)
        return c if all(v == 0 for v in (M @ c - r)) else None
    c, *_ = np.linalg.lstsq(M, r, rcond=None)
    scale = float(np.max(np.abs(r))) if r.size else 0.0
    return c if ctx.is_zero(M @ c - r, scale=scale) else None


# constructive decomposition --------------------------------------------------------


def _basis_operator(ctx: SpaceContext, build: Build, index: int, rng: np.random.Generator) -> Operator:
    if index == 0:
        if build is Build.S:
            return identity(ctx)
        if ctx.dim >= 2:
            M = ctx.zeros((ctx.dim, ctx.dim))
            M[0, 1] = ctx.scalar(1)
            M[1, 0] = ctx.scalar(-1)
            return Operator(ctx, ctx.phi_inv @ M, Kind.SKEW_ADJOINT)
    return random_operator(ctx, _kind_of(build), seed=rng)


def constructive_decomposition(
    R: CurvatureTensor, family: Family | str = Family.SYM, seed: SeedLike = 0, max_retries: int = 20
) -> Decomposition:
    """Zero-residual decomposition with at most ``n^2 (n^2 - 1) / 12`` terms.

    Samples that many operators (the identity, or a fixed skew operator,
    first), solves for the coefficients in flattened coordinates and absorbs
    them into signed terms.  The mixed family uses the symmetric basis.
    """
    family = Family(family)
    _require_act(R)
    ctx = R.ctx
    if R.is_zero():
        return Decomposition(ctx, (), R)
    build = Build.LAMBDA if family is Family.SKEW else Build.S
    d = act_dimension(ctx.dim)
    rng = make_rng(seed)
    target = flatten(R)
    for _ in range(max_retries):
        ops = [_basis_operator(ctx, build, i, rng) for i in range(d)]
        tensors = [build_RS(op) if build is Build.S else build_RLambda(op) for op in ops]
        M = np.column_stack([flatten(T) for T in tensors])
        if matrix_rank(ctx, M) < d:
            continue
        coeffs = _solve_columns(ctx, M, target)
        if coeffs is None:
            raise DomainError("the sampled basis spans the curvature space but does not reach the target")
        terms = [_signed_term(op, c) for op, c in zip(ops, coeffs) if not ctx.is_zero(np.array([c]), R.max_abs())]
        out = Decomposition(ctx, terms, R)
        if out.holds():
            return out
    raise SamplingError(f"sampled {build.value} basis stayed rank-deficient after {max_retries} draws")


# random targets ------------------------------------------------------------------------


def random_act(ctx: SpaceContext, seed: SeedLike = None, terms: Optional[int] = None) -> CurvatureTensor:
    """Random rational combination of symmetric builds of random self-adjoint operators."""
    rng = make_rng(seed)
    m = act_dimension(ctx.dim) if terms is None else terms
    out = CurvatureTensor.zero(ctx)
    while out.is_zero():
        for _ in range(m):
            op = random_operator(ctx, Kind.SELF_ADJOINT, seed=rng)
            c = int(rng.choice([-3, -2, -1, 1, 2, 3]))
            out = out + build_RS(op).scaled(c)
    return out


# parameterization ---------------------------------------------------------------------


def _gram_basis(n: int, build: Build) -> np.ndarray:
    """Basis of symmetric (S) or skew (Lambda) n x n matrices, shape (p, n, n)."""
    mats = []
    for i in range(n):
        for j in range(i, n):
            if build is Build.LAMBDA and i == j:
                continue
            E = np.zeros((n, n))
            E[i, j] = 1.0
            E[j, i] += 1.0 if build is Build.S else -1.0
            if build is Build.S and i == j:
                E[i, i] = 1.0
            mats.append(E)
    return np.array(mats).reshape(-1, n, n)


def _tensor_from_gram(G: np.ndarray, build: Build) -> np.ndarray:
    T = np.einsum("xw,yz->xyzw", G, G) - np.einsum("xz,yw->xyzw", G, G)
    if build is Build.LAMBDA:
        T = T - 2.0 * np.einsum("xy,zw->xyzw", G, G)
    return T


def _tensor_jacobian(G: np.ndarray, E: np.ndarray, build: Build) -> np.ndarray:
    """Derivatives of the build tensor along each basis direction ``E[p]``, shape (p, n^4)."""
    J = (
        np.einsum("pxw,yz->pxyzw", E, G)
        + np.einsum("xw,pyz->pxyzw", G, E)
        - np.einsum("pxz,yw->pxyzw", E, G)
        - np.einsum("xz,pyw->pxyzw", G, E)
    )
    if build is Build.LAMBDA:
        J = J - 2.0 * (np.einsum("pxy,zw->pxyzw", E, G) + np.einsum("xy,pzw->pxyzw", G, E))
    return J.reshape(E.shape[0], -1)


Pattern = tuple  # sorted tuple of (build, sign) pairs


def _patterns(family: Family, k: int) -> list[Pattern]:
    types = [(b, s) for b in _FAMILY_BUILDS[family] for s in (1, -1)]
    return [tuple(p) for p in itertools.combinations_with_replacement(types, k)]


def _pattern_codes(pattern: Pattern) -> list[int]:
    return [2 * (b is Build.LAMBDA) + (s < 0) for b, s in pattern]


class _Problem:
    def __init__(self, target: np.ndarray, n: int, pattern: Pattern):
        self.target = target
        self.n = n
        self.pattern = pattern
        self.bases = [_gram_basis(n, b) for b, _ in pattern]
        self.sizes = [E.shape[0] for E in self.bases]
        self.offsets = np.cumsum([0] + self.sizes)

    @property
    def size(self) -> int:
        return int(self.offsets[-1])

    def grams(self, theta: np.ndarray) -> list[np.ndarray]:
        return [
            np.tensordot(theta[self.offsets[i] : self.offsets[i + 1]], E, axes=1)
            for i, E in enumerate(self.bases)
        ]

    def residual(self, theta: np.ndarray) -> np.ndarray:
        total = np.zeros(self.n**4)
        for G, (b, s) in zip(self.grams(theta), self.pattern):
            total += s * _tensor_from_gram(G, b).reshape(-1)
        return total - self.target

    def jacobian(self, theta: np.ndarray) -> np.ndarray:
        cols = [s * _tensor_jacobian(G, E, b) for G, E, (b, s) in zip(self.grams(theta), self.bases, self.pattern)]
        return np.concatenate(cols, axis=0).T

    def pad(self, sub_pattern: Pattern, sub_theta: np.ndarray) -> np.ndarray:
        """Embed a solution for ``sub_pattern`` (one element fewer) with a zero extra term."""
        out = np.zeros(self.size)
        sub_sizes = [_gram_basis(self.n, b).shape[0] for b, _ in sub_pattern]
        sub_offsets = np.cumsum([0] + sub_sizes)
        used = [False] * len(sub_pattern)
        for i, elem in enumerate(self.pattern):
            for j, sub in enumerate(sub_pattern):
                if not used[j] and sub == elem:
                    used[j] = True
                    out[self.offsets[i] : self.offsets[i + 1]] = sub_theta[sub_offsets[j] : sub_offsets[j + 1]]
                    break
        return out


def _sub_patterns(pattern: Pattern) -> list[Pattern]:
    out = []
    for i in range(len(pattern)):
        sub = pattern[:i] + pattern[i + 1 :]
        if sub not in out:
            out.append(sub)
    return out


def _run_pattern(problem: _Problem, starts: list[np.ndarray], threshold: float):
    best_theta, best_res = None, np.inf
    for x0 in starts:
        r0 = float(np.max(np.abs(problem.residual(x0))))
        sol = least_squares(
            problem.residual, x0, jac=problem.jacobian, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=400
        )
        res = float(np.max(np.abs(sol.fun)))
        theta = sol.x
        if r0 < res:
            theta, res = x0, r0
        if res < best_res:
            best_theta, best_res = theta, res
        if best_res < threshold:
            break
    return best_theta, best_res


# exact re-verification -----------------------------------------------------------------


def _rationalize_matrix(M: np.ndarray, max_den: int) -> np.ndarray:
    return np.array([[mpq(Fraction(float(v)).limit_denominator(max_den)) for v in row] for row in M], dtype=object)


def _exact_target(R: CurvatureTensor) -> Optional[tuple[SpaceContext, np.ndarray]]:
    ctx = R.ctx
    if ctx.exact:
        return ctx, flatten(R)
    phi = _rationalize_matrix(ctx.phi, 10**6)
    entries = np.array([mpq(Fraction(float(v)).limit_denominator(10**6)) for v in flatten(R)], dtype=object)
    if np.max(np.abs(entries.astype(float) - flatten(R))) > 1e-12 * (1 + R.max_abs()):
        return None
    try:
        ectx = SpaceContext(ctx.dim, phi, Mode.EXACT)
    except Exception:
        return None
    return ectx, entries


def _refine_exact(R: CurvatureTensor, grams: Sequence[np.ndarray], pattern: Pattern) -> Optional[list[CanonicalTerm]]:
    """Rationalize each term direction, then solve exactly for the term coefficients."""
    exact = _exact_target(R)
    if exact is None:
        return None
    ectx, r = exact
    for max_den in (1, 12, 1000, 10**6):
        ops = []
        for G, (b, _) in zip(grams, pattern):
            scale = float(np.max(np.abs(G)))
            if scale == 0.0:
                continue
            Gq = _rationalize_matrix(G / scale, max_den)
            Gq = (Gq + Gq.T) / 2 if b is Build.S else (Gq - Gq.T) / 2
            # G = A^T phi, so A = phi^{-1} G^T
            ops.append(Operator(ectx, ectx.phi_inv @ Gq.T, _kind_of(b)))
        if not ops:
            continue
        tensors = [build_RS(op) if op.kind is Kind.SELF_ADJOINT else build_RLambda(op) for op in ops]
        M = np.column_stack([flatten(T) for T in tensors])
        if matrix_rank(ectx, M) < len(ops):
            continue
        coeffs = _solve_columns(ectx, M, r)
        if coeffs is None:
            continue
        return [_signed_term(op, c) for op, c in zip(ops, coeffs) if c != 0]
    return None


def _float_terms(ctx: SpaceContext, grams: Sequence[np.ndarray], pattern: Pattern) -> list[CanonicalTerm]:
    fctx = ctx.with_mode(Mode.FLOAT) if ctx.exact else ctx
    phi_inv = np.asarray(fctx.phi_inv, dtype=float)
    out = []
    for G, (b, s) in zip(grams, pattern):
        out.append(CanonicalTerm(b, s, Operator(fctx, phi_inv @ G.T, _kind_of(b))))
    return out


# minimal search ----------------------------------------------------------------------


@dataclass
class DecompositionReport:
    target: CurvatureTensor
    best: Decomposition
    k: int
    residual: float
    bound_kind: BoundKind
    family: Family
    found: bool = True
    source: str = "search"
    verified_exact: bool = False
    certificate: Optional[str] = None
    per_k: list = field(default_factory=list)
    seed: Optional[int] = None

    def to_dict(self) -> dict:
        from .serialization import term_to_json, tensor_to_json

        n = self.target.dim
        return {
            "family": self.family.value,
            "k": self.k,
            "found": self.found,
            "source": self.source,
            "residual": self.residual,
            "bound_kind": self.bound_kind.value,
            "verified_exact": self.verified_exact,
            "certificate": self.certificate,
            "per_k": self.per_k,
            "seed": self.seed,
            "reference_bounds": {
                "constructive_dim_A": act_dimension(n),
                "cited_symmetric_bound": n * (n + 1) // 2,
            },
            "method": "multi-start least squares over Gram-matrix parameters",
            "target": tensor_to_json(self.target),
            "terms": [term_to_json(t) for t in self.best.terms],
        }


def _starts(problem: _Problem, rng: np.random.Generator, budget: int, padded: list[np.ndarray]) -> list[np.ndarray]:
    starts = list(padded)
    for _ in range(budget):
        starts.append(rng.standard_normal(problem.size))
    return starts


def _search_result(R: CurvatureTensor, grams: list, pattern: Pattern, raw: np.ndarray):
    """Best decomposition for a float hit, exactly verified when possible."""
    ctx = R.ctx
    n = ctx.dim
    exact_terms = _refine_exact(R, grams, pattern)
    if exact_terms is not None:
        ectx = exact_terms[0].ctx
        exact_target = R if ctx.exact else CurvatureTensor(ectx, _exact_target(R)[1].reshape((n,) * 4))
        best = Decomposition(ectx, exact_terms, exact_target)
        if best.holds():
            return best, True
    fterms = _float_terms(ctx, grams, pattern)
    fctx = fterms[0].ctx
    ftarget = CurvatureTensor(fctx, raw.reshape((n,) * 4)) if ctx.exact else R
    return Decomposition(fctx, fterms, ftarget), False


def _float_residual(decomp: Decomposition, raw: np.ndarray) -> float:
    return float(np.max(np.abs(np.asarray(flatten(decomp.total()), dtype=float) - raw)))


def minimal_search(
    R: CurvatureTensor,
    family: Family | str = Family.SYM,
    k_max: int = 3,
    budget: int = 8,
    seed: Optional[int] = 0,
) -> DecompositionReport:
    """Smallest ``k <= k_max`` for which a ``k``-term decomposition is found.

    ``budget`` is the number of random starts per sign pattern.  A hit is a
    residual below ``1e-7 * (1 + max|R|)``.  Falls back to the constructive
    decomposition when nothing is found.
    """
    family = Family(family)
    _require_act(R)
    ctx = R.ctx
    n = ctx.dim
    base_seed = 0 if seed is None else int(seed)
    if R.is_zero():
        return DecompositionReport(
            R, Decomposition(ctx, (), R), 0, 0.0, BoundKind.EXACT, family, certificate="target is zero", seed=seed
        )

    raw = np.asarray(flatten(R), dtype=float)
    scale = float(np.max(np.abs(raw)))
    target = raw / scale
    threshold = 1e-7 * (1.0 + scale) / scale
    per_k = []
    best_by_pattern: dict = {(): np.zeros(0)}
    for k in range(1, k_max + 1):
        level_theta, level_res, level_pattern = None, np.inf, None
        new_best: dict = {}
        for pattern in _patterns(family, k):
            problem = _Problem(target, n, pattern)
            padded = [problem.pad(sub, best_by_pattern[sub]) for sub in _sub_patterns(pattern) if sub in best_by_pattern]
            rng = np.random.default_rng([base_seed, k] + _pattern_codes(pattern))
            theta, res = _run_pattern(problem, _starts(problem, rng, budget, padded), threshold)
            new_best[pattern] = theta
            if res < level_res:
                level_theta, level_res, level_pattern = theta, res, pattern
            if res < threshold:
                break
        best_by_pattern = new_best
        hit = level_res < threshold
        entry = {"k": k, "best_residual": level_res * scale, "patterns_tried": len(new_best), "hit": hit}
        per_k.append(entry)
        if not hit:
            continue
        grams = [G * np.sqrt(scale) for G in _Problem(target, n, level_pattern).grams(level_theta)]
        best, verified = _search_result(R, grams, level_pattern, raw)
        entry["verified_exact"] = verified
        k_found = len(best.terms)
        bound, certificate = BoundKind.HEURISTIC, None
        if k_found == 1 and verified:
            bound, certificate = BoundKind.EXACT, "one exactly verified term reaches a nonzero target"
        elif k_found == 1 and n == 2:
            bound, certificate = BoundKind.EXACT, "one term reaches a nonzero target and the curvature space is one-dimensional"
        return DecompositionReport(
            R, best, k_found, _float_residual(best, raw), bound, family,
            verified_exact=verified, certificate=certificate, per_k=per_k, seed=seed,
        )

    fallback = constructive_decomposition(R, family, seed=base_seed)
    return DecompositionReport(
        R, fallback, len(fallback.terms), _float_residual(fallback, raw), BoundKind.HEURISTIC, family,
        found=False, source="constructive_fallback", verified_exact=ctx.exact, per_k=per_k, seed=seed,
    )


# conjecture campaign -------------------------------------------------------------------


def conjecture_campaign(n: int, trials: int, seed: int = 0, k_max: int = 3, budget: int = 4) -> dict:
    """Compare the mixed and symmetric-only estimates on random targets."""
    if n not in (2, 3):
        raise DomainError("the campaign is defined for n = 2 and n = 3")
    ctx = SpaceContext(n, mode=Mode.EXACT)
    gaps: Counter = Counter()
    witnesses, heuristic_gaps, rows = [], [], []
    for t in range(trials):
        R = random_act(ctx, seed=[seed, t])
        nu = minimal_search(R, Family.SYM, k_max=k_max, budget=budget, seed=seed)
        mu = minimal_search(R, Family.MIXED, k_max=k_max, budget=budget, seed=seed)
        gap = nu.k - mu.k
        gaps[gap] += 1
        row = {"trial": t, "nu_hat": nu.k, "mu_hat": mu.k, "nu_bound": nu.bound_kind.value, "mu_bound": mu.bound_kind.value}
        rows.append(row)
        if gap > 0:
            record = dict(row, target=_target_json(R))
            if nu.bound_kind is BoundKind.EXACT:
                witnesses.append(record)
            else:
                heuristic_gaps.append(record)
    return {
        "n": n,
        "trials": trials,
        "seed": seed,
        "k_max": k_max,
        "budget": budget,
        "gap_distribution": {str(k): v for k, v in sorted(gaps.items())},
        "exact_witnesses": witnesses,
        "heuristic_gaps": heuristic_gaps,
        "rows": rows,
    }


def _target_json(R: CurvatureTensor) -> dict:
    from .serialization import tensor_to_json

    return tensor_to_json(R)
