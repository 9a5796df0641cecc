"""Pullbacks of bilinear forms and the structure-group predicates.

A form is carried by an operator ``B`` via ``tau(x, y) = phi(Bx, y)``.
Sampling of form-preserving maps stays rational: isometries are Cayley
transforms of Lie-algebra elements composed with symplectic transvections.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from gmpy2 import mpq

from .curvature import build_RLambda, build_RS, precompose
from .errors import DomainError, HypothesisError
from .linalg_core import (
    Kind,
    Operator,
    SeedLike,
    SpaceContext,
    congruence,
    inverse,
    is_invertible,
    make_rng,
    matrix_rank,
    nullspace,
    random_invertible,
    rank,
)


class Symmetry(str, enum.Enum):
    SYMMETRIC = "symmetric"
    ANTISYMMETRIC = "antisymmetric"


@dataclass(frozen=True, eq=False)
class FormView:
    op: Operator
    symmetry: Optional[Symmetry] = None

    def __post_init__(self) -> None:
        if self.op.kind is Kind.SELF_ADJOINT:
            expected = Symmetry.SYMMETRIC
        elif self.op.kind is Kind.SKEW_ADJOINT:
            expected = Symmetry.ANTISYMMETRIC
        else:
            raise DomainError("a form view needs a self- or skew-adjoint operator")
        if self.symmetry is not None and Symmetry(self.symmetry) is not expected:
            raise DomainError(f"operator kind {self.op.kind.value} does not give a {self.symmetry} form")
        object.__setattr__(self, "symmetry", expected)

    @property
    def ctx(self) -> SpaceContext:
        return self.op.ctx

    def gram(self) -> np.ndarray:
        """Matrix ``T`` with ``tau(x, y) = x^T T y``."""
        return self.op.matrix.T @ self.ctx.phi

    def __call__(self, x: np.ndarray, y: np.ndarray):
        return self.ctx.inner(self.op.apply(x), y)

    def tensor(self):
        return build_RS(self.op) if self.symmetry is Symmetry.SYMMETRIC else build_RLambda(self.op)


def pullback_form(A: Operator, tau: FormView) -> FormView:
    """``(A* tau)(x, y) = tau(Ax, Ay)``, carried by the operator ``A* B A``."""
    return FormView(congruence(A, tau.op))


def _require_invertible(A: Operator) -> None:
    if not is_invertible(A):
        raise DomainError("structure groups consist of invertible maps")


def in_G_tau(A: Operator, tau: FormView) -> bool:
    _require_invertible(A)
    return pullback_form(A, tau).op.equals(tau.op)


def in_G_pm_tau(A: Operator, tau: FormView) -> Optional[int]:
    """``+1`` if ``A* tau = tau``, ``-1`` if ``A* tau = -tau``, otherwise ``None``."""
    _require_invertible(A)
    pulled = pullback_form(A, tau).op
    if pulled.equals(tau.op):
        return 1
    if pulled.equals(-tau.op):
        return -1
    return None


def in_G_R_tau(A: Operator, tau: FormView) -> bool:
    """Whether precomposition with ``A`` fixes the curvature tensor of ``tau``."""
    _require_invertible(A)
    R = tau.tensor()
    return precompose(A, R).equals(R)


# sampling -----------------------------------------------------------------


def _small_rational(ctx: SpaceContext, rng: np.random.Generator):
    num = int(rng.choice([-2, -1, 1, 2]))
    den = int(rng.choice([1, 2]))
    return mpq(num, den) if ctx.exact else num / den


def isometry_algebra(tau: FormView) -> list[np.ndarray]:
    """Basis of ``{S : S^T T + T S = 0}``, the maps whose Cayley transform preserves ``tau``."""
    ctx = tau.ctx
    n = ctx.dim
    T = tau.gram()
    cols = []
    for i in range(n):
        for j in range(n):
            E = ctx.zeros((n, n))
            E[i, j] = mpq(1) if ctx.exact else 1.0
            cols.append((E.T @ T + T @ E).reshape(-1))
    L = np.column_stack(cols)
    return [v.reshape(n, n) for v in nullspace(ctx, L)]


def cayley(ctx: SpaceContext, S: np.ndarray) -> np.ndarray:
    I = ctx.eye()
    return (I - S) @ inverse(ctx, I + S)


def transvection(tau: FormView, v: np.ndarray, c) -> np.ndarray:
    """``x -> x + c tau(v, x) v``; preserves any anti-symmetric form."""
    ctx = tau.ctx
    T = tau.gram()
    return ctx.eye() + c * np.outer(v, v @ T)


def random_isometry(tau: FormView, seed: SeedLike = None, max_tries: int = 50) -> Operator:
    """A random ``A`` with ``A* tau = tau``."""
    ctx = tau.ctx
    rng = make_rng(seed)
    algebra = isometry_algebra(tau)
    for _ in range(max_tries):
        S = ctx.zeros((ctx.dim, ctx.dim))
        for N in algebra:
            S = S + N * _small_rational(ctx, rng) * (mpq(1, 2) if ctx.exact else 0.5)
        if not ctx.exact:
            # keep float samples near the identity so round-off stays small
            S = S / (2.0 * max(1.0, np.linalg.norm(S, 2)))
        # the Cayley transform is invertible only when both I + S and I - S are
        if matrix_rank(ctx, ctx.eye() + S) < ctx.dim or matrix_rank(ctx, ctx.eye() - S) < ctx.dim:
            continue
        M = cayley(ctx, S)
        if tau.symmetry is Symmetry.ANTISYMMETRIC:
            for _ in range(int(rng.integers(1, 3))):
                v = ctx.asarray(rng.integers(-2, 3, size=ctx.dim))
                c = _small_rational(ctx, rng)
                if not ctx.exact:
                    c = c / (1.0 + float(v @ v) * np.linalg.norm(tau.gram(), 2))
                M = M @ transvection(tau, v, c)
        return Operator(ctx, M, Kind.GENERAL)
    raise DomainError("could not sample an isometry")


def symplectic_basis(tau: FormView) -> tuple[list[tuple[np.ndarray, np.ndarray]], list[np.ndarray]]:
    """Pairs ``(u, v)`` with ``tau(u, v) = 1`` spanning a complement of the radical, plus a radical basis."""
    if tau.symmetry is not Symmetry.ANTISYMMETRIC:
        raise DomainError("symplectic bases exist only for anti-symmetric forms")
    ctx = tau.ctx
    T = tau.gram()
    rest = [ctx.basis_vector(i) for i in range(ctx.dim)]
    pairs = []
    while True:
        best = None
        for i in range(len(rest)):
            for j in range(i + 1, len(rest)):
                val = rest[i] @ T @ rest[j]
                if ctx.exact:
                    if val != 0:
                        best = (i, j, val)
                        break
                elif abs(val) > ctx.tolerance and (best is None or abs(val) > abs(best[2])):
                    best = (i, j, val)
            if best is not None and ctx.exact:
                break
        if best is None:
            break
        i, j, val = best
        u, v = rest[i], rest[j] / val
        others = [w for k, w in enumerate(rest) if k not in (i, j)]
        rest = [w - (w @ T @ v) * u + (w @ T @ u) * v for w in others]
        pairs.append((u, v))
    return pairs, rest


def anti_isometry(tau: FormView) -> Operator:
    """An invertible ``F`` with ``F* tau = -tau``: negate the second vector of each symplectic pair."""
    ctx = tau.ctx
    pairs, radical = symplectic_basis(tau)
    cols, signs = [], []
    for u, v in pairs:
        cols += [u, v]
        signs += [1, -1]
    cols += radical
    signs += [1] * len(radical)
    P = np.column_stack(cols)
    D = ctx.zeros((ctx.dim, ctx.dim))
    for i, s in enumerate(signs):
        D[i, i] = ctx.scalar(s)
    return Operator(ctx, P @ D @ inverse(ctx, P), Kind.GENERAL)


POOLS = ("isometry", "anti_isometry", "generic")

# Float round-off in A*R grows like cond(A)^4, so float-mode samples are
# redrawn until they are well conditioned; exact mode takes every sample.
FLOAT_MAX_CONDITION = 50.0
FLOAT_MAX_REDRAWS = 200


@dataclass
class StructureGroupReport:
    rank: int
    trials: int
    seed: Optional[int]
    pools: dict = field(default_factory=dict)
    equivalence_holds: bool = True
    generic_nonmembers_fail_both: bool = True
    counterexample: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "trials": self.trials,
            "seed": self.seed,
            "pools": self.pools,
            "equivalence_holds": self.equivalence_holds,
            "generic_nonmembers_fail_both": self.generic_nonmembers_fail_both,
            "counterexample": self.counterexample,
        }


def _pool_sample(pool: str, tau: FormView, F: Operator, rng: np.random.Generator) -> Operator:
    if tau.ctx.exact:
        return _draw(pool, tau, F, rng)
    for _ in range(FLOAT_MAX_REDRAWS):
        A = _draw(pool, tau, F, rng)
        if np.linalg.cond(A.matrix) <= FLOAT_MAX_CONDITION:
            return A
    raise DomainError("could not draw a well-conditioned sample in float mode")


def _draw(pool: str, tau: FormView, F: Operator, rng: np.random.Generator) -> Operator:
    if pool == "isometry":
        return random_isometry(tau, rng)
    if pool == "anti_isometry":
        return F @ random_isometry(tau, rng)
    return random_invertible(tau.ctx, rng)


def verify_structure_theorem(tau: FormView, trials: int = 200, seed: Optional[int] = 0) -> StructureGroupReport:
    """Sample three pools of invertible maps and compare the two membership predicates.

    ``trials`` samples are drawn per pool.  A sample on which exactly one
    predicate holds is recorded as a counterexample.
    """
    if tau.symmetry is not Symmetry.ANTISYMMETRIC:
        raise HypothesisError("the structure theorem concerns anti-symmetric forms")
    r = rank(tau.op)
    if r < 4:
        raise HypothesisError(f"rank of the form is {r}, the theorem needs rank >= 4")
    F = anti_isometry(tau)
    report = StructureGroupReport(rank=r, trials=trials, seed=seed)
    for p, pool in enumerate(POOLS):
        counts = {"samples": 0, "in_G_pm": 0, "in_G_R": 0, "agree": 0}
        for t in range(trials):
            rng = np.random.default_rng([0 if seed is None else seed, p, t])
            A = _pool_sample(pool, tau, F, rng)
            sign = in_G_pm_tau(A, tau)
            fixes = in_G_R_tau(A, tau)
            counts["samples"] += 1
            counts["in_G_pm"] += sign is not None
            counts["in_G_R"] += fixes
            if pool == "generic" and sign is None and fixes:
                report.generic_nonmembers_fail_both = False
            if (sign is not None) == fixes:
                counts["agree"] += 1
            else:
                report.equivalence_holds = False
                if report.counterexample is None:
                    report.counterexample = {
                        "pool": pool,
                        "trial": t,
                        "in_G_pm": sign,
                        "in_G_R": fixes,
                        "matrix": [[str(v) for v in row] for row in A.matrix],
                    }
        report.pools[pool] = counts
    return report
