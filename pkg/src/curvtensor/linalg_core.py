"""Dense linear algebra over an inner-product space, in two arithmetic modes.

Exact mode stores every scalar as a :class:`gmpy2.mpq` inside a numpy object
array; float mode uses plain ``float64`` arrays.  All functions here take the
space context explicitly and never mutate their inputs.

Matrix convention: ``A[i, j]`` is the coefficient of ``e_i`` in ``A(e_j)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Optional, Sequence, Union

import gmpy2
import numpy as np
from gmpy2 import mpq, mpz

from .errors import ConstraintError, ContextError, DomainError, KindError

DEFAULT_TOLERANCE = 1e-9

SeedLike = Union[None, int, np.random.Generator]

_MPQ = type(mpq(0))
_MPZ = type(mpz(0))


class Mode(str, enum.Enum):
    EXACT = "exact"
    FLOAT = "float64"


class Kind(str, enum.Enum):
    SELF_ADJOINT = "self-adjoint"
    SKEW_ADJOINT = "skew-adjoint"
    GENERAL = "general"


def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def to_rational(value: Any) -> mpq:
    """Convert ``value`` to an exact rational.

    Accepts ints, floats (converted exactly), :class:`fractions.Fraction`,
    mpq/mpz and strings such as ``"3"``, ``"-2/7"`` or ``"0.25"``.
    """
    if isinstance(value, _MPQ):
        return value
    if isinstance(value, (bool, np.bool_)):
        return mpq(int(value))
    if isinstance(value, (int, np.integer, _MPZ)):
        return mpq(int(value))
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    if isinstance(value, (float, np.floating)):
        if not np.isfinite(value):
            raise ValueError(f"non-finite scalar {value!r}")
        return mpq(float(value))
    if isinstance(value, str):
        text = value.strip()
        try:
            frac = Fraction(text)
        except ValueError as exc:
            raise ValueError(f"cannot parse rational {value!r}") from exc
        return mpq(frac.numerator, frac.denominator)
    raise TypeError(f"unsupported scalar type {type(value).__name__}")


def rational_array(data: Any) -> np.ndarray:
    arr = np.asarray(data, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    flat_in = arr.reshape(-1)
    flat_out = out.reshape(-1)
    for i, v in enumerate(flat_in):
        flat_out[i] = to_rational(v)
    return out


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SpaceContext:
    """Dimension, inner product and arithmetic mode shared by all objects.

    ``phi`` defaults to the identity form.  The form must be symmetric and
    positive definite; this is checked on construction.
    """

    dim: int
    phi: Optional[Any] = None
    mode: Mode = Mode.FLOAT
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self) -> None:
        if int(self.dim) != self.dim or self.dim < 1:
            raise ContextError(f"dimension must be a positive integer, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.tolerance < 0:
            raise ContextError("tolerance must be nonnegative")
        object.__setattr__(self, "tolerance", float(self.tolerance))

        phi = np.eye(self.dim, dtype=int) if self.phi is None else self.phi
        phi = self.asarray(phi)
        if phi.shape != (self.dim, self.dim):
            raise ContextError(f"phi has shape {phi.shape}, expected {(self.dim, self.dim)}")
        if not self.is_zero(phi - phi.T, scale=self.max_abs(phi)):
            raise ContextError("phi is not symmetric")
        if not _positive_definite(self, phi):
            raise ContextError("phi is not positive definite")
        object.__setattr__(self, "phi", _frozen(phi))
        object.__setattr__(self, "phi_inv", _frozen(inverse(self, phi)))
        object.__setattr__(self, "phi_is_identity", bool(self.is_zero(phi - self.eye(), scale=1)))

    @property
    def exact(self) -> bool:
        return self.mode is Mode.EXACT

    def with_mode(self, mode: Union[Mode, str], tolerance: Optional[float] = None) -> "SpaceContext":
        mode = Mode(mode)
        phi = self.phi
        if mode is Mode.EXACT and not self.exact:
            phi = rational_array(phi)
        return SpaceContext(self.dim, phi, mode, self.tolerance if tolerance is None else tolerance)

    def compatible(self, other: "SpaceContext") -> bool:
        if self is other:
            return True
        if self.dim != other.dim or self.mode is not other.mode:
            return False
        return bool(self.is_zero(self.phi - other.phi, scale=self.max_abs(self.phi)))

    # array helpers -------------------------------------------------------

    def asarray(self, data: Any) -> np.ndarray:
        if self.exact:
            return rational_array(data)
        arr = np.asarray(data)
        if arr.dtype.kind in "OUS":
            # mixed lists may hold "p/q" strings next to numbers
            to_float = lambda v: float(to_rational(str(v))) if isinstance(v, (str, np.str_)) else float(v)
            arr = np.vectorize(to_float, otypes=[float])(arr) if arr.size else arr.astype(float)
        return np.array(arr, dtype=float)

    def scalar(self, value: Any):
        if self.exact or isinstance(value, str):
            q = to_rational(value)
            return q if self.exact else float(q)
        return float(value)

    def zeros(self, shape) -> np.ndarray:
        if self.exact:
            out = np.empty(shape, dtype=object)
            out.fill(mpq(0))
            return out
        return np.zeros(shape)

    def eye(self, n: Optional[int] = None) -> np.ndarray:
        n = self.dim if n is None else n
        return self.asarray(np.eye(n, dtype=int))

    def basis_vector(self, i: int) -> np.ndarray:
        v = self.zeros(self.dim)
        v[i] = mpq(1) if self.exact else 1.0
        return v

    def max_abs(self, arr: np.ndarray):
        if arr.size == 0:
            return mpq(0) if self.exact else 0.0
        if self.exact:
            return max(abs(v) for v in arr.reshape(-1))
        return float(np.max(np.abs(arr)))

    def is_zero(self, arr: np.ndarray, scale=0) -> bool:
        """Exact: every entry is 0.  Float: ``max|arr| <= tol * (1 + scale)``."""
        if arr.size == 0:
            return True
        if self.exact:
            return all(v == 0 for v in arr.reshape(-1))
        return float(np.max(np.abs(arr))) <= self.tolerance * (1.0 + float(scale))

    def inner(self, x: np.ndarray, y: np.ndarray):
        return x @ self.phi @ y

    def to_jsonable(self) -> dict:
        from .serialization import context_to_json

        return context_to_json(self)


def _positive_definite(ctx: SpaceContext, phi: np.ndarray) -> bool:
    if not ctx.exact:
        try:
            np.linalg.cholesky(phi)
        except np.linalg.LinAlgError:
            return False
        return True
    # Gaussian elimination without pivoting: the pivots are ratios of
    # consecutive leading principal minors.
    work = phi.copy()
    n = work.shape[0]
    for k in range(n):
        pivot = work[k, k]
        if pivot <= 0:
            return False
        if k + 1 < n:
            factor = work[k + 1 :, k] / pivot
            work[k + 1 :, k + 1 :] = work[k + 1 :, k + 1 :] - np.outer(factor, work[k, k + 1 :])
    return True


# elimination kernels ------------------------------------------------------


def _integer_rows(M: np.ndarray) -> np.ndarray:
    """Scale each row of a rational matrix to integers (rank preserving)."""
    rows, cols = M.shape
    out = np.empty((rows, cols), dtype=object)
    for i in range(rows):
        den = mpz(1)
        for v in M[i]:
            den = gmpy2.lcm(den, v.denominator)
        for j in range(cols):
            v = M[i, j]
            out[i, j] = v.numerator * (den // v.denominator)
    return out


def bareiss_rank(M: np.ndarray) -> int:
    """Rank of a rational matrix by fraction-free (Bareiss) elimination."""
    if M.size == 0:
        return 0
    Z = _integer_rows(M)
    rows, cols = Z.shape
    prev = mpz(1)
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(Z[r:, c] != 0)[0]
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            Z[[r, p]] = Z[[p, r]]
        piv = Z[r, c]
        if r + 1 < rows and c + 1 < cols:
            below = Z[r + 1 :, c].copy()
            Z[r + 1 :, c + 1 :] = (piv * Z[r + 1 :, c + 1 :] - np.outer(below, Z[r, c + 1 :])) // prev
        Z[r + 1 :, c] = 0
        prev = piv
        r += 1
    return r


def rref(M: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form of a rational matrix and its pivot columns."""
    R = rational_array(M).copy()
    rows, cols = R.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(R[r:, c] != 0)[0]
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            R[[r, p]] = R[[p, r]]
        R[r] = R[r] / R[r, c]
        col = R[:, c].copy()
        col[r] = mpq(0)
        hit = np.nonzero(col != 0)[0]
        if hit.size:
            R[hit] = R[hit] - np.outer(col[hit], R[r])
        pivots.append(c)
        r += 1
    return R, pivots


def matrix_rank(ctx: SpaceContext, M: np.ndarray) -> int:
    """Rank of an arbitrary 2-D array in the context's arithmetic.

    Float mode counts singular values above ``tolerance * s_max``.
    """
    M = np.asarray(M, dtype=object if ctx.exact else float)
    if M.ndim != 2:
        raise ContextError("matrix_rank expects a 2-D array")
    if M.size == 0:
        return 0
    if ctx.exact:
        return bareiss_rank(M)
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > ctx.tolerance * s[0]))


def nullspace(ctx: SpaceContext, M: np.ndarray) -> list[np.ndarray]:
    """Basis of ``{v : M v = 0}``."""
    M = np.asarray(M, dtype=object if ctx.exact else float)
    rows, cols = M.shape
    if ctx.exact:
        R, pivots = rref(M)
        free = [c for c in range(cols) if c not in pivots]
        basis = []
        for f in free:
            v = ctx.zeros(cols)
            v[f] = mpq(1)
            for i, pc in enumerate(pivots):
                v[pc] = -R[i, f]
            basis.append(v)
        return basis
    if rows == 0:
        return [row for row in np.eye(cols)]
    _, s, vh = np.linalg.svd(M)
    rank = 0 if s.size == 0 or s[0] == 0 else int(np.sum(s > ctx.tolerance * s[0]))
    return [vh[i].copy() for i in range(rank, cols)]


def inverse(ctx: SpaceContext, M: np.ndarray) -> np.ndarray:
    n = M.shape[0]
    if M.shape != (n, n):
        raise ContextError("inverse expects a square matrix")
    if ctx.exact:
        R, pivots = rref(np.hstack([M, ctx.eye(n)]))
        if pivots[:n] != list(range(n)):
            raise DomainError("matrix is singular")
        return R[:, n:].copy()
    if matrix_rank(ctx, M) < n:
        raise DomainError("matrix is singular")
    return np.linalg.inv(M)


# operators ----------------------------------------------------------------


def _kind_holds(ctx: SpaceContext, M: np.ndarray, kind: Kind) -> bool:
    if kind is Kind.GENERAL:
        return True
    # A* = +-A  <=>  phi A is symmetric / skew-symmetric
    G = ctx.phi @ M
    diff = G - G.T if kind is Kind.SELF_ADJOINT else G + G.T
    return ctx.is_zero(diff, scale=ctx.max_abs(G))


def infer_kind(ctx: SpaceContext, M: np.ndarray) -> Kind:
    """Most specific kind of ``M``; the zero matrix counts as self-adjoint."""
    M = ctx.asarray(M)
    for kind in (Kind.SELF_ADJOINT, Kind.SKEW_ADJOINT):
        if _kind_holds(ctx, M, kind):
            return kind
    return Kind.GENERAL


@dataclass(frozen=True, eq=False)
class Operator:
    """A linear endomorphism with a declared (and validated) adjoint kind."""

    ctx: SpaceContext
    matrix: Any
    kind: Kind = Kind.GENERAL

    def __post_init__(self) -> None:
        M = self.ctx.asarray(self.matrix)
        n = self.ctx.dim
        if M.shape != (n, n):
            raise ContextError(f"operator has shape {M.shape}, context dimension is {n}")
        kind = Kind(self.kind)
        if not _kind_holds(self.ctx, M, kind):
            raise KindError(f"matrix is not {kind.value} with respect to phi")
        object.__setattr__(self, "matrix", _frozen(M))
        object.__setattr__(self, "kind", kind)

    @classmethod
    def inferred(cls, ctx: SpaceContext, matrix: Any) -> "Operator":
        M = ctx.asarray(matrix)
        return cls(ctx, M, infer_kind(ctx, M))

    @property
    def dim(self) -> int:
        return self.ctx.dim

    def _check(self, other: "Operator") -> None:
        if not self.ctx.compatible(other.ctx):
            raise ContextError("operators live in different contexts")

    def __matmul__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.ctx, self.matrix @ other.matrix, Kind.GENERAL)

    def __add__(self, other: "Operator") -> "Operator":
        self._check(other)
        kind = self.kind if self.kind is other.kind else Kind.GENERAL
        return Operator(self.ctx, self.matrix + other.matrix, kind)

    def __sub__(self, other: "Operator") -> "Operator":
        return self + (-other)

    def __neg__(self) -> "Operator":
        return Operator(self.ctx, -self.matrix, self.kind)

    def scaled(self, c) -> "Operator":
        return Operator(self.ctx, self.matrix * self.ctx.scalar(c), self.kind)

    def power(self, k: int) -> "Operator":
        M = self.ctx.eye()
        for _ in range(k):
            M = M @ self.matrix
        kind = self.kind
        if kind is Kind.SKEW_ADJOINT and k % 2 == 0:
            kind = Kind.SELF_ADJOINT
        return Operator(self.ctx, M, kind)

    def with_kind(self, kind: Union[Kind, str]) -> "Operator":
        return Operator(self.ctx, self.matrix, Kind(kind))

    def is_zero(self) -> bool:
        return self.ctx.is_zero(self.matrix)

    def equals(self, other: "Operator") -> bool:
        self._check(other)
        scale = max(self.ctx.max_abs(self.matrix), other.ctx.max_abs(other.matrix))
        return self.ctx.is_zero(self.matrix - other.matrix, scale=scale)

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ v

    def __repr__(self) -> str:
        return f"Operator(kind={self.kind.value}, dim={self.dim}, mode={self.ctx.mode.value})"


def identity(ctx: SpaceContext) -> Operator:
    return Operator(ctx, ctx.eye(), Kind.SELF_ADJOINT)


def zero_operator(ctx: SpaceContext, kind: Union[Kind, str] = Kind.SELF_ADJOINT) -> Operator:
    return Operator(ctx, ctx.zeros((ctx.dim, ctx.dim)), Kind(kind))


def adjoint(A: Operator) -> Operator:
    """``A* = phi^{-1} A^T phi``, so that ``phi(Ax, y) = phi(x, A* y)``."""
    ctx = A.ctx
    if A.matrix.shape != (ctx.dim, ctx.dim):
        raise ContextError("operator does not conform to its context")
    return Operator(ctx, ctx.phi_inv @ A.matrix.T @ ctx.phi, A.kind)


def congruence(A: Operator, B: Operator) -> Operator:
    """``A* B A``; self- and skew-adjointness of ``B`` are inherited."""
    A._check(B)
    M = adjoint(A).matrix @ B.matrix @ A.matrix
    return Operator(A.ctx, _symmetrize(A.ctx, M, B.kind), B.kind)


def rank(A: Operator) -> int:
    return matrix_rank(A.ctx, A.matrix)


def kernel_basis(A: Operator) -> list[np.ndarray]:
    return nullspace(A.ctx, A.matrix)


def is_invertible(A: Operator) -> bool:
    return rank(A) == A.dim


def operator_inverse(A: Operator) -> Operator:
    return Operator(A.ctx, inverse(A.ctx, A.matrix), A.kind)


def orthogonal_projection(ctx: SpaceContext, vectors: Sequence[np.ndarray]) -> Operator:
    """phi-orthogonal projection onto the span of linearly independent ``vectors``."""
    if not vectors:
        return zero_operator(ctx)
    K = np.column_stack([ctx.asarray(v) for v in vectors])
    gram = K.T @ ctx.phi @ K
    P = K @ inverse(ctx, gram) @ K.T @ ctx.phi
    return Operator(ctx, P, Kind.SELF_ADJOINT)


def operators_independent(ops: Iterable[Operator]) -> bool:
    """Linear independence of operators as vectors of n*n entries."""
    ops = list(ops)
    if not ops:
        return True
    ctx = ops[0].ctx
    for op in ops[1:]:
        ops[0]._check(op)
    M = np.column_stack([op.matrix.reshape(-1) for op in ops])
    return matrix_rank(ctx, M) == len(ops)


# random generation --------------------------------------------------------


def _rand_entries(ctx: SpaceContext, rng: np.random.Generator, shape, bound: int = 3) -> np.ndarray:
    if ctx.exact:
        return rational_array(rng.integers(-bound, bound + 1, size=shape))
    return rng.standard_normal(shape)


def _rand_nonzero(ctx: SpaceContext, rng: np.random.Generator, count: int) -> list:
    if ctx.exact:
        mags = rng.integers(1, 4, size=count)
        signs = rng.choice([-1, 1], size=count)
        return [mpq(int(m * s)) for m, s in zip(mags, signs)]
    mags = rng.uniform(0.5, 2.0, size=count)
    signs = rng.choice([-1.0, 1.0], size=count)
    return list(mags * signs)


def random_invertible(ctx: SpaceContext, seed: SeedLike = None, max_tries: int = 100) -> Operator:
    rng = make_rng(seed)
    for _ in range(max_tries):
        M = _rand_entries(ctx, rng, (ctx.dim, ctx.dim))
        if matrix_rank(ctx, M) == ctx.dim:
            return Operator(ctx, M, Kind.GENERAL)
    raise ConstraintError("could not sample an invertible matrix")


def random_operator(
    ctx: SpaceContext,
    kind: Union[Kind, str],
    rank_constraint: Optional[int] = None,
    seed: SeedLike = None,
    max_tries: int = 100,
) -> Operator:
    """Random operator of the requested kind, deterministic per seed.

    Without a rank constraint the operator is ``(M + M*)/2``, ``(M - M*)/2``
    or ``M`` for a random ``M``.  With a constraint ``r`` it is built as
    ``phi^{-1} P^T D P`` (self-adjoint), ``phi^{-1} P^T K P`` with ``K`` a
    block-diagonal skew matrix (skew-adjoint) or ``P D Q`` (general), where
    ``P, Q`` are invertible and ``D``/``K`` have rank ``r``.
    """
    kind = Kind(kind)
    rng = make_rng(seed)
    n = ctx.dim
    if rank_constraint is not None:
        r = int(rank_constraint)
        if r < 0 or r > n:
            raise ConstraintError(f"rank {r} is impossible in dimension {n}")
        if kind is Kind.SKEW_ADJOINT and r % 2:
            raise ConstraintError("skew-adjoint operators have even rank")

    if rank_constraint is None:
        M = _rand_entries(ctx, rng, (n, n))
        if kind is Kind.GENERAL:
            return Operator(ctx, M, kind)
        Mstar = ctx.phi_inv @ M.T @ ctx.phi
        half = mpq(1, 2) if ctx.exact else 0.5
        if kind is Kind.SELF_ADJOINT:
            return Operator(ctx, _symmetrize(ctx, (M + Mstar) * half, kind), kind)
        return Operator(ctx, _symmetrize(ctx, (M - Mstar) * half, kind), kind)

    for _ in range(max_tries):
        P = random_invertible(ctx, rng).matrix
        if kind is Kind.SELF_ADJOINT:
            D = ctx.zeros((n, n))
            for i, d in enumerate(_rand_nonzero(ctx, rng, r)):
                D[i, i] = d
            M = ctx.phi_inv @ (P.T @ D @ P)
        elif kind is Kind.SKEW_ADJOINT:
            K = ctx.zeros((n, n))
            for b, d in enumerate(_rand_nonzero(ctx, rng, r // 2)):
                K[2 * b, 2 * b + 1] = d
                K[2 * b + 1, 2 * b] = -d
            M = ctx.phi_inv @ (P.T @ K @ P)
        else:
            Q = random_invertible(ctx, rng).matrix
            D = ctx.zeros((n, n))
            for i, d in enumerate(_rand_nonzero(ctx, rng, r)):
                D[i, i] = d
            M = P @ D @ Q
        M = _symmetrize(ctx, M, kind)
        if matrix_rank(ctx, M) == r:
            return Operator(ctx, M, kind)
    raise ConstraintError(f"could not sample a {kind.value} operator of rank {r}")


def _symmetrize(ctx: SpaceContext, M: np.ndarray, kind: Kind) -> np.ndarray:
    """Remove float round-off from the kind invariant (exact mode is untouched)."""
    if ctx.exact or kind is Kind.GENERAL:
        return M
    G = ctx.phi @ M
    G = (G + G.T) / 2 if kind is Kind.SELF_ADJOINT else (G - G.T) / 2
    return ctx.phi_inv @ G
