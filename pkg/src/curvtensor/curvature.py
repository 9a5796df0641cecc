"""Canonical curvature tensors, the algebraic curvature tensor axioms, and the
identities relating the symmetric and anti-symmetric builds.

Tensors are stored densely as ``(n, n, n, n)`` arrays indexed ``[x, y, z, w]``
on basis vectors, in the same argument order as ``R(x, y, z, w)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from gmpy2 import mpq

from .errors import ContextError, HypothesisError, KindError
from .linalg_core import Kind, Operator, SpaceContext, adjoint, congruence, identity

AXIOMS = ("antisymmetry", "pair_symmetry", "bianchi")


class Build(str, enum.Enum):
    S = "S"
    LAMBDA = "Lambda"


def act_dimension(n: int) -> int:
    """Dimension of the space of algebraic curvature tensors, n^2 (n^2 - 1) / 12."""
    return n * n * (n * n - 1) // 12


def build_for_kind(kind: Kind) -> Build:
    if kind is Kind.SELF_ADJOINT:
        return Build.S
    if kind is Kind.SKEW_ADJOINT:
        return Build.LAMBDA
    raise KindError("general operators have no canonical build")


@dataclass(frozen=True, eq=False)
class CanonicalTerm:
    """One signed summand ``sign * weight * R_op`` of a decomposition.

    ``weight`` holds a positive coefficient that could not be absorbed into the
    operator as a rational square root; it is 1 whenever absorption was possible.
    """

    build: Build
    sign: int
    op: Operator
    weight: object = 1
    raw: bool = False

    def __post_init__(self) -> None:
        build = Build(self.build)
        object.__setattr__(self, "build", build)
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign!r}")
        object.__setattr__(self, "sign", int(self.sign))
        weight = self.op.ctx.scalar(self.weight)
        if weight <= 0:
            raise ValueError("weight must be positive")
        object.__setattr__(self, "weight", weight)
        if not self.raw:
            expected = Kind.SELF_ADJOINT if build is Build.S else Kind.SKEW_ADJOINT
            if self.op.kind is not expected:
                raise KindError(f"build {build.value} needs a {expected.value} operator, got {self.op.kind.value}")

    @classmethod
    def of(cls, op: Operator, sign: int = 1, weight=1) -> "CanonicalTerm":
        """Term whose build is fixed by the operator's kind."""
        return cls(build_for_kind(op.kind), sign, op, weight)

    @property
    def ctx(self) -> SpaceContext:
        return self.op.ctx

    def tensor(self) -> "CurvatureTensor":
        base = build_RS(self.op) if self.build is Build.S else build_RLambda(self.op)
        coeff = self.ctx.scalar(self.sign) * self.weight
        return CurvatureTensor(self.ctx, base.entries * coeff, canonical=self)

    def with_op(self, op: Operator) -> "CanonicalTerm":
        return CanonicalTerm(self.build, self.sign, op, self.weight, self.raw)


@dataclass(frozen=True, eq=False)
class CurvatureTensor:
    ctx: SpaceContext
    entries: np.ndarray
    canonical: Optional[CanonicalTerm] = None

    def __post_init__(self) -> None:
        E = self.ctx.asarray(self.entries) if not isinstance(self.entries, np.ndarray) else self.entries
        if self.ctx.exact and E.dtype != object:
            E = self.ctx.asarray(E)
        if not self.ctx.exact and E.dtype != float:
            E = self.ctx.asarray(E)
        n = self.ctx.dim
        if E.shape != (n, n, n, n):
            raise ContextError(f"tensor has shape {E.shape}, expected {(n,) * 4}")
        E.setflags(write=False)
        object.__setattr__(self, "entries", E)

    @classmethod
    def zero(cls, ctx: SpaceContext) -> "CurvatureTensor":
        return cls(ctx, ctx.zeros((ctx.dim,) * 4))

    @property
    def dim(self) -> int:
        return self.ctx.dim

    def _check(self, other: "CurvatureTensor") -> None:
        if not self.ctx.compatible(other.ctx):
            raise ContextError("tensors live in different contexts")

    def __add__(self, other: "CurvatureTensor") -> "CurvatureTensor":
        self._check(other)
        return CurvatureTensor(self.ctx, self.entries + other.entries)

    def __sub__(self, other: "CurvatureTensor") -> "CurvatureTensor":
        self._check(other)
        return CurvatureTensor(self.ctx, self.entries - other.entries)

    def __neg__(self) -> "CurvatureTensor":
        return CurvatureTensor(self.ctx, -self.entries)

    def scaled(self, c) -> "CurvatureTensor":
        return CurvatureTensor(self.ctx, self.entries * self.ctx.scalar(c))

    def max_abs(self):
        return self.ctx.max_abs(self.entries)

    def is_zero(self, scale=0) -> bool:
        return self.ctx.is_zero(self.entries, scale=scale)

    def equals(self, other: "CurvatureTensor") -> bool:
        """Entrywise equality; float mode uses ``tol * (1 + max|entry|)``."""
        self._check(other)
        scale = max(self.max_abs(), other.max_abs())
        return self.ctx.is_zero(self.entries - other.entries, scale=scale)

    def __call__(self, x, y, z, w):
        """Evaluate on four vectors (or basis indices) multilinearly."""
        vecs = [_as_vector(self.ctx, v) for v in (x, y, z, w)]
        out = self.entries
        for v in reversed(vecs):
            out = out @ v
        return out


def _as_vector(ctx: SpaceContext, v) -> np.ndarray:
    if isinstance(v, (int, np.integer)):
        return ctx.basis_vector(int(v))
    v = ctx.asarray(v)
    if v.shape != (ctx.dim,):
        raise ContextError("vector does not match the context dimension")
    return v


def _gram(A: Operator) -> np.ndarray:
    # G[x, w] = phi(A e_x, e_w)
    return A.matrix.T @ A.ctx.phi


def _rs_from_gram(G: np.ndarray) -> np.ndarray:
    return G[:, None, None, :] * G[None, :, :, None] - G[:, None, :, None] * G[None, :, None, :]


def _pair_from_gram(G: np.ndarray) -> np.ndarray:
    # P[x, y, z, w] = G[x, y] G[z, w]
    return G[:, :, None, None] * G[None, None, :, :]


def build_RS(A: Operator) -> CurvatureTensor:
    """``phi(Ax, w) phi(Ay, z) - phi(Ax, z) phi(Ay, w)`` for any operator."""
    return CurvatureTensor(A.ctx, _rs_from_gram(_gram(A)))


def build_RLambda(B: Operator) -> CurvatureTensor:
    """Symmetric build minus ``2 phi(Bx, y) phi(Bz, w)``."""
    G = _gram(B)
    two = mpq(2) if B.ctx.exact else 2.0
    return CurvatureTensor(B.ctx, _rs_from_gram(G) - two * _pair_from_gram(G))


def canonical_tensor(op: Operator) -> CurvatureTensor:
    """The build selected by the operator's kind (S for self-, Lambda for skew-adjoint)."""
    return CanonicalTerm.of(op).tensor()


def permute_slots(E: np.ndarray, pattern: str) -> np.ndarray:
    """Array ``P`` with ``P[x, y, z, w] = E[pattern]``.

    ``permute_slots(E, "zxyw")`` returns the array whose ``[x, y, z, w]``
    entry is ``E[z, x, y, w]``.
    """
    if sorted(pattern) != sorted("xyzw"):
        raise ValueError(f"bad slot pattern {pattern!r}")
    return E.transpose([pattern.index(c) for c in "xyzw"])


@dataclass(frozen=True)
class ActCheck:
    ok: bool
    witnesses: dict
    max_violation: object

    def __bool__(self) -> bool:
        return self.ok


def axiom_violations(R: CurvatureTensor) -> dict:
    E = R.entries
    return {
        "antisymmetry": E + permute_slots(E, "yxzw"),
        "pair_symmetry": E - permute_slots(E, "zwxy"),
        "bianchi": E + permute_slots(E, "zxyw") + permute_slots(E, "yzxw"),
    }


def is_act(R: CurvatureTensor) -> ActCheck:
    """Check the three axiom families; report the first violating index quadruple of each.

    Float mode accepts ``max|violation| <= tol * (1 + max|entry|)``.
    """
    ctx = R.ctx
    scale = R.max_abs()
    witnesses = {}
    worst = mpq(0) if ctx.exact else 0.0
    for name, viol in axiom_violations(R).items():
        worst = max(worst, ctx.max_abs(viol))
        if ctx.is_zero(viol, scale=scale):
            witnesses[name] = None
            continue
        if ctx.exact:
            mask = np.vectorize(lambda v: v != 0, otypes=[bool])(viol)
        else:
            mask = np.abs(viol) > ctx.tolerance * (1.0 + float(scale))
        witnesses[name] = tuple(int(i) for i in np.argwhere(mask)[0])
    ok = all(w is None for w in witnesses.values())
    return ActCheck(ok, witnesses, worst)


def _rs_phi(ctx: SpaceContext, x, y, z, w):
    """The symmetric build of the identity, evaluated directly on vectors."""
    ip = ctx.inner
    return ip(x, w) * ip(y, z) - ip(x, z) * ip(y, w)


def identity_pullback(A: Operator, quadruple: Sequence) -> tuple:
    """Return ``(R^S_A(x,y,z,w), R^S_phi(Ax,Ay,z,w), R^S_phi(x,y,A*z,A*w))``."""
    ctx = A.ctx
    x, y, z, w = (_as_vector(ctx, v) for v in quadruple)
    Astar = adjoint(A)
    lhs = build_RS(A)(x, y, z, w)
    rhs1 = _rs_phi(ctx, A.apply(x), A.apply(y), z, w)
    rhs2 = _rs_phi(ctx, x, y, Astar.apply(z), Astar.apply(w))
    return lhs, rhs1, rhs2


def lambda_correction(A: Operator) -> np.ndarray:
    """Entries of ``2 phi(Ax, y) phi(Az, w)``, computed from inner products of images."""
    ctx = A.ctx
    n = ctx.dim
    images = [A.apply(ctx.basis_vector(i)) for i in range(n)]
    pair = ctx.zeros((n, n))
    for i in range(n):
        for j in range(n):
            pair[i, j] = ctx.inner(images[i], ctx.basis_vector(j))
    two = mpq(2) if ctx.exact else 2.0
    return two * _pair_from_gram(pair)


def identity_lambda_split(A: Operator):
    """Max deviation of ``R^Lambda_A - (R^S_A - 2 phi(A.,.) phi(A.,.))``; holds for every operator."""
    ctx = A.ctx
    dev = build_RLambda(A).entries - (build_RS(A).entries - lambda_correction(A))
    return ctx.max_abs(dev)


def main_identity_rhs(A: Operator) -> np.ndarray:
    """``2 R^S_A(x,y,z,w) + R^S_A(x,z,y,w) + R^S_A(x,w,z,y)`` as an entry array."""
    S = build_RS(A).entries
    two = mpq(2) if A.ctx.exact else 2.0
    return two * S + permute_slots(S, "xzyw") + permute_slots(S, "xwzy")


def identity_main(A: Operator):
    """Max deviation between ``R^Lambda_A`` and the permuted symmetric builds.

    Only claimed for skew-adjoint ``A``; other kinds raise :class:`HypothesisError`.
    """
    if A.kind is not Kind.SKEW_ADJOINT:
        raise HypothesisError("the identity is only claimed for skew-adjoint operators")
    return A.ctx.max_abs(build_RLambda(A).entries - main_identity_rhs(A))


def precompose(A: Operator, R: CurvatureTensor) -> CurvatureTensor:
    """``(A*R)(x, y, z, w) = R(Ax, Ay, Az, Aw)``.

    When ``R`` carries canonical provenance the result records the term with
    operator ``A* C A``.
    """
    if not A.ctx.compatible(R.ctx):
        raise ContextError("operator and tensor live in different contexts")
    out = R.entries
    for _ in range(4):
        # contract the leading slot; the new slot is appended at the end
        out = np.tensordot(out, A.matrix, axes=([0], [0]))
    canonical = None
    if R.canonical is not None:
        canonical = R.canonical.with_op(congruence(A, R.canonical.op))
    return CurvatureTensor(R.ctx, out, canonical=canonical)


def flatten(R: CurvatureTensor) -> np.ndarray:
    """All ``n^4`` entries in lexicographic ``(x, y, z, w)`` order."""
    return R.entries.reshape(-1).copy()


def unflatten(ctx: SpaceContext, vec: np.ndarray) -> CurvatureTensor:
    return CurvatureTensor(ctx, np.asarray(vec).reshape((ctx.dim,) * 4))


def linear_combination(coeffs: Sequence, tensors: Sequence[CurvatureTensor]) -> CurvatureTensor:
    if not tensors:
        raise ValueError("need at least one tensor")
    ctx = tensors[0].ctx
    out = ctx.zeros((ctx.dim,) * 4)
    for c, T in zip(coeffs, tensors):
        tensors[0]._check(T)
        out = out + T.entries * ctx.scalar(c)
    return CurvatureTensor(ctx, out)


def identity_tensor(ctx: SpaceContext) -> CurvatureTensor:
    """``R^S_I``, the symmetric build of the identity (the tensor of phi)."""
    return build_RS(identity(ctx))


TensorLike = Union[CurvatureTensor, CanonicalTerm]
