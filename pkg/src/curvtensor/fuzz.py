"""Random instance generators and falsification campaigns for the theorem checkers.

Instances are first built in coordinates with the identity form, where the
block structure is explicit, then moved by a random rational orthogonal
matrix ``Q`` and a random change of basis ``P`` (with ``phi = P^T P``).  The
map ``M -> P^{-1} Q^T M Q P`` preserves adjoint kinds, compositions and
every curvature relation, so premises built in coordinates still hold.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from gmpy2 import mpq

from .chain_reduce import Decomposition, analyze_four_chain, analyze_star, analyze_three_chain
from .chain_reduce import reduce_by_kernel, reduce_preserving_target, reduced_terms_are_acts
from .curvature import CanonicalTerm, canonical_tensor, precompose
from .dependence import check_theorem_SLL, check_theorem_SSL, necessary_conditions_SSL, pairwise_exclusions
from .errors import SamplingError
from .linalg_core import (
    Kind,
    Mode,
    Operator,
    SeedLike,
    SpaceContext,
    inverse,
    kernel_basis,
    make_rng,
    identity,
    operators_independent,
    orthogonal_projection,
    random_operator,
    rank,
    rational_array,
)

_SIGNS = (1, -1)


def rational_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Cayley transform ``(I - S)(I + S)^{-1}`` of a random integer skew matrix."""
    ctx = SpaceContext(n, mode=Mode.EXACT)
    S = ctx.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            v = mpq(int(rng.integers(-2, 3)), int(rng.integers(1, 3)))
            S[i, j], S[j, i] = v, -v
    I = ctx.eye()
    return (I - S) @ inverse(ctx, I + S)


def random_change_of_basis(n: int, rng: np.random.Generator) -> np.ndarray:
    """Random invertible integer matrix (unit lower triangular times a permuted diagonal)."""
    L = np.eye(n, dtype=np.int64) + np.tril(rng.integers(-2, 3, size=(n, n)), -1)
    D = np.diag(rng.integers(1, 3, size=n))
    return rational_array(L @ D)


@dataclass(frozen=True)
class Frame:
    """Target context plus the coordinate transport ``M -> P^{-1} Q^T M Q P``."""

    ctx: SpaceContext
    Q: np.ndarray
    P: np.ndarray
    P_inv: np.ndarray

    def op(self, M, kind: Kind) -> Operator:
        exact = self.Q.T @ rational_array(M) @ self.Q
        exact = self.P_inv @ exact @ self.P
        if not self.ctx.exact:
            exact = exact.astype(float)
        return Operator(self.ctx, exact, kind)


def make_frame(n: int, rng: np.random.Generator, mode: Mode = Mode.EXACT, general_metric: Optional[bool] = None) -> Frame:
    if general_metric is None:
        general_metric = bool(rng.integers(0, 2))
    Q = rational_orthogonal(n, rng) if rng.integers(0, 2) else rational_array(np.eye(n, dtype=np.int64))
    P = random_change_of_basis(n, rng) if general_metric else rational_array(np.eye(n, dtype=np.int64))
    ectx = SpaceContext(n, mode=Mode.EXACT)
    P_inv = inverse(ectx, P)
    phi = P.T @ P
    ctx = SpaceContext(n, None if not general_metric else phi, Mode(mode))
    return Frame(ctx, Q, P, P_inv)


# coordinate blocks ---------------------------------------------------------------


def _block(n: int, idx: list[int], kind: Kind, r: int, rng: np.random.Generator) -> np.ndarray:
    """``n x n`` rational matrix of the given kind and rank supported on coordinates ``idx``."""
    sub = SpaceContext(len(idx), mode=Mode.EXACT)
    M = random_operator(sub, kind, rank_constraint=r, seed=rng).matrix
    out = rational_array(np.zeros((n, n), dtype=np.int64))
    for a, i in enumerate(idx):
        for b, j in enumerate(idx):
            out[i, j] = M[a, b]
    return out


def _random_rank(kind: Kind, low: int, high: int, rng: np.random.Generator) -> int:
    choices = [r for r in range(low, high + 1) if kind is Kind.SELF_ADJOINT or r % 2 == 0]
    return int(rng.choice(choices))


def _random_kind(rng: np.random.Generator) -> Kind:
    return Kind.SELF_ADJOINT if rng.integers(0, 2) else Kind.SKEW_ADJOINT


def _vanishing_block(n: int, idx: list[int], rng: np.random.Generator) -> tuple[np.ndarray, Kind]:
    """A block whose canonical tensor vanishes: self-adjoint of rank <= 1, or skew zero."""
    if rng.integers(0, 2) and idx:
        return _block(n, idx, Kind.SELF_ADJOINT, int(rng.integers(0, 2)), rng), Kind.SELF_ADJOINT
    return rational_array(np.zeros((n, n), dtype=np.int64)), Kind.SKEW_ADJOINT


def _split(n: int, low: int, rng: np.random.Generator, high: Optional[int] = None) -> tuple[list[int], list[int]]:
    high = n - 1 if high is None else high
    u = int(rng.integers(low, high + 1))
    perm = [int(i) for i in rng.permutation(n)]
    return sorted(perm[:u]), sorted(perm[u:])


# theorem instances ------------------------------------------------------------------


def three_chain_instance(seed: SeedLike, mode: Mode = Mode.EXACT) -> dict:
    rng = make_rng(seed)
    variant = str(rng.choice(["gated", "low_rank", "exact_arm"]))
    if variant == "exact_arm":
        n = int(rng.choice([4, 6]))
        kind = _random_kind(rng)
        A = _block(n, list(range(n)), kind, n, rng)
        C = A * int(rng.choice(_SIGNS))
        B, kind_b = rational_array(np.zeros((n, n), dtype=np.int64)), Kind.SKEW_ADJOINT
        kinds, eps, delta = (kind, kind_b, kind), int(rng.choice(_SIGNS)), -1
    else:
        n = int(rng.integers(5, 8))
        U, W = _split(n, 4 if variant == "gated" else 2, rng)
        B, kind_b = _vanishing_block(n, W, rng)
        eps = int(rng.choice(_SIGNS))
        if variant == "gated":
            kind = _random_kind(rng)
            A = _block(n, U, kind, _random_rank(kind, 4, len(U), rng), rng)
            C = A * int(rng.choice(_SIGNS))
            delta = -1
        else:
            # rank-two self-adjoint pair with R_C = -delta R_A but C != +-A
            kind = Kind.SELF_ADJOINT
            i, j = U[0], U[1]
            a, b = [mpq(int(rng.choice([-3, -2, -1, 1, 2, 3]))) for _ in range(2)]
            m = mpq(int(rng.integers(2, 4)), int(rng.integers(1, 3)))
            delta = int(rng.choice(_SIGNS))
            A = rational_array(np.zeros((n, n), dtype=np.int64))
            C = rational_array(np.zeros((n, n), dtype=np.int64))
            A[i, i], A[j, j] = a, b
            C[i, i], C[j, j] = a * m, -delta * b / m
        kinds = (kind, kind_b, kind)
    frame = make_frame(n, rng, mode)
    ops = [frame.op(M, k) for M, k in zip((A, B, C), kinds)]
    return {"variant": variant, "ops": ops, "eps": eps, "delta": delta}


def star_instance(seed: SeedLike, mode: Mode = Mode.EXACT) -> dict:
    rng = make_rng(seed)
    variant = str(rng.choice(["self", "skew_zero", "skew_exact"]))
    if variant == "skew_exact":
        n = int(rng.choice([4, 6]))
        U, W = [], list(range(n))
    else:
        n = int(rng.integers(4, 7))
        U, W = _split(n, 1, rng)
    if variant == "self":
        A, kind_a = _block(n, U, Kind.SELF_ADJOINT, int(rng.integers(0, 2)), rng), Kind.SELF_ADJOINT
    else:
        A, kind_a = rational_array(np.zeros((n, n), dtype=np.int64)), Kind.SKEW_ADJOINT
    Bs, kinds, signs = [], [], []
    for _ in range(int(rng.integers(1, 3))):
        kind = _random_kind(rng)
        low = len(W) if variant == "skew_exact" else 0
        M = _block(n, W, kind, _random_rank(kind, low, len(W), rng), rng)
        s = int(rng.choice(_SIGNS))
        Bs += [M, M * int(rng.choice(_SIGNS))]
        kinds += [kind, kind]
        signs += [s, -s]
    if rng.integers(0, 2) and W:
        M, kind = _vanishing_block(n, W, rng)
        Bs.append(M)
        kinds.append(kind)
        signs.append(int(rng.choice(_SIGNS)))
    order = rng.permutation(len(Bs))
    frame = make_frame(n, rng, mode)
    return {
        "variant": variant,
        "A": frame.op(A, kind_a),
        "Bs": [frame.op(Bs[i], kinds[i]) for i in order],
        "signs": [signs[i] for i in order],
    }


def four_chain_instance(seed: SeedLike, mode: Mode = Mode.EXACT) -> dict:
    rng = make_rng(seed)
    n = int(rng.integers(8, 10))
    U, W = _split(n, 4, rng, high=n - 4)
    kind_ac, kind_bd = _random_kind(rng), _random_kind(rng)
    A = _block(n, U, kind_ac, _random_rank(kind_ac, 4, len(U), rng), rng)
    B = _block(n, W, kind_bd, _random_rank(kind_bd, 4, len(W), rng), rng)
    C = A * int(rng.choice(_SIGNS))
    D = B * int(rng.choice(_SIGNS))
    eps1 = int(rng.choice(_SIGNS))
    frame = make_frame(n, rng, mode)
    ops = [frame.op(M, k) for M, k in ((A, kind_ac), (B, kind_bd), (C, kind_ac), (D, kind_bd))]
    return {"ops": ops, "signs": [eps1, -1, -eps1]}


def rational_family_instance(seed: SeedLike, mode: Mode = Mode.EXACT) -> dict:
    """Properly dependent ``{R^S_I, R^S_B, R^Lambda_C}`` at n = 3.

    With ``lam = (1 + 3t^2) / (1 - 3t^2)`` and ``c = 2t / (1 - 3t^2)``,
    ``B = diag(lam, lam, 1/lam)`` and ``C = c J (+) 0`` satisfy
    ``R^S_I - R^S_B + R^Lambda_C = 0``; ``t = 1/3`` gives ``B = diag(2, 2, 1/2)``.
    """
    rng = make_rng(seed)
    while True:
        t = mpq(int(rng.integers(1, 6)) * int(rng.choice(_SIGNS)), int(rng.integers(1, 8)))
        if 1 - 3 * t * t != 0:
            break
    lam = (1 + 3 * t * t) / (1 - 3 * t * t)
    c = 2 * t / (1 - 3 * t * t)
    B = rational_array(np.zeros((3, 3), dtype=np.int64))
    B[0, 0], B[1, 1], B[2, 2] = lam, lam, 1 / lam
    C = rational_array(np.zeros((3, 3), dtype=np.int64))
    C[0, 1], C[1, 0] = c, -c
    frame = make_frame(3, rng, mode)
    return {"t": t, "B": frame.op(B, Kind.SELF_ADJOINT), "C": frame.op(C, Kind.SKEW_ADJOINT)}


def reduction_instance(seed: SeedLike, mode: Mode = Mode.EXACT) -> dict:
    rng = make_rng(seed)
    n = int(rng.integers(3, 6))
    frame = make_frame(n, rng, mode)
    ctx = frame.ctx
    k = int(rng.integers(2, 5))
    pivot = int(rng.integers(0, k))
    terms = []
    for i in range(k):
        kind = _random_kind(rng)
        r = _random_rank(kind, 0, n - 1, rng) if i == pivot else None
        op = random_operator(ctx, kind, rank_constraint=r, seed=rng)
        terms.append(CanonicalTerm.of(op, int(rng.choice(_SIGNS))))
    decomp = Decomposition(ctx, terms).with_target()
    A = None
    if rng.integers(0, 2):
        K = np.column_stack(kernel_basis(terms[pivot].op))
        M = rational_array(rng.integers(-2, 3, size=(K.shape[1], n)))
        if not ctx.exact:
            M = M.astype(float)
        A = Operator(ctx, K @ M)
    return {"decomp": decomp, "pivot": pivot, "A": A}


def preserve_instance(seed: SeedLike, mode: Mode = Mode.EXACT) -> dict:
    rng = make_rng(seed)
    n = int(rng.integers(4, 6))
    U, W = _split(n, 2, rng, high=n - 2)
    kind_c = _random_kind(rng)
    C = _block(n, U, kind_c, _random_rank(kind_c, 2, len(U), rng), rng)
    kind_b = _random_kind(rng)
    B = _block(n, W, kind_b, _random_rank(kind_b, 1 if kind_b is Kind.SELF_ADJOINT else 2, len(W), rng), rng)
    # A = projection onto span(U), optionally negated: A* C A = C
    A = rational_array(np.zeros((n, n), dtype=np.int64))
    s = int(rng.choice(_SIGNS))
    for i in U:
        A[i, i] = mpq(s)
    frame = make_frame(n, rng, mode)
    Cop, Bop = frame.op(C, kind_c), frame.op(B, kind_b)
    Aop = frame.op(A, Kind.SELF_ADJOINT)
    eps = int(rng.choice(_SIGNS))
    terms = [CanonicalTerm.of(Bop, eps), CanonicalTerm.of(Bop, -eps), CanonicalTerm.of(Cop)]
    order = [int(i) for i in rng.permutation(3)]
    terms = [terms[i] for i in order]
    pivot = order.index(0)
    decomp = Decomposition(frame.ctx, terms, canonical_tensor(Cop))
    return {"decomp": decomp, "pivot": pivot, "A": Aop, "C": Cop}


def _independent_with_identity(draw, rng: np.random.Generator, tries: int = 50) -> tuple[Operator, Operator]:
    """Redraw until ``{I, X, Y}`` is linearly independent, as the independence theorems assume."""
    for _ in range(tries):
        X, Y = draw()
        if operators_independent([identity(X.ctx), X, Y]):
            return X, Y
    raise SamplingError("could not draw operators independent of the identity")


def ssl_instance(seed: SeedLike, mode: Mode = Mode.EXACT) -> dict:
    rng = make_rng(seed)
    n = int(rng.choice([4, 5]))
    frame = make_frame(n, rng, mode)

    def draw():
        B = random_operator(frame.ctx, Kind.SELF_ADJOINT, seed=rng)
        r = _random_rank(Kind.SKEW_ADJOINT, 2, n, rng)
        return B, random_operator(frame.ctx, Kind.SKEW_ADJOINT, rank_constraint=r, seed=rng)

    B, C = _independent_with_identity(draw, rng)
    return {"B": B, "C": C}


def sll_instance(seed: SeedLike, mode: Mode = Mode.EXACT) -> dict:
    rng = make_rng(seed)
    n = int(rng.choice([3, 4, 5]))
    frame = make_frame(n, rng, mode)

    def draw():
        return (random_operator(frame.ctx, Kind.SKEW_ADJOINT, seed=rng), random_operator(frame.ctx, Kind.SKEW_ADJOINT, seed=rng))

    C, D = _independent_with_identity(draw, rng)
    return {"C": C, "D": D}


def exclusion_instance(seed: SeedLike, mode: Mode = Mode.EXACT) -> dict:
    """A hypothesis-satisfying pair for one of the three pairwise exclusion arms."""
    rng = make_rng(seed)
    n = int(rng.integers(4, 6))
    ctx = make_frame(n, rng, mode).ctx
    arm = str(rng.choice(["Lambda_vs_S", "S_vs_S", "Lambda_vs_Lambda"]))
    if arm == "Lambda_vs_S":
        A = random_operator(ctx, Kind.SKEW_ADJOINT, rank_constraint=_random_rank(Kind.SKEW_ADJOINT, 2, n, rng), seed=rng)
        B = random_operator(ctx, Kind.SELF_ADJOINT, rank_constraint=int(rng.integers(3, n + 1)), seed=rng)
    elif arm == "S_vs_S":
        A = random_operator(ctx, Kind.SELF_ADJOINT, rank_constraint=int(rng.integers(4, n + 1)), seed=rng)
        B = random_operator(ctx, Kind.SELF_ADJOINT, rank_constraint=int(rng.integers(0, n + 1)), seed=rng)
    else:
        A = random_operator(ctx, Kind.SKEW_ADJOINT, rank_constraint=_random_rank(Kind.SKEW_ADJOINT, 2, n, rng), seed=rng)
        B = random_operator(ctx, Kind.SKEW_ADJOINT, rank_constraint=_random_rank(Kind.SKEW_ADJOINT, 2, n, rng), seed=rng)
    return {"arm": arm, "A": A, "B": B}


def power_instance(seed: SeedLike, mode: Mode = Mode.EXACT) -> dict:
    """Operator and exponent for the rank-of-powers check.

    Float instances are built with eigenvalues of size 1 to 3 under an
    orthogonal change of basis, so every nonzero singular value of the power
    stays far above the rank tolerance; exact instances use the full generator.
    """
    rng = make_rng(seed)
    n = int(rng.integers(2, 7))
    kind = _random_kind(rng)
    r = _random_rank(kind, 0, n, rng)
    if Mode(mode) is Mode.EXACT:
        frame = make_frame(n, rng, mode)
        op = random_operator(frame.ctx, kind, rank_constraint=r, seed=rng)
    else:
        M = rational_array(np.zeros((n, n), dtype=np.int64))
        vals = [mpq(int(rng.choice(_SIGNS)) * int(rng.integers(1, 4))) for _ in range(r)]
        if kind is Kind.SELF_ADJOINT:
            for i, v in enumerate(vals):
                M[i, i] = v
        else:
            for b in range(r // 2):
                M[2 * b, 2 * b + 1], M[2 * b + 1, 2 * b] = vals[b], -vals[b]
        frame = make_frame(n, rng, mode, general_metric=False)
        op = frame.op(M, kind)
    return {"op": op, "k": int(rng.integers(2, 5))}


# campaigns ----------------------------------------------------------------------------


def _run_three_chain(inst: dict):
    A, B, C = inst["ops"]
    return analyze_three_chain(A, B, C, inst["eps"], inst["delta"])


def _run_star(inst: dict):
    return analyze_star(inst["A"], inst["Bs"], inst["signs"])


def _run_four_chain(inst: dict):
    return analyze_four_chain(*inst["ops"], *inst["signs"])


def _run_necessary(inst: dict):
    return necessary_conditions_SSL(inst["B"], inst["C"])


def _run_ssl(inst: dict):
    return check_theorem_SSL(inst["B"], inst["C"])


def _run_sll(inst: dict):
    return check_theorem_SLL(inst["C"], inst["D"])


def _run_exclusion(inst: dict):
    return pairwise_exclusions(inst["A"], inst["B"])


def _run_powers(inst: dict) -> dict:
    op, k = inst["op"], inst["k"]
    ok = rank(op.power(k)) == rank(op)
    return {"conclusions": {"rank_of_power_equals_rank": "pass" if ok else "fail"}}


def _check_reduction(out: Decomposition, source: Decomposition, A: Optional[Operator], target=None) -> dict:
    ctx = out.ctx
    expected = precompose(A, source.target) if target is None else target
    residual_zero = ctx.is_zero(out.target.entries - out.total().entries, scale=out.target.max_abs())
    return {
        "one_fewer_term": "pass" if len(out) == len(source) - 1 else "fail",
        "zero_residual": "pass" if residual_zero and out.target.equals(expected) else "fail",
        "terms_are_acts": "pass" if reduced_terms_are_acts(out) else "fail",
    }


def _run_reduction(inst: dict) -> dict:
    decomp, pivot, A = inst["decomp"], inst["pivot"], inst["A"]
    out = reduce_by_kernel(decomp, pivot, A)
    if A is None:
        A = orthogonal_projection(decomp.ctx, kernel_basis(decomp.terms[pivot].op))
    kept = [t for i, t in enumerate(decomp.terms) if i != pivot]
    conclusions = _check_reduction(out, decomp, A)
    conclusions["builds_preserved"] = "pass" if [t.build for t in out.terms] == [t.build for t in kept] else "fail"
    return {"conclusions": conclusions}


def _run_preserve(inst: dict) -> dict:
    decomp = inst["decomp"]
    out = reduce_preserving_target(decomp, inst["pivot"], inst["A"], inst["C"])
    conclusions = _check_reduction(out, decomp, inst["A"], target=decomp.target)
    conclusions["target_unchanged"] = "pass" if out.target.equals(decomp.target) else "fail"
    kept = [t for i, t in enumerate(decomp.terms) if i != inst["pivot"]]
    conclusions["builds_preserved"] = "pass" if [t.build for t in out.terms] == [t.build for t in kept] else "fail"
    return {"conclusions": conclusions}


CAMPAIGNS: dict[str, tuple[Callable, Callable]] = {
    "three_chain": (three_chain_instance, _run_three_chain),
    "star": (star_instance, _run_star),
    "four_chain": (four_chain_instance, _run_four_chain),
    "ssl_necessary": (rational_family_instance, _run_necessary),
    "ssl": (ssl_instance, _run_ssl),
    "sll": (sll_instance, _run_sll),
    "exclusions": (exclusion_instance, _run_exclusion),
    "rank_powers": (power_instance, _run_powers),
    "reduce": (reduction_instance, _run_reduction),
    "reduce_preserving": (preserve_instance, _run_preserve),
}


def run_campaign(name: str, count: int, seed: int = 0, mode: Mode | str = Mode.EXACT) -> dict:
    """Generate ``count`` instances and tally conclusion statuses; failures are listed."""
    if name not in CAMPAIGNS:
        raise ValueError(f"unknown campaign {name!r}; choose from {sorted(CAMPAIGNS)}")
    make, run = CAMPAIGNS[name]
    mode = Mode(mode)
    tallies: dict = {}
    failures = []
    hypothesis_unmet = 0
    for i in range(count):
        inst = make(np.random.default_rng([seed, i]), mode)
        report = run(inst)
        data = report if isinstance(report, dict) else report.to_dict()
        if not data.get("hypothesis_met", True):
            hypothesis_unmet += 1
        for key, status in data["conclusions"].items():
            tallies.setdefault(key, {"pass": 0, "fail": 0, "not_applicable": 0})[status] += 1
            if status == "fail":
                failures.append({"instance": i, "conclusion": key})
    return {
        "campaign": name,
        "count": count,
        "seed": seed,
        "mode": mode.value,
        "hypothesis_unmet": hypothesis_unmet,
        "tallies": tallies,
        "failures": failures,
        "falsified": bool(failures),
    }
