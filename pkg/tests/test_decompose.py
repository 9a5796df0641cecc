import numpy as np
import pytest
import sympy
from gmpy2 import mpq

from conftest import J
from curvtensor.curvature import build_RLambda, build_RS, identity_tensor, is_act
from curvtensor.decompose import (
    BoundKind,
    Family,
    conjecture_campaign,
    constructive_decomposition,
    minimal_search,
    random_act,
)
from curvtensor.errors import DomainError
from curvtensor.linalg_core import Kind, Mode, Operator, SpaceContext, rational_array


def test_two_dimensional_builds_are_multiples_of_identity_tensor():
    # oracle for k = 1 at n = 2: R^S_A = det(A) R^S_I and R^Lambda_{bJ} = 3 b^2 R^S_I
    a, b, c = sympy.symbols("a b c")
    A = sympy.Matrix([[a, b], [b, c]])
    K = sympy.Matrix([[0, -b], [b, 0]])

    def g(M, x, w):
        return M[w, x]

    def rs(M, q):
        x, y, z, w = q
        return g(M, x, w) * g(M, y, z) - g(M, x, z) * g(M, y, w)

    I = sympy.eye(2)
    for q in [(0, 1, 1, 0), (0, 1, 0, 1), (1, 0, 0, 1)]:
        assert sympy.expand(rs(A, q) - A.det() * rs(I, q)) == 0
        lam = rs(K, q) - 2 * g(K, q[0], q[1]) * g(K, q[2], q[3])
        assert sympy.expand(lam - 3 * b**2 * rs(I, q)) == 0


@pytest.mark.parametrize("family", list(Family))
def test_n2_certified_single_term(family):
    ctx = SpaceContext(2, mode=Mode.EXACT)
    R = identity_tensor(ctx).scaled(5)
    rep = minimal_search(R, family, k_max=2, budget=4, seed=0)
    assert rep.k == 1 and rep.bound_kind is BoundKind.EXACT
    assert rep.best.holds()


def test_n2_skew_weight_is_irrational_square_root():
    ctx = SpaceContext(2, mode=Mode.EXACT)
    rep = minimal_search(identity_tensor(ctx).scaled(5), "skew", k_max=1, budget=4, seed=0)
    (term,) = rep.best.terms
    # 5 = 3 w b^2 has no rational b with w = 1, so the leftover factor is kept as a weight
    assert term.weight * 3 * term.op.matrix[1, 0] ** 2 == 5
    assert term.weight == mpq(5, 3)


@pytest.mark.parametrize("n, bound", [(3, 6), (4, 20)])
def test_constructive_within_dimension(n, bound):
    ctx = SpaceContext(n, mode=Mode.EXACT)
    R = random_act(ctx, seed=n)
    d = constructive_decomposition(R, "sym", seed=0)
    assert len(d.terms) <= bound
    assert d.residual() == 0


def test_constructive_skew_family():
    ctx = SpaceContext(3, mode=Mode.EXACT)
    R = random_act(ctx, seed=1)
    d = constructive_decomposition(R, "skew", seed=0)
    assert d.residual() == 0 and all(t.op.kind is Kind.SKEW_ADJOINT for t in d.terms)


def test_constructive_float():
    ctx = SpaceContext(3, mode=Mode.FLOAT)
    d = constructive_decomposition(random_act(ctx, seed=2), "sym", seed=0)
    assert d.holds()


def test_non_act_rejected():
    ctx = SpaceContext(3, mode=Mode.EXACT)
    A = Operator(ctx, rational_array([[1, 1, 0], [0, 1, 0], [0, 0, 1]]))
    with pytest.raises(DomainError):
        minimal_search(build_RS(A), "sym")
    with pytest.raises(DomainError):
        constructive_decomposition(build_RS(A), "sym")


def test_zero_target():
    ctx = SpaceContext(3, mode=Mode.EXACT)
    rep = minimal_search(identity_tensor(ctx).scaled(0), "sym")
    assert rep.k == 0 and rep.bound_kind is BoundKind.EXACT


def test_single_build_found_exactly():
    ctx = SpaceContext(3, mode=Mode.EXACT)
    A = Operator(ctx, rational_array(np.diag([1, 2, 3])), Kind.SELF_ADJOINT)
    rep = minimal_search(build_RS(A), "sym", k_max=2, budget=4, seed=0)
    assert rep.k == 1 and rep.verified_exact and rep.bound_kind is BoundKind.EXACT


def test_skew_target_in_skew_family():
    ctx = SpaceContext(4, mode=Mode.FLOAT)
    B = Operator(ctx, ctx.asarray(J(4, 2)), Kind.SKEW_ADJOINT)
    rep = minimal_search(build_RLambda(B), "skew", k_max=1, budget=6, seed=0)
    assert rep.k == 1 and rep.residual < 1e-7


@pytest.mark.parametrize("seed", range(3))
def test_mixed_never_worse(seed):
    ctx = SpaceContext(3, mode=Mode.EXACT)
    R = random_act(ctx, seed=[9, seed])
    ks = {f: minimal_search(R, f, k_max=3, budget=4, seed=0).k for f in ("sym", "skew", "mixed")}
    assert ks["mixed"] <= min(ks["sym"], ks["skew"])


def test_search_is_deterministic():
    ctx = SpaceContext(3, mode=Mode.FLOAT)
    R = random_act(ctx, seed=5)
    a = minimal_search(R, "mixed", k_max=2, budget=3, seed=1).to_dict()
    b = minimal_search(R, "mixed", k_max=2, budget=3, seed=1).to_dict()
    assert a == b


def test_report_dict_fields():
    ctx = SpaceContext(3, mode=Mode.EXACT)
    d = minimal_search(random_act(ctx, seed=0), "sym", k_max=2, budget=2).to_dict()
    assert d["reference_bounds"] == {"constructive_dim_A": 6, "cited_symmetric_bound": 6}
    assert d["bound_kind"] in ("Exact", "Heuristic")


def test_random_act_is_act():
    for n in (2, 3, 4):
        assert is_act(random_act(SpaceContext(n, mode=Mode.EXACT), seed=n)).ok


def test_conjecture_campaign_small():
    rep = conjecture_campaign(3, 2, seed=0, k_max=2, budget=2)
    assert sum(rep["gap_distribution"].values()) == 2
    assert all(row["mu_hat"] <= row["nu_hat"] for row in rep["rows"])
    with pytest.raises(DomainError):
        conjecture_campaign(4, 1)
