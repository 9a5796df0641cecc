import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import J
from curvtensor.chain_reduce import (
    ChainComplex,
    Decomposition,
    analyze_four_chain,
    analyze_star,
    analyze_three_chain,
    is_chain,
    reduce_by_kernel,
    reduce_preserving_target,
    reduced_terms_are_acts,
)
from curvtensor.curvature import CanonicalTerm, canonical_tensor, precompose
from curvtensor.errors import DomainError, HypothesisError, KernelError, NotAChainError, PremiseError
from curvtensor.fuzz import four_chain_instance, preserve_instance, reduction_instance
from curvtensor.linalg_core import Kind, Mode, Operator, SpaceContext, identity, random_operator, zero_operator


def diag(ctx, values, kind=Kind.SELF_ADJOINT):
    return Operator(ctx, ctx.asarray(np.diag(values)), kind)


@pytest.fixture(params=[Mode.EXACT, Mode.FLOAT])
def mode(request):
    return request.param


def test_is_chain_reports_failing_pair(mode):
    ctx = SpaceContext(2, mode=mode)
    I, P = identity(ctx), diag(ctx, [1, 0])
    check = is_chain([I, P, I])
    assert not check and check.failing_pair == (1, 2)
    assert is_chain([diag(ctx, [1, 0]), diag(ctx, [0, 1])])
    with pytest.raises(NotAChainError):
        ChainComplex((I, P))


def test_chain_exactness():
    ctx = SpaceContext(3, mode=Mode.EXACT)
    cx = ChainComplex((diag(ctx, [1, 1, 0]), diag(ctx, [0, 0, 1])))
    assert cx.exact_at(0) and cx.is_exact()
    cx = ChainComplex((diag(ctx, [1, 0, 0]), diag(ctx, [0, 0, 1])))
    assert not cx.is_exact()


def test_three_chain_identity_zero_identity(mode):
    ctx = SpaceContext(3, mode=mode)
    rep = analyze_three_chain(identity(ctx), zero_operator(ctx), identity(ctx), 1, -1)
    assert rep.conclusions["R_B_zero"] == "pass"
    assert rep.details["exact"]
    assert not rep.falsified


def test_three_chain_skew_zero_exact_arm():
    ctx = SpaceContext(3, mode=Mode.EXACT)
    rep = analyze_three_chain(identity(ctx), zero_operator(ctx, Kind.SKEW_ADJOINT), identity(ctx), 1, -1)
    assert rep.conclusions["A_C_invertible"] == "pass"


def test_three_chain_gated(mode):
    ctx = SpaceContext(4, mode=mode)
    A = diag(ctx, [1, 2, 3, 4])
    for C in (A, -A):
        rep = analyze_three_chain(A, zero_operator(ctx), C, 1, -1)
        assert rep.conclusions["C_equals_pm_A"] == "pass"
        assert rep.conclusions["delta_is_minus_one"] == "pass"


def test_three_chain_low_rank_needs_gate():
    # rank 2: R^S_A = R^S_C with C != +-A, and {A, B, C} independent
    ctx = SpaceContext(3, mode=Mode.EXACT)
    A, C = diag(ctx, [1, 2, 0]), diag(ctx, [2, 1, 0])
    rep = analyze_three_chain(A, zero_operator(ctx), C, 1, -1)
    assert rep.conclusions["C_equals_pm_A"] == "not_applicable"
    assert not rep.falsified


def test_three_chain_errors():
    ctx = SpaceContext(3, mode=Mode.EXACT)
    I = identity(ctx)
    with pytest.raises(PremiseError):
        analyze_three_chain(I, zero_operator(ctx), I, 1, 1)
    with pytest.raises(NotAChainError):
        analyze_three_chain(I, I, I, 1, -1)
    with pytest.raises(HypothesisError):
        analyze_three_chain(random_operator(ctx, Kind.GENERAL, seed=0), zero_operator(ctx), I, 1, -1)
    with pytest.raises(ValueError):
        analyze_three_chain(I, zero_operator(ctx), I, 1, 2)


def test_star_skew_zero_with_invertible_legs(mode):
    ctx = SpaceContext(4, mode=mode)
    A = zero_operator(ctx, Kind.SKEW_ADJOINT)
    I = identity(ctx)
    rep = analyze_star(A, [I, I], [1, -1])
    assert rep.conclusions["A_zero"] == "pass"
    assert rep.conclusions["B_1_invertible"] == "pass"
    assert sorted(rep.details["orientation"]) == ["image_of_A_in_kernels", "images_in_kernel_of_A"]


def test_star_self_adjoint_rank_one():
    # a rank-one self-adjoint A has R^S_A = 0, so B and -B can cancel around it
    ctx = SpaceContext(4, mode=Mode.EXACT)
    A = diag(ctx, [1, 0, 0, 0])
    B = diag(ctx, [0, 1, 2, 0])
    rep = analyze_star(A, [B, -B], [1, -1])
    assert rep.conclusions["R_A_zero"] == "pass"
    assert rep.conclusions["A_zero"] == "not_applicable"


def test_star_not_a_chain():
    ctx = SpaceContext(3, mode=Mode.EXACT)
    with pytest.raises(NotAChainError):
        analyze_star(identity(ctx), [identity(ctx)], [-1])


@pytest.mark.parametrize("seed", range(5))
def test_four_chain_fixture(seed, mode):
    inst = four_chain_instance(seed, mode)
    rep = analyze_four_chain(*inst["ops"], *inst["signs"])
    assert all(v == "pass" for v in rep.conclusions.values())


def test_four_chain_rank_gate():
    ctx = SpaceContext(4, mode=Mode.EXACT)
    I = identity(ctx)
    Z = zero_operator(ctx)
    with pytest.raises(HypothesisError):
        analyze_four_chain(Z, I, Z, Z, 1, -1, -1)


def reduction_fixture(mode=Mode.EXACT):
    ctx = SpaceContext(3, mode=mode)
    terms = [
        CanonicalTerm.of(diag(ctx, [1, 1, 0])),
        CanonicalTerm.of(diag(ctx, [0, 0, 1]), -1),
        CanonicalTerm.of(diag(ctx, [1, 2, 0])),
    ]
    return Decomposition(ctx, terms).with_target()


def test_reduce_by_kernel_fixture(mode):
    d = reduction_fixture(mode)
    out = reduce_by_kernel(d, 1)
    assert len(out) == 2
    assert out.holds()
    P = diag(d.ctx, [1, 1, 0])
    assert out.target.equals(precompose(P, d.target))
    assert reduced_terms_are_acts(out)


def test_reduce_with_explicit_map():
    d = reduction_fixture()
    A = Operator(d.ctx, d.ctx.asarray([[1, 2, 0], [3, 1, 1], [0, 0, 0]]))
    out = reduce_by_kernel(d, 1, A)
    assert len(out) == 2 and out.holds()


def test_reduce_errors():
    d = reduction_fixture()
    with pytest.raises(DomainError):
        reduce_by_kernel(d, 1, identity(d.ctx))
    ctx = d.ctx
    inv = Decomposition(ctx, [CanonicalTerm.of(identity(ctx)), CanonicalTerm.of(diag(ctx, [1, 0, 0]))]).with_target()
    with pytest.raises(KernelError):
        reduce_by_kernel(inv, 0)
    bad = Decomposition(ctx, d.terms, canonical_tensor(identity(ctx)))
    with pytest.raises(PremiseError):
        reduce_by_kernel(bad, 1)
    with pytest.raises(IndexError):
        reduce_by_kernel(d, 5)


@given(st.integers(0, 10**6))
def test_reduce_random_instances(seed):
    inst = reduction_instance(seed)
    d = inst["decomp"]
    out = reduce_by_kernel(d, inst["pivot"], inst["A"])
    assert len(out) == len(d) - 1
    assert out.residual() == 0
    assert reduced_terms_are_acts(out)


@pytest.mark.parametrize("seed", range(8))
def test_reduce_preserving_fixtures(seed, mode):
    inst = preserve_instance(seed, mode)
    out = reduce_preserving_target(inst["decomp"], inst["pivot"], inst["A"], inst["C"])
    assert out.target.equals(inst["decomp"].target)
    assert out.holds() and len(out) == 2


def test_reduce_preserving_rejects_bad_map():
    ctx = SpaceContext(4, mode=Mode.EXACT)
    C = Operator(ctx, ctx.asarray(J(4, 1)), Kind.SKEW_ADJOINT)
    B = diag(ctx, [0, 0, 1, 0])
    terms = [CanonicalTerm.of(B), CanonicalTerm.of(B, -1), CanonicalTerm.of(C)]
    d = Decomposition(ctx, terms, canonical_tensor(C))
    A = diag(ctx, [2, 1, 0, 0])
    with pytest.raises(HypothesisError):
        reduce_preserving_target(d, 0, A)
    out = reduce_preserving_target(d, 0, diag(ctx, [1, 1, 0, 0]))
    assert out.target.equals(d.target)
