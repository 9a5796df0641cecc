import numpy as np
import pytest
from gmpy2 import mpq
from hypothesis import given
from hypothesis import strategies as st

from curvtensor.errors import ConstraintError, ContextError, DomainError, KindError
from curvtensor.linalg_core import (
    Kind,
    Mode,
    Operator,
    SpaceContext,
    adjoint,
    bareiss_rank,
    congruence,
    infer_kind,
    inverse,
    kernel_basis,
    matrix_rank,
    nullspace,
    operators_independent,
    orthogonal_projection,
    random_operator,
    rank,
    rational_array,
    to_rational,
)

small_ints = st.integers(min_value=-4, max_value=4)


def int_matrix(rows, cols):
    return st.lists(st.lists(small_ints, min_size=cols, max_size=cols), min_size=rows, max_size=rows).map(
        lambda m: np.array(m, dtype=np.int64)
    )


def test_to_rational_forms():
    assert to_rational("3/4") == mpq(3, 4)
    assert to_rational(2) == mpq(2)
    assert to_rational(0.5) == mpq(1, 2)
    with pytest.raises((ValueError, TypeError)):
        to_rational("abc")


def test_context_rejects_bad_phi():
    with pytest.raises(ContextError):
        SpaceContext(2, [[1, 2], [0, 1]], Mode.EXACT)
    with pytest.raises(ContextError):
        SpaceContext(2, [[1, 0], [0, -1]], Mode.EXACT)
    with pytest.raises(ContextError):
        SpaceContext(0)


def test_with_mode_round_trip():
    ctx = SpaceContext(2, [[2, 1], [1, 2]], Mode.FLOAT)
    ex = ctx.with_mode("exact")
    assert ex.exact and ex.phi[0, 1] == mpq(1)
    assert not ex.compatible(ctx)


@given(int_matrix(4, 5))
def test_bareiss_matches_sympy(M):
    import sympy

    assert bareiss_rank(rational_array(M)) == sympy.Matrix(M.tolist()).rank()


@given(int_matrix(4, 4))
def test_exact_and_float_rank_agree_on_integer_matrices(M):
    ex = SpaceContext(4, mode=Mode.EXACT)
    fl = SpaceContext(4, mode=Mode.FLOAT)
    assert matrix_rank(ex, rational_array(M)) == matrix_rank(fl, M.astype(float))


@given(int_matrix(3, 5))
def test_nullspace_vectors_are_annihilated(M):
    ctx = SpaceContext(5, mode=Mode.EXACT)
    Mq = rational_array(M)
    basis = nullspace(ctx, Mq)
    assert len(basis) == 5 - bareiss_rank(Mq)
    for v in basis:
        assert all(x == 0 for x in Mq @ v)


def test_inverse_exact(exact3):
    M = rational_array([[2, 1, 0], [0, 1, 0], [1, 0, 1]])
    assert (M @ inverse(exact3, M) == exact3.eye()).all()
    with pytest.raises(DomainError):
        inverse(exact3, rational_array([[1, 2, 3], [2, 4, 6], [0, 0, 1]]))


def test_operator_kind_validation():
    ctx = SpaceContext(2, [[2, 0], [0, 1]], Mode.EXACT)
    # phi-self-adjoint means phi A symmetric, not A symmetric
    A = rational_array([[1, 1], [2, 1]])
    assert Operator(ctx, A, Kind.SELF_ADJOINT).kind is Kind.SELF_ADJOINT
    with pytest.raises(KindError):
        Operator(ctx, rational_array([[1, 1], [1, 1]]), Kind.SELF_ADJOINT)
    assert infer_kind(ctx, rational_array([[0, -1], [2, 0]])) is Kind.SKEW_ADJOINT


def test_adjoint_defining_property():
    ctx = SpaceContext(3, [[2, 1, 0], [1, 2, 0], [0, 0, 1]], Mode.EXACT)
    A = random_operator(ctx, Kind.GENERAL, seed=1)
    As = adjoint(A)
    rng = np.random.default_rng(0)
    for _ in range(5):
        x, y = (rational_array(rng.integers(-3, 4, size=3)) for _ in range(2))
        assert ctx.inner(A.apply(x), y) == ctx.inner(x, As.apply(y))


@pytest.mark.parametrize("mode", ["exact", "float64"])
@pytest.mark.parametrize("kind", ["self-adjoint", "skew-adjoint", "general"])
def test_random_operator_rank_constraint(mode, kind):
    ctx = SpaceContext(5, mode=mode)
    for r in ([0, 2, 4] if kind == "skew-adjoint" else [0, 1, 3, 5]):
        A = random_operator(ctx, kind, rank_constraint=r, seed=r)
        assert A.kind is Kind(kind)
        assert rank(A) == r


def test_random_operator_infeasible():
    ctx = SpaceContext(3, mode=Mode.EXACT)
    with pytest.raises(ConstraintError):
        random_operator(ctx, Kind.SKEW_ADJOINT, rank_constraint=3, seed=0)
    with pytest.raises(ConstraintError):
        random_operator(ctx, Kind.SELF_ADJOINT, rank_constraint=4, seed=0)


def test_random_operator_deterministic():
    ctx = SpaceContext(4, mode=Mode.EXACT)
    a = random_operator(ctx, Kind.SELF_ADJOINT, seed=7)
    b = random_operator(ctx, Kind.SELF_ADJOINT, seed=7)
    assert a.equals(b)


def test_congruence_keeps_kind(exact3):
    B = random_operator(exact3, Kind.SKEW_ADJOINT, seed=3)
    A = random_operator(exact3, Kind.GENERAL, seed=4)
    assert congruence(A, B).kind is Kind.SKEW_ADJOINT


def test_orthogonal_projection_onto_kernel():
    ctx = SpaceContext(4, [[2, 1, 0, 0], [1, 2, 0, 0], [0, 0, 1, 0], [0, 0, 0, 3]], Mode.EXACT)
    B = random_operator(ctx, Kind.SELF_ADJOINT, rank_constraint=2, seed=5)
    P = orthogonal_projection(ctx, kernel_basis(B))
    assert (B @ P).is_zero()
    assert (P @ P).equals(P)
    assert rank(P) == 2


def test_operators_independent(exact3):
    I = Operator(exact3, exact3.eye(), Kind.SELF_ADJOINT)
    assert operators_independent([I])
    assert not operators_independent([I, I.scaled(2)])
