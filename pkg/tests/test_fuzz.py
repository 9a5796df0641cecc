import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from curvtensor.curvature import canonical_tensor
from curvtensor.fuzz import CAMPAIGNS, make_frame, rational_orthogonal, rational_family_instance, run_campaign
from curvtensor.dependence import dependence
from curvtensor.curvature import identity_tensor
from curvtensor.linalg_core import Kind, Mode, rational_array


@given(st.integers(2, 6), st.integers(0, 10**6))
def test_rational_orthogonal_is_orthogonal(n, seed):
    Q = rational_orthogonal(n, np.random.default_rng(seed))
    assert (Q.T @ Q == rational_array(np.eye(n, dtype=np.int64))).all()


@given(st.integers(2, 5), st.integers(0, 10**6))
def test_frame_transport_keeps_kind_and_tensor_relations(n, seed):
    rng = np.random.default_rng(seed)
    frame = make_frame(n, rng, Mode.EXACT, general_metric=True)
    M = np.zeros((n, n), dtype=np.int64)
    M[0, 1], M[1, 0] = -1, 1
    K = frame.op(rational_array(M), Kind.SKEW_ADJOINT)
    assert K.kind is Kind.SKEW_ADJOINT
    assert not canonical_tensor(K).is_zero()


@given(st.integers(0, 10**6))
def test_rational_family_is_properly_dependent(seed):
    inst = rational_family_instance(seed)
    B, C = inst["B"], inst["C"]
    v = dependence([identity_tensor(B.ctx), canonical_tensor(B), canonical_tensor(C)])
    assert v.dependent and v.proper and v.nullity == 1


@pytest.mark.parametrize("name", sorted(CAMPAIGNS))
@pytest.mark.parametrize("mode", ["exact", "float64"])
def test_campaign_smoke(name, mode):
    rep = run_campaign(name, 6, seed=1, mode=mode)
    assert rep["failures"] == [] and not rep["falsified"]
    assert rep["count"] == 6


def test_campaign_deterministic():
    assert run_campaign("three_chain", 5, seed=4) == run_campaign("three_chain", 5, seed=4)


def test_unknown_campaign():
    with pytest.raises(ValueError):
        run_campaign("nope", 1)
