import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from curvtensor.linalg_core import Mode, SpaceContext

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def exact3():
    return SpaceContext(3, mode=Mode.EXACT)


@pytest.fixture
def float3():
    return SpaceContext(3, mode=Mode.FLOAT)


def J(n: int, blocks: int, scale=1) -> np.ndarray:
    """Block-diagonal skew matrix with ``blocks`` copies of [[0,-s],[s,0]] padded by zeros."""
    M = np.zeros((n, n), dtype=np.int64)
    for b in range(blocks):
        M[2 * b, 2 * b + 1] = -scale
        M[2 * b + 1, 2 * b] = scale
    return M


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[number])
