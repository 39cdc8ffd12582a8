import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from chaining_lab import _accel  # noqa: E402
from chaining_lab.metric import from_points, validate_metric  # noqa: E402

BACKENDS = ["numba", "numpy"] if _accel.HAS_NUMBA else ["numpy"]


@pytest.fixture(params=BACKENDS)
def backend(request):
    before = _accel.backend()
    _accel.set_backend(request.param)
    yield request.param
    _accel.set_backend(before)


@pytest.fixture
def two_point():
    return validate_metric(["a", "b"], [[0.0, 5.0], [5.0, 0.0]])


@pytest.fixture
def unit_two_point():
    return validate_metric(["a", "b"], [[0.0, 1.0], [1.0, 0.0]])


@pytest.fixture
def uniform5():
    return validate_metric(list("abcde"), 1.0 - np.eye(5))


def line_space(n):
    x = np.arange(n, dtype=float)
    return validate_metric([str(i) for i in range(n)], np.abs(x[:, None] - x[None, :]))


def random_cloud(rng, n, dim=None):
    dim = dim or int(rng.integers(1, 7))
    return from_points(rng.standard_normal((n, dim)))
