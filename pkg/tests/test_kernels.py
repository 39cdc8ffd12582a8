import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.distance import cdist

from chaining_lab import _accel, kernels

from oracles import minmax_by_coloring, minmax_by_enumeration


def _cloud(seed, n, dim=3):
    pts = np.random.default_rng(seed).standard_normal((n, dim))
    return cdist(pts, pts)


def _block_max(dist, labels):
    labels = np.asarray(labels)
    same = labels[:, None] == labels[None, :]
    return float(np.where(same, dist, 0.0).max()) if len(labels) else 0.0


@pytest.mark.parametrize("n", range(1, 10))
def test_minmax_matches_enumeration(backend, n):
    dist = _cloud(n, n)
    value, labels = kernels.minmax_partition(dist, 4)
    assert value == pytest.approx(minmax_by_enumeration(dist.tolist()), rel=1e-12, abs=0)
    assert len(set(labels.tolist())) <= 4
    assert _block_max(dist, labels) == value


@pytest.mark.parametrize("n", [10, 12, 13, 14])
def test_minmax_matches_coloring(backend, n):
    dist = _cloud(100 + n, n, dim=2)
    value, _ = kernels.minmax_partition(dist, 4)
    assert value == minmax_by_coloring(dist.tolist())


def test_backends_return_same_labeling():
    if not _accel.HAS_NUMBA:
        pytest.skip("numba not installed")
    before = _accel.backend()
    try:
        for n in range(1, 13):
            dist = _cloud(7 * n, n)
            _accel.set_backend("numba")
            a = kernels.minmax_partition(dist, 4)
            _accel.set_backend("numpy")
            b = kernels.minmax_partition(dist, 4)
            assert a[0] == b[0]
            np.testing.assert_array_equal(a[1], b[1])
    finally:
        _accel.set_backend(before)


def test_restricted_growth_strings_count():
    # Stirling sums S(n,1..4): number of partitions into at most four blocks
    assert len(kernels.restricted_growth_strings(5, 4)[0]) == 51
    assert len(kernels.restricted_growth_strings(6, 4)[0]) == 187


def test_worst_triangle_metric_is_nonpositive(backend):
    _, _, _, rel = kernels.worst_triangle(_cloud(3, 12))
    assert rel <= 1e-12


def test_worst_triangle_finds_violation(backend):
    dist = np.array([[0, 1, 3], [1, 0, 1], [3, 1, 0]], dtype=float)
    i, j, k, rel = kernels.worst_triangle(dist)
    assert (i, j, k) == (0, 1, 2)
    assert rel == pytest.approx(1 / 3)


def test_orlicz_criterion_constant(backend):
    u = np.full(10, 2.0)
    c = 2.0 / np.sqrt(np.log(2.0))
    assert kernels.orlicz_criterion(u, 2.0, c) == pytest.approx(2.0, rel=1e-12)


def test_orlicz_bisect_brackets_root(backend):
    u = np.abs(np.random.default_rng(0).standard_normal(1000))
    c = kernels.orlicz_bisect(u, 2.0, 0.1, 100.0, 1e-10)
    assert kernels.orlicz_criterion(u, 2.0, c) <= 2.0
    assert kernels.orlicz_criterion(u, 2.0, c * (1 - 1e-8)) > 2.0


@settings(max_examples=30, deadline=None)
@given(n=st.integers(5, 9), seed=st.integers(0, 2**32 - 1))
def test_minmax_property_random(n, seed):
    dist = _cloud(seed, n, dim=2)
    value, _ = kernels.minmax_partition(dist, 4)
    assert value == pytest.approx(minmax_by_coloring(dist.tolist()), rel=1e-12, abs=0)
