import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chaining_lab.errors import (
    AsymmetricMatrix,
    DimensionMismatch,
    EmptySubset,
    NegativeDistance,
    NonzeroDiagonal,
    TriangleViolation,
)
from chaining_lab.metric import diameter, from_points, restrict, set_distance, validate_metric

from conftest import line_space


def test_single_point_space():
    space = validate_metric(["x"], [[0.0]])
    assert space.size == 1
    assert diameter(space) == 0.0


def test_two_point_space(two_point):
    assert two_point.dist[0, 1] == 5.0
    assert diameter(two_point, (0, 1)) == 5.0


def test_triangle_violation_reports_worst_triple():
    with pytest.raises(TriangleViolation) as info:
        validate_metric(["a", "b", "c"], [[0, 1, 3], [1, 0, 1], [3, 1, 0]])
    assert info.value.triple == (0, 1, 2)
    assert info.value.magnitude == pytest.approx(1.0)
    assert info.value.relative == pytest.approx(1 / 3)


@pytest.mark.parametrize("matrix, exc", [
    ([[0, 1], [2, 0]], AsymmetricMatrix),
    ([[0, -1], [-1, 0]], NegativeDistance),
    ([[1, 1], [1, 0]], NonzeroDiagonal),
])
def test_rejections(matrix, exc):
    with pytest.raises(exc):
        validate_metric(["a", "b"], matrix)


def test_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        validate_metric(["a", "b", "c"], [[0, 1], [1, 0]])


def test_pseudometric_accepted():
    space = validate_metric(["a", "b", "c"], [[0, 0, 2], [0, 0, 2], [2, 2, 0]])
    assert diameter(space, (0, 1)) == 0.0


def test_relative_tolerance_absorbs_roundoff():
    eps = 1e-12
    validate_metric(["a", "b", "c"], [[0, 1, 2 + eps], [1, 0, 1], [2 + eps, 1, 0]])
    with pytest.raises(TriangleViolation):
        validate_metric(["a", "b", "c"], [[0, 1, 2.001], [1, 0, 1], [2.001, 1, 0]])


def test_diameter_conventions(two_point):
    assert diameter(two_point, ()) == 0.0
    assert diameter(two_point, (1,)) == 0.0


def test_uniform_space_diameter(uniform5):
    assert diameter(uniform5) == 1.0


def test_restrict_examples(two_point):
    same = restrict(two_point, (0, 1))
    np.testing.assert_array_equal(same.dist, two_point.dist)
    assert same.labels == two_point.labels
    one = restrict(two_point, (1,))
    assert one.size == 1 and one.labels == ("b",)
    line = line_space(3)
    sub = restrict(line, (0, 2))
    assert sub.dist[0, 1] == 2.0
    with pytest.raises(EmptySubset):
        restrict(line, ())


def test_set_distance():
    line = line_space(5)
    assert set_distance(line, (0, 1), (3, 4)) == 2.0


def test_distance_matrix_is_read_only(two_point):
    with pytest.raises(ValueError):
        two_point.dist[0, 1] = 3.0


def test_backends_agree_on_violation(backend):
    with pytest.raises(TriangleViolation) as info:
        validate_metric(list("abcd"), [[0, 1, 5, 1], [1, 0, 1, 1], [5, 1, 0, 1], [1, 1, 1, 0]])
    assert info.value.triple == (0, 1, 2)


@settings(max_examples=60, deadline=None)
@given(dim=st.integers(1, 8), n=st.integers(2, 32), seed=st.integers(0, 2**32 - 1))
def test_euclidean_clouds_validate(dim, n, seed):
    pts = np.random.default_rng(seed).standard_normal((n, dim)) * 10 ** np.random.default_rng(seed).uniform(-3, 3)
    space = from_points(pts)
    assert space.size == n


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 20), seed=st.integers(0, 2**32 - 1))
def test_diameter_monotone_and_restrict(n, seed):
    rng = np.random.default_rng(seed)
    space = from_points(rng.standard_normal((n, 3)))
    big = tuple(sorted(rng.choice(n, size=rng.integers(1, n + 1), replace=False)))
    small = tuple(sorted(rng.choice(big, size=rng.integers(1, len(big) + 1), replace=False)))
    assert diameter(space, small) <= diameter(space, big)
    assert diameter(restrict(space, big)) == diameter(space, big)
