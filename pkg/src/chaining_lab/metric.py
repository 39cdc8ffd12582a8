"""Finite (pseudo)metric spaces and subset operations."""
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import (
    AsymmetricMatrix,
    DimensionMismatch,
    EmptySubset,
    InputError,
    NegativeDistance,
    NonzeroDiagonal,
    PointNotInGround,
    TriangleViolation,
)

MAX_POINTS = 4096
DEFAULT_TOL = 1e-9

PointSubset = tuple  # sorted tuple of distinct point indices


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """Labeled points with a dense, validated distance matrix.

    Zero distances between distinct points are allowed (pseudometric). Build
    instances through :func:`validate_metric`; the matrix is read-only.
    """

    labels: tuple
    dist: np.ndarray

    def __len__(self):
        return len(self.labels)

    @property
    def size(self) -> int:
        return len(self.labels)

    def all_points(self) -> PointSubset:
        return tuple(range(len(self.labels)))

    def to_dict(self) -> dict:
        return {"labels": [str(v) for v in self.labels], "dist": self.dist.tolist()}

    def scaled(self, factor: float) -> "FiniteMetricSpace":
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        return _frozen_space(self.labels, self.dist * factor)


def _frozen_space(labels, dist) -> FiniteMetricSpace:
    dist = np.array(dist, dtype=np.float64, copy=True)
    dist.setflags(write=False)
    return FiniteMetricSpace(tuple(labels), dist)


def validate_metric(labels: Sequence, dist_matrix, tol: float = DEFAULT_TOL) -> FiniteMetricSpace:
    """Check symmetry, zero diagonal, nonnegativity and the triangle inequality.

    Symmetry and the diagonal are checked exactly; the triangle inequality is
    checked relative to the longest side, ``(d_ik - d_ij - d_jk) / d_ik <= tol``.
    """
    labels = list(labels)
    dist = np.asarray(dist_matrix, dtype=np.float64)
    n = len(labels)
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise DimensionMismatch(f"distance matrix must be square, got shape {dist.shape}")
    if dist.shape[0] != n:
        raise DimensionMismatch(f"{n} labels but distance matrix is {dist.shape[0]}x{dist.shape[0]}")
    if n == 0:
        raise EmptySubset("metric space needs at least one point")
    if n > MAX_POINTS:
        raise DimensionMismatch(f"at most {MAX_POINTS} points supported, got {n}")
    if not np.all(np.isfinite(dist)):
        raise NegativeDistance("distance matrix contains non-finite entries")
    if np.any(dist < 0):
        i, j = np.argwhere(dist < 0)[0]
        raise NegativeDistance(f"d[{i}][{j}] = {dist[i, j]} is negative")
    if np.any(np.diag(dist) != 0):
        i = int(np.flatnonzero(np.diag(dist) != 0)[0])
        raise NonzeroDiagonal(f"d[{i}][{i}] = {dist[i, i]} is not zero")
    if not np.array_equal(dist, dist.T):
        i, j = np.argwhere(dist != dist.T)[0]
        raise AsymmetricMatrix(f"d[{i}][{j}] = {dist[i, j]} but d[{j}][{i}] = {dist[j, i]}")
    i, j, k, rel = kernels.worst_triangle(dist)
    if rel > tol:
        raise TriangleViolation((i, j, k), dist[i, k] - dist[i, j] - dist[j, k], rel)
    return _frozen_space(labels, dist)


def from_points(points, labels=None) -> FiniteMetricSpace:
    """Euclidean distance space of a point cloud (rows are points)."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    diff = points[:, None, :] - points[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    dist = 0.5 * (dist + dist.T)
    np.fill_diagonal(dist, 0.0)
    if labels is None:
        labels = [str(i) for i in range(points.shape[0])]
    return validate_metric(labels, dist)


def as_subset(space: FiniteMetricSpace, indices: Iterable[int]) -> PointSubset:
    """Validate indices against ``space`` and return them as a sorted tuple."""
    members = sorted(int(i) for i in indices)
    if len(set(members)) != len(members):
        raise InputError(f"duplicate indices in subset {members}")
    n = space.size
    for i in members:
        if not 0 <= i < n:
            raise PointNotInGround(f"point index {i} out of range for a space of size {n}")
    return tuple(members)


def diameter(space: FiniteMetricSpace, subset: Iterable[int] | None = None) -> float:
    """Largest pairwise distance inside ``subset``; 0 for empty and singleton sets."""
    idx = np.asarray(space.all_points() if subset is None else tuple(subset), dtype=np.int64)
    if idx.size < 2:
        return 0.0
    return float(space.dist[np.ix_(idx, idx)].max())


def set_distance(space: FiniteMetricSpace, a: Iterable[int], b: Iterable[int]) -> float:
    """``min d(u, v)`` over ``u`` in ``a`` and ``v`` in ``b``."""
    a = np.asarray(tuple(a), dtype=np.int64)
    b = np.asarray(tuple(b), dtype=np.int64)
    if a.size == 0 or b.size == 0:
        raise EmptySubset("set distance needs two nonempty sets")
    return float(space.dist[np.ix_(a, b)].min())


def restrict(space: FiniteMetricSpace, subset: Iterable[int]) -> FiniteMetricSpace:
    """Induced sub-space on ``subset`` (in sorted index order)."""
    members = as_subset(space, subset)
    if not members:
        raise EmptySubset("cannot restrict to an empty subset")
    idx = np.asarray(members, dtype=np.int64)
    return _frozen_space([space.labels[i] for i in members], space.dist[np.ix_(idx, idx)])
