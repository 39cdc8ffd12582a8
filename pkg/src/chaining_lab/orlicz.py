"""Empirical Orlicz psi_alpha norms under the Luxemburg convention.

``||X||_{psi_alpha} = inf{c > 0 : E exp(|X|^alpha / c^alpha) <= 2}``, with the
expectation replaced by the sample mean.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm as _std_normal
from scipy.stats import qmc

from . import kernels
from .errors import DimensionMismatch, NegativeSample, NonFiniteSample
from .metric import FiniteMetricSpace, validate_metric

DEFAULT_TOL = 1e-9
# class metrics are checked for the triangle inequality, so bisect them tighter
METRIC_TOL = 1e-12
MAX_BRACKET = 2.0 ** 64

# psi_2 norm of a standard Gaussian: E exp(X^2/c^2) = (1 - 2/c^2)^(-1/2) = 2
GAUSSIAN_PSI2 = math.sqrt(8.0 / 3.0)
# ||X||_{psi_1} <= PSI1_OVER_PSI2 * ||X||_{psi_2} for every X; constants attain it
PSI1_OVER_PSI2 = 1.0 / math.sqrt(math.log(2.0))


@dataclass(frozen=True)
class SampleSet:
    values: np.ndarray
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).ravel()
        if values.size == 0:
            raise NonFiniteSample("sample set is empty")
        if not np.all(np.isfinite(values)):
            raise NonFiniteSample("samples must be finite")
        object.__setattr__(self, "values", values)

    @property
    def size(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class OrliczEstimate:
    norm_value: float
    alpha: float
    sample_size: int
    bisection_tol: float

    def __float__(self):
        return self.norm_value

    def to_dict(self) -> dict:
        return {"norm": self.norm_value, "alpha": self.alpha, "n": self.sample_size}


def _as_values(samples) -> np.ndarray:
    if isinstance(samples, SampleSet):
        return samples.values
    return SampleSet(samples).values


def psi_alpha_empirical(samples, alpha: float = 2.0, tol: float = DEFAULT_TOL) -> OrliczEstimate:
    """Luxemburg psi_alpha norm of the empirical distribution of ``samples``.

    Bisects in units of ``max|x|`` so scaling the samples scales the result
    exactly. The returned value satisfies the criterion (upper end of the
    final bracket) and is within relative ``tol`` of the infimum.
    """
    if alpha < 1:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    x = np.abs(_as_values(samples))
    top = float(x.max())
    if top == 0.0:
        return OrliczEstimate(0.0, float(alpha), x.size, tol)
    u = x / top
    hi = 1.0
    while kernels.orlicz_criterion(u, alpha, hi) > 2.0:
        hi *= 2.0
        if hi > MAX_BRACKET:
            raise ArithmeticError("could not bracket the Orlicz norm from above")
    lo = hi / 2.0
    while kernels.orlicz_criterion(u, alpha, lo) <= 2.0:
        lo /= 2.0
        if lo < 1.0 / MAX_BRACKET:
            raise ArithmeticError("could not bracket the Orlicz norm from below")
    c = kernels.orlicz_bisect(u, alpha, lo, min(hi, 2.0 * lo), tol)
    return OrliczEstimate(c * top, float(alpha), x.size, tol)


def psi2_from_psi1_square(squares, tol: float = DEFAULT_TOL) -> OrliczEstimate:
    """psi_2 norm of ``|X|`` computed as ``sqrt(||X^2||_{psi_1})``."""
    sq = _as_values(squares)
    if np.any(sq < 0):
        raise NegativeSample("inputs are squares and must be nonnegative")
    est = psi_alpha_empirical(sq, alpha=1.0, tol=tol)
    return OrliczEstimate(math.sqrt(est.norm_value), 2.0, est.sample_size, tol)


def gaussian_psi2(std: float = 1.0) -> float:
    """Population psi_2 norm of N(0, std^2)."""
    return std * GAUSSIAN_PSI2


def quasi_uniform_directions(p: int, count: int) -> np.ndarray:
    """``count`` unit vectors in R^p from an unscrambled Halton sequence."""
    if count <= 0:
        return np.zeros((0, p))
    points = qmc.Halton(d=p, scramble=False).random(count + 1)[1:]
    gauss = _std_normal.ppf(points)
    lengths = np.linalg.norm(gauss, axis=1, keepdims=True)
    keep = lengths[:, 0] > 0
    return gauss[keep] / lengths[keep]


def _vector_samples(vector_samples) -> np.ndarray:
    try:
        z = np.asarray(vector_samples, dtype=np.float64)
    except ValueError as exc:
        raise DimensionMismatch("vector samples have inconsistent lengths") from exc
    if z.ndim == 1:
        z = z[:, None]
    if z.ndim != 2 or z.shape[0] == 0 or z.shape[1] == 0:
        raise DimensionMismatch(f"expected an N x p array of samples, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise NonFiniteSample("samples must be finite")
    return z


def subgaussian_directions(z: np.ndarray, n_directions: int) -> np.ndarray:
    """Canonical basis, Halton directions and the top second-moment eigenvector."""
    p = z.shape[1]
    second = z.T @ z / z.shape[0]
    _, vecs = np.linalg.eigh(second)
    top = vecs[:, -1]
    return np.vstack([np.eye(p), quasi_uniform_directions(p, n_directions), top[None, :]])


def vector_subgaussian_norm(vector_samples, n_directions: int = 64, tol: float = DEFAULT_TOL) -> float:
    """Lower bound on ``sup_{|u| <= 1} ||<Z, u>||_{psi_2}`` over a finite direction set."""
    if n_directions < 1:
        raise ValueError("n_directions must be >= 1")
    z = _vector_samples(vector_samples)
    dirs = subgaussian_directions(z, n_directions)
    return max(psi_alpha_empirical(z @ u, 2.0, tol).norm_value for u in dirs)


def class_metric(function_class, samples, alpha: float = 2.0, tol: float = METRIC_TOL) -> FiniteMetricSpace:
    """Pairwise ``||  ||g_i(X) - g_j(X)||  ||_{psi_alpha}`` on one shared sample of X.

    Using the same sample for every pair makes this the Luxemburg norm of a
    single empirical measure, hence an exact pseudometric up to ``tol``.
    """
    values = function_class.evaluate(samples)  # (m, N, k)
    m = values.shape[0]
    dist = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            diff = function_class.vector_norm(values[i] - values[j])
            dist[i, j] = dist[j, i] = psi_alpha_empirical(diff, alpha, tol).norm_value
    return validate_metric(function_class.labels, dist, tol=max(1e-9, 100 * tol))
