import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chaining_lab.empirical import FunctionClass
from chaining_lab.errors import DimensionMismatch, NegativeSample, NonFiniteSample
from chaining_lab.orlicz import (
    GAUSSIAN_PSI2,
    PSI1_OVER_PSI2,
    SampleSet,
    class_metric,
    psi2_from_psi1_square,
    psi_alpha_empirical,
    vector_subgaussian_norm,
)

from oracles import psi_alpha_constant

SQRT_8_3 = math.sqrt(8.0 / 3.0)


def _psi(x, alpha=2.0, tol=1e-9):
    return psi_alpha_empirical(x, alpha, tol).norm_value


def test_zero_samples():
    assert _psi(np.zeros(10)) == 0.0
    assert psi2_from_psi1_square(np.zeros(5)).norm_value == 0.0


@pytest.mark.parametrize("c", [1e-6, 0.3, 1.0, 7.5, 1e8])
def test_constant_closed_form(backend, c):
    assert _psi(np.full(50, c)) == pytest.approx(psi_alpha_constant(c, 2.0), rel=1e-8)
    assert psi2_from_psi1_square(np.full(50, c * c)).norm_value == pytest.approx(c / math.sqrt(math.log(2)),
                                                                                 rel=1e-8)


def test_gaussian_oracle(backend):
    x = np.random.default_rng(1).standard_normal(100_000)
    assert _psi(x) == pytest.approx(SQRT_8_3, rel=0.05)
    assert GAUSSIAN_PSI2 == SQRT_8_3


def test_estimate_satisfies_criterion():
    x = np.random.default_rng(2).standard_normal(2000)
    est = psi_alpha_empirical(SampleSet(x), 2.0, 1e-10)
    c = est.norm_value
    assert np.mean(np.exp((x / c) ** 2)) <= 2.0
    assert np.mean(np.exp((x / (c * (1 - 1e-8))) ** 2)) > 2.0
    assert est.to_dict() == {"norm": c, "alpha": 2.0, "n": 2000}


def test_invalid_inputs():
    with pytest.raises(NonFiniteSample):
        SampleSet([1.0, float("nan")])
    with pytest.raises(NonFiniteSample):
        SampleSet([])
    with pytest.raises(NegativeSample):
        psi2_from_psi1_square([1.0, -0.5])
    with pytest.raises(ValueError):
        psi_alpha_empirical([1.0], alpha=0.5)


_seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=50, deadline=None)
@given(seed=_seeds, lam=st.floats(1e-3, 1e3), alpha=st.sampled_from([1.0, 1.5, 2.0]))
def test_homogeneity(seed, lam, alpha):
    x = np.random.default_rng(seed).standard_normal(200)
    assert _psi(lam * x, alpha) == pytest.approx(lam * _psi(x, alpha), rel=1e-9)


@settings(max_examples=50, deadline=None)
@given(seed=_seeds)
def test_monotonicity(seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(300)
    y = x * (1 + rng.random(300))
    assert _psi(x) <= _psi(y)


@settings(max_examples=50, deadline=None)
@given(seed=_seeds, scale=st.floats(0.01, 100))
def test_psi1_square_route(seed, scale):
    x = np.abs(np.random.default_rng(seed).standard_t(5, 500)) * scale
    direct = _psi(x, 2.0, 1e-12)
    via = psi2_from_psi1_square(x * x, 1e-12).norm_value
    assert via == pytest.approx(direct, rel=1e-6)


@settings(max_examples=50, deadline=None)
@given(seed=_seeds, heavy=st.booleans())
def test_psi1_below_scaled_psi2(seed, heavy):
    rng = np.random.default_rng(seed)
    x = rng.standard_cauchy(300) if heavy else rng.standard_normal(300)
    assert _psi(x, 1.0) <= PSI1_OVER_PSI2 * _psi(x, 2.0) * (1 + 1e-8)


@settings(max_examples=40, deadline=None)
@given(seed=_seeds, k=st.integers(1, 4))
def test_reverse_triangle_domination(seed, k):
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal((2, 400, k))
    gap = np.abs(np.linalg.norm(a, axis=1) - np.linalg.norm(b, axis=1))
    assert _psi(gap) <= _psi(np.linalg.norm(a - b, axis=1))


def test_vector_norm_examples(backend):
    assert vector_subgaussian_norm(np.zeros((10, 3))) == 0.0
    x = np.random.default_rng(4).standard_normal(500)
    assert vector_subgaussian_norm(x[:, None]) == _psi(x)
    with pytest.raises(DimensionMismatch):
        vector_subgaussian_norm(np.zeros((0, 2)))


@pytest.mark.parametrize("p", [1, 4, 8])
def test_vector_norm_gaussian(p):
    z = np.random.default_rng(p).standard_normal((100_000, p))
    assert vector_subgaussian_norm(z, 16) == pytest.approx(SQRT_8_3, rel=0.05)


def test_vector_norm_finds_stretched_direction():
    rng = np.random.default_rng(9)
    rot, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    z = rng.standard_normal((50_000, 3)) * np.array([3.0, 1.0, 1.0]) @ rot.T
    assert vector_subgaussian_norm(z, 8) == pytest.approx(3 * SQRT_8_3, rel=0.05)


def test_class_metric_examples():
    x = np.random.default_rng(5).standard_normal((100_000, 1))
    cls = FunctionClass.linear([[[1.0]], [[-1.0]], [[1.0]]])
    space = class_metric(cls, x)
    assert space.dist[0, 2] == 0.0
    assert space.dist[0, 1] == pytest.approx(2 * SQRT_8_3, rel=0.05)


def test_class_metric_is_pseudometric():
    rng = np.random.default_rng(6)
    cls = FunctionClass.linear(rng.standard_normal((16, 5, 2)))
    space = class_metric(cls, rng.standard_normal((3000, 5)))
    d = space.dist
    excess = d[:, None, :] - d[:, :, None] - d.T[None, :, :]
    assert excess.max() <= 1e-6 * d.max()
