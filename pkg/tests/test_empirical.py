import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chaining_lab.config import parse_tail_config
from chaining_lab.empirical import (
    FunctionClass,
    MeanOracle,
    SignedEnvelopeClass,
    TailConfig,
    analytic_mean_oracle,
    heldout_mean_oracle,
    nominal_t,
    rate_regression,
    sup_deviation,
    symmetrization_identity_check,
    symmetrize_class,
    tail_experiment,
)
from chaining_lab.ensembles import Ensemble
from chaining_lab.errors import (
    ConfigInvalid,
    DegenerateGrid,
    InsufficientReplications,
    NotSymmetricClass,
    OracleMissing,
)

IDENTITY_1D = FunctionClass.linear([[[1.0]]])


def _tail_payload(matrices, **extra):
    payload = {
        "seed": 7,
        "n_grid": [16, 64, 256, 1024],
        "replications": 60,
        "distribution": {"kind": "gaussian", "cholesky_factor": [[1.0]]},
        "class": {"p": 1, "k": 1, "matrices": matrices},
        "metric_samples": 4000,
    }
    payload.update(extra)
    return payload


# --- classes --------------------------------------------------------------

def test_symmetrize_examples():
    g = FunctionClass.linear([[[1.0, 2.0]]])
    sym = symmetrize_class(g)
    assert len(sym) == 2 and sym.symmetric
    assert len(symmetrize_class(sym)) == 2
    three = FunctionClass.linear([[[1.0]], [[-1.0]], [[2.0]]])
    assert len(symmetrize_class(three)) == 4


def test_symmetrize_callables():
    G = FunctionClass((lambda x: np.sin(x), lambda x: x ** 2), 1, 1)
    sym = symmetrize_class(G)
    assert len(sym) == 4
    x = np.linspace(-1, 1, 5)[:, None]
    np.testing.assert_allclose(sym.evaluate(x)[2], -np.sin(x))


def test_symmetric_flag_is_checked():
    with pytest.raises(NotSymmetricClass):
        FunctionClass((lambda x: x,), 1, 1, symmetric=True)
    assert FunctionClass.linear([[[1.0]], [[-1.0]]]).symmetric


def test_norm_kinds():
    mats = np.zeros((1, 2, 3))
    mats[0, 0] = [3.0, -4.0, 0.0]
    x = np.array([[1.0, 0.0]])
    assert FunctionClass.linear(mats).norms(x)[0, 0] == 5.0
    assert FunctionClass.linear(mats, "max").norms(x)[0, 0] == 4.0
    assert FunctionClass.linear(mats, "p_norm", 1.0).norms(x)[0, 0] == 7.0


def test_signed_envelope_squares_match():
    rng = np.random.default_rng(0)
    G = FunctionClass.linear(rng.standard_normal((3, 4, 2)))
    x = rng.standard_normal((10, 4))
    eps = rng.choice([-1.0, 1.0], 10)
    f0 = SignedEnvelopeClass(G).evaluate(x, eps)
    assert f0.shape == (6, 10)
    np.testing.assert_allclose(f0[:3] ** 2, G.squared_norms(x), rtol=1e-12)
    np.testing.assert_array_equal(f0[3:], -f0[:3])


# --- deviations -----------------------------------------------------------

def test_sup_deviation_examples():
    zero = FunctionClass.linear([[[0.0]]])
    assert sup_deviation(zero, [[1.0], [3.0]], [0.0]).sup_dev == 0.0
    assert sup_deviation(IDENTITY_1D, [[1.0], [-1.0]], [1.0]).sup_dev == 0.0
    dev = sup_deviation(IDENTITY_1D, [[2.0], [0.0]], MeanOracle([1.0], "analytic"))
    assert dev.sup_dev == 1.0 and dev.argmax_g == 0 and dev.n == 2
    with pytest.raises(OracleMissing):
        sup_deviation(IDENTITY_1D, [[1.0]], None)


def test_sup_deviation_tie_goes_to_lowest_index():
    G = FunctionClass.linear([[[1.0]], [[-1.0]]])
    assert sup_deviation(G, [[2.0]], [1.0, 1.0]).argmax_g == 0


def test_mean_oracles_agree():
    rng = np.random.default_rng(1)
    G = FunctionClass.linear(rng.standard_normal((4, 3, 2)))
    chol = np.tril(rng.standard_normal((3, 3))) + 3 * np.eye(3)
    ens = Ensemble.gaussian(chol)
    exact = analytic_mean_oracle(G, ens.covariance()).values
    held = heldout_mean_oracle(G, ens.sample(rng, 400_000)).values
    np.testing.assert_allclose(held, exact, rtol=0.02)
    with pytest.raises(OracleMissing):
        analytic_mean_oracle(FunctionClass.linear(G.matrices, "max"), np.eye(3))


def test_symmetrization_single_point():
    x = np.array([[1.5]])
    assert symmetrization_identity_check(IDENTITY_1D, x, [-1.0], mean_oracle=[1.0]) == 0.0


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 6), n=st.integers(1, 50),
       kind=st.sampled_from(["euclidean", "max", "p_norm"]))
def test_symmetrization_identity_random(seed, m, n, kind):
    rng = np.random.default_rng(seed)
    p, k = rng.integers(1, 5, size=2)
    G = FunctionClass.linear(rng.standard_normal((m, p, k)), kind, 3.0)
    x = rng.standard_normal((n, p))
    eps = rng.choice([-1.0, 1.0], n)
    scale = max(1.0, float(G.squared_norms(x).max()))
    assert symmetrization_identity_check(G, x, eps) <= 1e-12 * scale
    assert symmetrization_identity_check(G, x, eps, np.ones(m)) <= 1e-12 * scale


# --- rate regression ------------------------------------------------------

@pytest.mark.parametrize("power", [0.5, 1.0])
def test_rate_regression_exact(power):
    n = [128, 512, 2048, 8192]
    slope, stderr = rate_regression(n, [3.0 * v ** -power for v in n])
    assert slope == pytest.approx(-power, abs=1e-12)
    assert stderr == pytest.approx(0.0, abs=1e-12)


def test_rate_regression_degenerate():
    with pytest.raises(DegenerateGrid):
        rate_regression([1, 2, 3], [1.0, 0.5, 0.3])
    with pytest.raises(DegenerateGrid):
        rate_regression([1, 2, 2, 3, 3], [1.0] * 5)
    with pytest.raises(DegenerateGrid):
        rate_regression([1, 2, 3, 4], [1.0, 0.0, 1.0, 1.0])


def test_nominal_t_inverts_tail():
    for level in (0.5, 0.9, 0.99):
        t = nominal_t(level)
        assert 1 - 2 * math.exp(-t ** 0.4) == pytest.approx(level, rel=1e-12)


# --- tail experiment ------------------------------------------------------

def test_tail_zero_class():
    report = tail_experiment(parse_tail_config(_tail_payload([[0.0]])))
    assert np.all(report.quantiles == 0.0)
    assert np.all(report.ratio == 0.0)
    assert report.rate_slope is None


def test_tail_scalar_class():
    cfg = parse_tail_config(_tail_payload([[1.0]], replications=200, **{"class": {
        "p": 1, "k": 1, "matrices": [[1.0]], "symmetrize": True}}))
    assert len(cfg.function_class) == 2
    report = tail_experiment(cfg)
    assert np.all(np.diff(report.quantiles, axis=1) >= 0)
    assert -0.7 <= report.rate_slope <= -0.3
    # |mean X^2 - 1| has median about 0.674 * sqrt(2/n)
    assert report.medians[-1] == pytest.approx(0.674 * math.sqrt(2 / 1024), rel=0.3)
    assert report.gamma2_hat > 0 and report.d_psi1_hat > 0
    assert report.oracle_source == "analytic"
    assert len(report.rows()) == 16


def test_tail_threads_do_not_change_results():
    cfg = parse_tail_config(_tail_payload([[1.0]]))
    a = tail_experiment(cfg, threads=1)
    b = tail_experiment(cfg, threads=3)
    np.testing.assert_array_equal(a.quantiles, b.quantiles)


def test_tail_heldout_oracle_for_max_norm():
    payload = _tail_payload([[1.0, 0.5]])
    payload["class"] = {"p": 1, "k": 2, "matrices": [[1.0, 0.5]], "norm": "max"}
    payload["n_grid"] = [4, 8, 16, 32]
    report = tail_experiment(parse_tail_config(payload))
    assert report.oracle_source == "heldout"


def test_tail_config_errors():
    with pytest.raises(InsufficientReplications):
        parse_tail_config(_tail_payload([[1.0]], replications=49))
    with pytest.raises(ConfigInvalid) as info:
        parse_tail_config(_tail_payload([[1.0]], n_grid=[0]))
    assert list(info.value.path) == ["n_grid", 0]
    with pytest.raises(ConfigInvalid):
        parse_tail_config({k: v for k, v in _tail_payload([[1.0]]).items() if k != "seed"})
    G = FunctionClass.linear([[[1.0]]])
    with pytest.raises(ConfigInvalid):
        TailConfig(1, (8,), 50, Ensemble.standard_gaussian(2), G)
