"""Linear classes ``g(x) = A^T x`` and the sample-covariance deviation experiment."""
import math
from dataclasses import dataclass, field

import numpy as np

from . import chaining
from .empirical import (
    DEFAULT_LEVELS,
    MIN_REPLICATIONS,
    FunctionClass,
    TailReport,
    _try_rate,
    config_digest,
    fit_cells,
)
from .ensembles import Ensemble, gaussian_sigma
from .errors import (
    ConfigInvalid,
    DimensionMismatch,
    EmptyBatch,
    InsufficientReplications,
    NotSymmetricClass,
)
from .metric import validate_metric
from .orlicz import GAUSSIAN_PSI2, psi_alpha_empirical, vector_subgaussian_norm
from .seeding import CLASS_STREAM, METRIC_STREAM, WIDTH_STREAM, derive_stream, replicate, rng_for


@dataclass(frozen=True, eq=False)
class MatrixClass:
    """Finite set of ``p x k`` matrices; ``symmetric`` means ``-A`` is present for each ``A``."""

    p: int
    k: int
    matrices: np.ndarray
    symmetric: bool = False

    def __post_init__(self):
        mats = np.asarray(self.matrices, dtype=np.float64)
        if mats.ndim == 2 and self.k == 1 and mats.shape[1] == self.p:
            mats = mats[:, :, None]
        if mats.ndim != 3 or mats.shape[1:] != (self.p, self.k):
            raise DimensionMismatch(f"matrices must have shape (m, {self.p}, {self.k}), got {mats.shape}")
        if mats.shape[0] == 0:
            raise DimensionMismatch("matrix class is empty")
        mats = mats.copy()
        mats.setflags(write=False)
        object.__setattr__(self, "matrices", mats)
        if self.symmetric and not self.is_closed_under_negation():
            raise NotSymmetricClass("class is flagged symmetric but -A is missing for some A")

    def __len__(self):
        return self.matrices.shape[0]

    @classmethod
    def from_dict(cls, spec: dict) -> "MatrixClass":
        """Parse ``{"p", "k", "matrices": [[row-major]...], "symmetrize"}``."""
        p, k = int(spec["p"]), int(spec["k"])
        flat = [np.asarray(m, dtype=np.float64) for m in spec["matrices"]]
        for i, m in enumerate(flat):
            if m.size != p * k:
                raise ConfigInvalid(f"matrix has {m.size} entries, expected {p * k}", ("matrices", i))
        mats = np.stack([m.reshape(p, k) for m in flat])
        obj = cls(p, k, mats)
        if spec.get("symmetrize", False):
            return obj.symmetrize()
        return cls(p, k, mats, obj.is_closed_under_negation())

    def to_dict(self) -> dict:
        return {"p": self.p, "k": self.k, "matrices": [a.ravel().tolist() for a in self.matrices],
                "symmetrize": False}

    def is_closed_under_negation(self) -> bool:
        mats = self.matrices
        return all(any(np.array_equal(-a, b) for b in mats) for a in mats)

    def symmetrize(self) -> "MatrixClass":
        """Append ``-A`` for every ``A`` whose negation is missing (order preserved)."""
        keep = []
        for a in list(self.matrices) + [-a for a in self.matrices]:
            if not any(np.array_equal(a, b) for b in keep):
                keep.append(a)
        return MatrixClass(self.p, self.k, np.stack(keep), True)

    def scaled(self, factor: float) -> "MatrixClass":
        return MatrixClass(self.p, self.k, factor * self.matrices, self.symmetric)

    def outer_products(self) -> np.ndarray:
        """``(m, p, p)`` stack of ``A A^T``."""
        return np.einsum("mik,mjk->mij", self.matrices, self.matrices)

    def frobenius_norms(self) -> np.ndarray:
        return np.sqrt(np.einsum("mpk,mpk->m", self.matrices, self.matrices))

    def to_function_class(self) -> FunctionClass:
        return FunctionClass.linear(self.matrices, "euclidean", symmetric=self.symmetric)


@dataclass(frozen=True, eq=False)
class CovariancePair:
    S_n: np.ndarray
    Sigma: np.ndarray
    n: int


def sample_covariance(x) -> np.ndarray:
    """``n^-1 sum_i x_i x_i^T`` (uncentred: the vectors are mean zero by assumption)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[0] == 0:
        raise EmptyBatch("sample covariance of an empty batch")
    s = x.T @ x / x.shape[0]
    return 0.5 * (s + s.T)


def quadratic_sup(pair: CovariancePair, cls: MatrixClass) -> tuple:
    """``max_A |<S_n - Sigma, A A^T>|`` over the class and the lowest maximising index."""
    diff = np.asarray(pair.S_n) - np.asarray(pair.Sigma)
    if diff.shape != (cls.p, cls.p):
        raise DimensionMismatch(f"covariances are {diff.shape}, class has p = {cls.p}")
    values = np.abs(np.einsum("ij,mij->m", diff, cls.outer_products()))
    j = int(np.argmax(values))
    return float(values[j]), j


def innerproduct_identity_check(x, a) -> float:
    """Relative gap between ``n^-1 sum ||A^T x_i||^2`` and ``<S_n, A A^T>``."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if x.shape[1] != a.shape[0]:
        raise DimensionMismatch(f"samples have p = {x.shape[1]}, matrix has {a.shape[0]} rows")
    proj = x @ a
    lhs = float(np.mean(np.einsum("nk,nk->n", proj, proj)))
    rhs = float(np.sum(sample_covariance(x) * (a @ a.T)))
    scale = max(abs(lhs), abs(rhs))
    return 0.0 if scale == 0.0 else abs(lhs - rhs) / scale


@dataclass(frozen=True)
class FrobeniusCheck:
    lhs: float
    rhs: float
    frobenius: float
    z_psi2: float
    margin: float
    passed: bool


def frobenius_psi2_check(a, z_sampler, n_samples: int = 100_000, margin: float = 0.1,
                         standard_gaussian: bool = False, n_directions: int = 64) -> FrobeniusCheck:
    """Compare ``|| ||A^T Z||_2 ||_{psi_2}`` with ``||A||_F ||Z||_{psi_2}``.

    ``z_sampler(N)`` returns an ``N x p`` array. When ``standard_gaussian`` is
    set, ``||Z||_{psi_2}`` is the exact value ``sqrt(8/3)``; otherwise it is the
    direction-set lower bound from :func:`vector_subgaussian_norm`.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if n_samples < 10_000:
        raise ValueError("frobenius_psi2_check needs at least 1e4 samples")
    z = np.asarray(z_sampler(n_samples), dtype=np.float64)
    if z.shape[1] != a.shape[0]:
        raise DimensionMismatch(f"Z has p = {z.shape[1]}, A has {a.shape[0]} rows")
    proj = z @ a
    lhs = psi_alpha_empirical(np.sqrt(np.einsum("nk,nk->n", proj, proj)), 2.0).norm_value
    z_norm = GAUSSIAN_PSI2 if standard_gaussian else vector_subgaussian_norm(z, n_directions)
    frob = float(np.linalg.norm(a))
    rhs = frob * z_norm
    return FrobeniusCheck(lhs, rhs, frob, z_norm, margin, lhs <= rhs * (1.0 + margin))


@dataclass(frozen=True)
class WidthEstimate:
    mean_width: float
    std_error: float
    mc_reps: int


def gaussian_mean_width(cls: MatrixClass, mc_reps: int = 10_000, seed: int = 0, chunk: int = 8192) -> WidthEstimate:
    """Monte Carlo ``E max_A <Z, A>_F`` for ``Z`` with i.i.d. N(0, 1) entries."""
    if mc_reps < 100:
        raise ValueError("gaussian_mean_width needs at least 100 repetitions")
    rng = np.random.Generator(np.random.PCG64(seed))
    flat = cls.matrices.reshape(len(cls), -1)
    sups = np.empty(mc_reps)
    for start in range(0, mc_reps, chunk):
        stop = min(start + chunk, mc_reps)
        z = rng.standard_normal((stop - start, flat.shape[1]))
        sups[start:stop] = (z @ flat.T).max(axis=1)
    return WidthEstimate(float(sups.mean()), float(sups.std(ddof=1) / math.sqrt(mc_reps)), mc_reps)


def corollary_bound(sigma: float, sup_frob: float, width: float, n: int, t: float = 1.0, c3: float = 1.0) -> float:
    """``c3 t (sigma^2 sup_frob width / sqrt(n) + sigma^2 width^2 / n)``."""
    if min(sigma, sup_frob, width, t, c3) < 0 or n < 1:
        raise ValueError("corollary_bound needs nonnegative inputs and n >= 1")
    s2 = sigma * sigma
    return c3 * t * (s2 * sup_frob * width / math.sqrt(n) + s2 * width * width / n)


def frobenius_metric(cls: MatrixClass, sigma: float):
    """``sigma ||A_i - A_j||_F`` as a metric space over the class."""
    flat = cls.matrices.reshape(len(cls), -1)
    diff = flat[:, None, :] - flat[None, :, :]
    dist = sigma * np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return validate_metric([f"A{i}" for i in range(len(cls))], dist)


@dataclass(frozen=True, eq=False)
class CovarianceConfig:
    seed: int
    n_grid: tuple
    replications: int
    distribution: Ensemble
    matrix_class: MatrixClass
    quantiles: tuple = DEFAULT_LEVELS
    width_reps: int = 10_000
    metric_samples: int = 20_000
    chaining_method: str = "auto"
    payload: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.replications < MIN_REPLICATIONS:
            raise InsufficientReplications(
                f"need at least {MIN_REPLICATIONS} replications, got {self.replications}"
            )
        if not self.matrix_class.symmetric:
            raise NotSymmetricClass("the covariance experiment requires a symmetric class (set symmetrize)")
        if self.distribution.p != self.matrix_class.p:
            raise ConfigInvalid("distribution and class dimensions differ", ("distribution",))
        if not self.n_grid or min(self.n_grid) < 1:
            raise ConfigInvalid("n_grid must hold positive sample sizes", ("n_grid",))
        if any(not 0 < q < 1 for q in self.quantiles):
            raise ConfigInvalid("quantile levels must lie in (0, 1)", ("quantiles",))
        if self.width_reps < 100:
            raise ConfigInvalid("width_reps must be at least 100", ("width_reps",))
        if self.chaining_method not in ("exact", "greedy", "auto"):
            raise ConfigInvalid(f"unknown chaining method {self.chaining_method!r}", ("chaining_method",))


DESK_P = 8
DESK_K = 2
DESK_BASE = 8  # 16 matrices after symmetrisation
DESK_N_GRID = (128, 512, 2048, 8192)
DESK_REPLICATIONS = 200
DESK_SEED = 20250101


def desk_matrix_class(seed: int = DESK_SEED, p: int = DESK_P, k: int = DESK_K, base: int = DESK_BASE) -> MatrixClass:
    """``base`` Gaussian ``p x k`` matrices scaled to unit Frobenius norm, symmetrised."""
    rng = rng_for(seed, CLASS_STREAM)
    mats = rng.standard_normal((base, p, k))
    mats /= np.sqrt(np.einsum("mpk,mpk->m", mats, mats))[:, None, None]
    return MatrixClass(p, k, mats).symmetrize()


def desk_payload(seed: int = DESK_SEED) -> dict:
    """The default covariance experiment as a JSON-ready config."""
    return {
        "seed": seed,
        "n_grid": list(DESK_N_GRID),
        "replications": DESK_REPLICATIONS,
        "quantiles": list(DEFAULT_LEVELS),
        "distribution": {"kind": "gaussian", "cholesky_factor": np.eye(DESK_P).tolist()},
        "class": desk_matrix_class(seed).to_dict(),
        "width_reps": 10_000,
        "chaining_method": "auto",
    }


def _sigma_for(cfg: CovarianceConfig) -> float:
    if cfg.distribution.is_gaussian:
        return gaussian_sigma(cfg.distribution.covariance())
    z = cfg.distribution.sample(rng_for(cfg.seed, METRIC_STREAM), cfg.metric_samples)
    return vector_subgaussian_norm(z)


def corollary_experiment(cfg: CovarianceConfig, threads: int = 1) -> TailReport:
    """Quantiles of ``sup_A |<S_n - Sigma, A A^T>|`` against the corollary's bound shape."""
    cls = cfg.matrix_class
    levels = list(cfg.quantiles)
    sigma_cov = cfg.distribution.covariance()
    outer = cls.outer_products()

    sigma = _sigma_for(cfg)
    width = gaussian_mean_width(cls, cfg.width_reps, derive_stream(cfg.seed, WIDTH_STREAM))
    sup_frob = float(cls.frobenius_norms().max())
    if len(cls) > 1:
        g2 = chaining.gamma(frobenius_metric(cls, sigma), alpha=2.0, method=cfg.chaining_method)
        gamma2, method = g2.value, g2.method
    else:
        gamma2, method = 0.0, "exact"
    scale = sigma * width.mean_width
    consistency = gamma2 / scale if scale > 0 else (0.0 if gamma2 == 0 else math.inf)

    quantiles = np.zeros((len(cfg.n_grid), len(levels)))
    medians = np.zeros(len(cfg.n_grid))
    for a, n in enumerate(cfg.n_grid):
        def one(r, rng, n=n):
            s_n = sample_covariance(cfg.distribution.sample(rng, n))
            return float(np.abs(np.einsum("ij,mij->m", s_n - sigma_cov, outer)).max())

        sups = np.array(replicate(one, derive_stream(cfg.seed, a), cfg.replications, threads))
        quantiles[a] = np.quantile(sups, levels)
        medians[a] = np.median(sups)

    w = max(width.mean_width, 0.0)
    skeleton = np.array([corollary_bound(sigma, sup_frob, w, n) for n in cfg.n_grid])
    ratio, c3 = fit_cells(cfg.n_grid, levels, quantiles, skeleton)
    slope, stderr = _try_rate(cfg.n_grid, medians)
    return TailReport(
        seed=cfg.seed,
        config_digest=config_digest(cfg.payload),
        n_grid=list(cfg.n_grid),
        levels=levels,
        quantiles=quantiles,
        medians=medians,
        bound_skeleton=skeleton,
        ratio=ratio,
        c3_fit=c3,
        d_psi1_hat=sigma * sup_frob,
        gamma2_hat=gamma2,
        method=method,
        oracle_source="analytic",
        rate_slope=slope,
        rate_stderr=stderr,
        extra={
            "width": width.mean_width,
            "width_se": width.std_error,
            "sigma": sigma,
            "sup_frob": sup_frob,
            "gamma2_over_sigma_width": consistency,
        },
    )
