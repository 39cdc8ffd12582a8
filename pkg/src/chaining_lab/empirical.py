"""Finite function classes into normed spaces and their quadratic empirical process.

The process of interest is ``sup_g | n^-1 sum_i ||g(X_i)||^2 - E ||g(X_1)||^2 |``.
Rademacher signs turn each ``g`` into ``f(x, eps) = eps ||g(x)||``, a mean-zero
scalar function whose square is ``||g(x)||^2``.
"""
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from . import chaining
from .ensembles import Ensemble
from .errors import (
    ConfigInvalid,
    DegenerateGrid,
    DimensionMismatch,
    InsufficientReplications,
    NotSymmetricClass,
    OracleMissing,
)
from .orlicz import class_metric, psi_alpha_empirical
from .seeding import HELDOUT_STREAM, METRIC_STREAM, derive_stream, replicate, rng_for

PROBE_SEED = 20240917
PROBE_SIZE = 64
MIN_REPLICATIONS = 50
DEFAULT_LEVELS = (0.5, 0.9, 0.95, 0.99)


def _vector_norm(values: np.ndarray, kind: str, q: float) -> np.ndarray:
    if kind == "euclidean":
        return np.sqrt(np.einsum("...k,...k->...", values, values))
    if kind == "max":
        return np.abs(values).max(axis=-1)
    if kind == "p_norm":
        return np.linalg.norm(values, ord=q, axis=-1)
    raise ValueError(f"unknown norm kind {kind!r}")


@dataclass(frozen=True, eq=False)
class FunctionClass:
    """A finite family ``g_1, ..., g_m : R^p -> R^k`` and a norm on R^k.

    Linear classes (``g(x) = A^T x``) keep their matrices, which enables exact
    symmetry checks and the analytic mean oracle. ``members`` are callables
    mapping an ``n x p`` batch to ``n x k``.
    """

    members: tuple
    p: int
    k: int
    norm_kind: str = "euclidean"
    norm_q: float = 2.0
    symmetric: bool = False
    matrices: np.ndarray | None = None
    labels: tuple = ()

    def __post_init__(self):
        if not self.members:
            raise ValueError("function class is empty")
        if self.norm_kind not in ("euclidean", "max", "p_norm"):
            raise ValueError(f"unknown norm kind {self.norm_kind!r}")
        if self.norm_kind == "p_norm" and self.norm_q < 1:
            raise ValueError("p_norm needs q >= 1")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"g{i}" for i in range(len(self.members))))
        if self.symmetric and not _closed_under_negation(self):
            raise NotSymmetricClass("class is flagged symmetric but -g is missing for some g")

    def __len__(self):
        return len(self.members)

    @classmethod
    def linear(cls, matrices, norm_kind: str = "euclidean", norm_q: float = 2.0,
               symmetric: bool | None = None, labels: Sequence[str] = ()) -> "FunctionClass":
        mats = np.asarray(matrices, dtype=np.float64)
        if mats.ndim == 2:
            mats = mats[:, :, None]
        if mats.ndim != 3 or mats.shape[0] == 0:
            raise DimensionMismatch(f"expected an m x p x k stack of matrices, got shape {mats.shape}")
        mats = mats.copy()
        mats.setflags(write=False)
        members = tuple(_LinearMap(a) for a in mats)
        obj = cls(members, mats.shape[1], mats.shape[2], norm_kind, norm_q, False, mats, tuple(labels))
        if symmetric is None:
            symmetric = _closed_under_negation(obj)
        if symmetric:
            obj = cls(members, obj.p, obj.k, norm_kind, norm_q, True, mats, obj.labels)
        return obj

    @property
    def is_linear(self) -> bool:
        return self.matrices is not None

    def evaluate(self, x) -> np.ndarray:
        """``(m, n, k)`` array of ``g_j(x_i)``."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.p:
            raise DimensionMismatch(f"class expects p = {self.p}, samples have {x.shape[1]} columns")
        if self.is_linear:
            return np.einsum("np,mpk->mnk", x, self.matrices)
        return np.stack([np.asarray(g(x), dtype=np.float64).reshape(x.shape[0], self.k) for g in self.members])

    def vector_norm(self, values) -> np.ndarray:
        return _vector_norm(np.asarray(values, dtype=np.float64), self.norm_kind, self.norm_q)

    def norms(self, x) -> np.ndarray:
        """``(m, n)`` array of ``||g_j(x_i)||``."""
        return self.vector_norm(self.evaluate(x))

    def squared_norms(self, x) -> np.ndarray:
        values = self.evaluate(x)
        if self.norm_kind == "euclidean":
            return np.einsum("mnk,mnk->mn", values, values)
        return self.vector_norm(values) ** 2


class _LinearMap:
    __slots__ = ("matrix",)

    def __init__(self, matrix):
        self.matrix = matrix

    def __call__(self, x):
        return np.asarray(x) @ self.matrix


class _Negated:
    __slots__ = ("fn",)

    def __init__(self, fn: Callable):
        self.fn = fn

    def __call__(self, x):
        return -np.asarray(self.fn(x))


def _probe(p: int) -> np.ndarray:
    return np.random.default_rng(PROBE_SEED).standard_normal((PROBE_SIZE, p))


def _signatures(G: FunctionClass) -> list:
    if G.is_linear:
        return [a for a in G.matrices]
    probe = _probe(G.p)
    return [np.asarray(g(probe), dtype=np.float64) for g in G.members]


def _closed_under_negation(G: FunctionClass) -> bool:
    sigs = _signatures(G)
    return all(any(np.array_equal(-a, b) for b in sigs) for a in sigs)


def symmetrize_class(G: FunctionClass) -> FunctionClass:
    """``G u -G`` with duplicates removed (exactly for linear classes, on a probe sample otherwise)."""
    sigs = _signatures(G)
    keep_sigs, keep_members, keep_labels = [], [], []

    def add(sig, member, label):
        if not any(np.array_equal(sig, s) for s in keep_sigs):
            keep_sigs.append(sig)
            keep_members.append(member)
            keep_labels.append(label)

    for sig, g, lab in zip(sigs, G.members, G.labels):
        add(sig, g, lab)
    for sig, g, lab in zip(sigs, G.members, G.labels):
        neg_label = lab[1:] if lab.startswith("-") else "-" + lab
        add(-sig, _LinearMap(-g.matrix) if G.is_linear else _Negated(g), neg_label)
    if G.is_linear:
        return FunctionClass.linear(np.stack(keep_sigs), G.norm_kind, G.norm_q, True, keep_labels)
    return FunctionClass(tuple(keep_members), G.p, G.k, G.norm_kind, G.norm_q, True, None, tuple(keep_labels))


@dataclass(frozen=True, eq=False)
class SignedEnvelopeClass:
    """``F0 = F u -F`` with ``f(x, eps) = eps ||g(x)||`` for ``g`` in ``base``.

    Row ``j`` of :meth:`evaluate` is ``f_j`` for ``j < m`` and ``-f_{j-m}`` after.
    """

    base: FunctionClass

    def __len__(self):
        return 2 * len(self.base)

    def evaluate(self, x, eps) -> np.ndarray:
        eps = np.asarray(eps, dtype=np.float64)
        f = eps[None, :] * self.base.norms(x)
        return np.concatenate([f, -f], axis=0)


@dataclass(frozen=True)
class MeanOracle:
    """``E ||g_j(X_1)||^2`` per member and where it came from."""

    values: np.ndarray
    source: str

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))


def analytic_mean_oracle(G: FunctionClass, covariance) -> MeanOracle:
    """Exact ``E ||A^T X||_2^2 = <Sigma, A A^T>`` for linear classes with the Euclidean norm."""
    if not G.is_linear or G.norm_kind != "euclidean":
        raise OracleMissing("the analytic oracle needs a linear class with the Euclidean norm")
    sigma = np.asarray(covariance, dtype=np.float64)
    return MeanOracle(np.einsum("mpk,pq,mqk->m", G.matrices, sigma, G.matrices), "analytic")


def heldout_mean_oracle(G: FunctionClass, x_heldout, chunk: int = 65536) -> MeanOracle:
    """Monte Carlo ``E ||g(X)||^2`` from a held-out batch."""
    x = np.atleast_2d(np.asarray(x_heldout, dtype=np.float64))
    total = np.zeros(len(G))
    for start in range(0, x.shape[0], chunk):
        total += G.squared_norms(x[start:start + chunk]).sum(axis=1)
    return MeanOracle(total / x.shape[0], "heldout")


@dataclass(frozen=True)
class DeviationSample:
    n: int
    sup_dev: float
    argmax_g: int
    replication_id: int | None = None
    seed: int | None = None


def _oracle_values(G, mean_oracle) -> np.ndarray:
    if mean_oracle is None:
        raise OracleMissing("sup_deviation needs E||g(X)||^2 for every member")
    values = mean_oracle.values if isinstance(mean_oracle, MeanOracle) else np.asarray(mean_oracle, dtype=np.float64)
    if values.shape != (len(G),):
        raise OracleMissing(f"oracle has {values.size} entries for a class of size {len(G)}")
    return values


def deviations(G: FunctionClass, x_batch, mean_oracle) -> np.ndarray:
    """Per-member ``|n^-1 sum_i ||g(X_i)||^2 - E ||g(X_1)||^2|``."""
    means = _oracle_values(G, mean_oracle)
    return np.abs(G.squared_norms(x_batch).mean(axis=1) - means)


def sup_deviation(G: FunctionClass, x_batch, mean_oracle, replication_id=None, seed=None) -> DeviationSample:
    """Exact maximum over the finite class; ties go to the lowest index."""
    dev = deviations(G, x_batch, mean_oracle)
    j = int(np.argmax(dev))
    return DeviationSample(int(np.atleast_2d(x_batch).shape[0]), float(dev[j]), j, replication_id, seed)


def symmetrization_identity_check(G: FunctionClass, x_batch, rademacher_batch, mean_oracle=None) -> float:
    """Largest gap between the quadratic process of ``G`` and that of the signed class.

    Without an oracle, the empirical means of ``||g(X_i)||^2`` over the batch
    serve as the centring constants on both sides.
    """
    x = np.atleast_2d(np.asarray(x_batch, dtype=np.float64))
    squares = G.squared_norms(x)
    means = squares.mean(axis=1) if mean_oracle is None else _oracle_values(G, mean_oracle)
    lhs = np.abs(squares.mean(axis=1) - means)

    f0 = SignedEnvelopeClass(G).evaluate(x, rademacher_batch)
    means_f0 = np.concatenate([means, means])
    rhs = np.abs((f0 * f0).mean(axis=1) - means_f0)
    per_member = np.abs(np.concatenate([lhs, lhs]) - rhs).max()
    return float(max(per_member, abs(lhs.max() - rhs.max())))


# ---------------------------------------------------------------------------
# tail experiments
# ---------------------------------------------------------------------------


def nominal_t(level: float) -> float:
    """``t`` solving ``1 - 2 exp(-t^(2/5)) = level`` (all constants set to 1)."""
    return (-math.log((1.0 - level) / 2.0)) ** 2.5


def config_digest(payload: dict) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


@dataclass
class TailReport:
    """Quantiles of the supremum deviation over an ``n`` grid, with bound ingredients.

    ``bound_skeleton[a] = d_psi1_hat * gamma2_hat / sqrt(n) + gamma2_hat**2 / n``
    (or the covariance form); ``ratio = quantile / bound_skeleton`` and
    ``c3_fit = ratio / nominal_t(level)``, the smallest constant making the
    bound hold in that cell.
    """

    seed: int
    config_digest: str
    n_grid: list
    levels: list
    quantiles: np.ndarray
    medians: np.ndarray
    bound_skeleton: np.ndarray
    ratio: np.ndarray
    c3_fit: np.ndarray
    d_psi1_hat: float
    gamma2_hat: float
    method: str
    oracle_source: str
    rate_slope: float | None = None
    rate_stderr: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def t_levels(self) -> list:
        return [nominal_t(level) for level in self.levels]

    def c3_max(self, level: float) -> float:
        return float(self.c3_fit[:, self.levels.index(level)].max())

    def c3_spread(self, level: float) -> float:
        """``max / min`` of ``c3_fit`` across the ``n`` grid at one level."""
        col = self.c3_fit[:, self.levels.index(level)]
        return float(col.max() / col.min()) if col.min() > 0 else math.inf

    columns = ("n", "level", "quantile", "bound_skeleton", "ratio", "c3_fit",
               "gamma2_hat", "d_psi1_hat", "method", "seed")

    def rows(self) -> list:
        out = []
        for a, n in enumerate(self.n_grid):
            for b, level in enumerate(self.levels):
                row = {
                    "n": n,
                    "level": level,
                    "quantile": float(self.quantiles[a, b]),
                    "bound_skeleton": float(self.bound_skeleton[a]),
                    "ratio": float(self.ratio[a, b]),
                    "c3_fit": float(self.c3_fit[a, b]),
                    "gamma2_hat": self.gamma2_hat,
                    "d_psi1_hat": self.d_psi1_hat,
                    "method": self.method,
                    "seed": self.seed,
                }
                row.update(self.extra)
                out.append(row)
        return out

    def column_names(self) -> list:
        return list(self.columns) + list(self.extra)


def fit_cells(n_grid, levels, quantiles, skeleton):
    """Ratios and fitted constants for each ``(n, level)`` cell."""
    skeleton = np.asarray(skeleton, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(skeleton[:, None] > 0, quantiles / skeleton[:, None],
                         np.where(quantiles > 0, np.inf, 0.0))
    t = np.array([nominal_t(level) for level in levels])
    return ratio, ratio / t[None, :]


def rate_regression(report_or_grid, medians=None) -> tuple:
    """OLS slope (and its standard error) of ``log median`` against ``log n``."""
    if medians is None:
        n_grid, medians = report_or_grid.n_grid, report_or_grid.medians
    else:
        n_grid = report_or_grid
    n = np.asarray(n_grid, dtype=np.float64)
    med = np.asarray(medians, dtype=np.float64)
    if n.size != med.size:
        raise DegenerateGrid("grid and medians differ in length")
    if np.unique(n).size < 4:
        raise DegenerateGrid("need at least 4 distinct sample sizes")
    if np.any(med <= 0) or np.any(n <= 0):
        raise DegenerateGrid("medians and sample sizes must be positive")
    fit = stats.linregress(np.log(n), np.log(med))
    return float(fit.slope), float(fit.stderr)


def _try_rate(n_grid, medians):
    try:
        return rate_regression(n_grid, medians)
    except DegenerateGrid:
        return None, None


@dataclass(frozen=True, eq=False)
class TailConfig:
    seed: int
    n_grid: tuple
    replications: int
    distribution: Ensemble
    function_class: FunctionClass
    quantiles: tuple = DEFAULT_LEVELS
    metric_samples: int = 20000
    chaining_method: str = "auto"
    payload: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.replications < MIN_REPLICATIONS:
            raise InsufficientReplications(
                f"need at least {MIN_REPLICATIONS} replications, got {self.replications}"
            )
        if not self.n_grid or min(self.n_grid) < 1:
            raise ConfigInvalid("n_grid must hold positive sample sizes", ("n_grid",))
        if any(not 0 < q < 1 for q in self.quantiles):
            raise ConfigInvalid("quantile levels must lie in (0, 1)", ("quantiles",))
        if self.distribution.p != self.function_class.p:
            raise ConfigInvalid("distribution and class dimensions differ", ("distribution",))
        if self.chaining_method not in ("exact", "greedy", "auto"):
            raise ConfigInvalid(f"unknown chaining method {self.chaining_method!r}", ("chaining_method",))


def class_complexity(G: FunctionClass, x_metric, method: str):
    """``(d_psi1_hat, gamma2_hat, method_used)`` from one shared sample of X."""
    norms = G.norms(x_metric)
    d_hat = max(psi_alpha_empirical(row, alpha=1.0).norm_value for row in norms)
    if len(G) == 1:
        return d_hat, 0.0, "exact"
    space = class_metric(G, x_metric)
    result = chaining.gamma(space, alpha=2.0, method=method)
    return d_hat, result.value, result.method


def _mean_oracle_for(cfg: TailConfig) -> MeanOracle:
    G = cfg.function_class
    if G.is_linear and G.norm_kind == "euclidean":
        return analytic_mean_oracle(G, cfg.distribution.covariance())
    rng = rng_for(cfg.seed, HELDOUT_STREAM)
    size = 100 * max(cfg.n_grid)
    total = np.zeros(len(G))
    done = 0
    while done < size:
        step = min(65536, size - done)
        total += G.squared_norms(cfg.distribution.sample(rng, step)).sum(axis=1)
        done += step
    return MeanOracle(total / size, "heldout")


def tail_experiment(cfg: TailConfig, threads: int = 1) -> TailReport:
    """Monte Carlo quantiles of the supremum deviation for each ``n`` in the grid."""
    G = cfg.function_class
    levels = list(cfg.quantiles)
    x_metric = cfg.distribution.sample(rng_for(cfg.seed, METRIC_STREAM), cfg.metric_samples)
    d_hat, gamma2, method = class_complexity(G, x_metric, cfg.chaining_method)
    oracle = _mean_oracle_for(cfg)

    quantiles = np.zeros((len(cfg.n_grid), len(levels)))
    medians = np.zeros(len(cfg.n_grid))
    for a, n in enumerate(cfg.n_grid):
        cell_seed = derive_stream(cfg.seed, a)

        def one(r, rng, n=n):
            return sup_deviation(G, cfg.distribution.sample(rng, n), oracle).sup_dev

        sups = np.array(replicate(one, cell_seed, cfg.replications, threads))
        quantiles[a] = np.quantile(sups, levels)
        medians[a] = np.median(sups)

    n_arr = np.asarray(cfg.n_grid, dtype=np.float64)
    skeleton = d_hat * gamma2 / np.sqrt(n_arr) + gamma2 ** 2 / n_arr
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
        d_psi1_hat=d_hat,
        gamma2_hat=gamma2,
        method=method,
        oracle_source=oracle.source,
        rate_slope=slope,
        rate_stderr=stderr,
    )
