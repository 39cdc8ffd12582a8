"""Sub-Gaussian random vector ensembles with known second moments."""
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigInvalid
from .orlicz import GAUSSIAN_PSI2


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Mean-zero distribution on R^p.

    ``gaussian``: ``X = L Z`` with ``Z`` standard normal, so ``Sigma = L L^T``.
    ``rademacher``: i.i.d. ``+-scale`` coordinates. ``sphere``: uniform on the
    sphere of radius ``radius``.
    """

    kind: str
    p: int
    cholesky_factor: np.ndarray | None = None
    scale: float = 1.0
    radius: float = 1.0

    @classmethod
    def gaussian(cls, cholesky_factor) -> "Ensemble":
        factor = np.atleast_2d(np.asarray(cholesky_factor, dtype=np.float64))
        if factor.shape[0] != factor.shape[1]:
            raise ConfigInvalid("cholesky factor must be square", ("cholesky_factor",))
        return cls("gaussian", factor.shape[0], cholesky_factor=factor)

    @classmethod
    def standard_gaussian(cls, p: int) -> "Ensemble":
        return cls.gaussian(np.eye(p))

    @classmethod
    def from_dict(cls, spec: dict, p: int | None = None) -> "Ensemble":
        kind = spec.get("kind")
        if kind == "gaussian":
            ens = cls.gaussian(spec["cholesky_factor"])
        elif kind == "rademacher":
            dim = spec.get("p", p)
            if dim is None:
                raise ConfigInvalid("rademacher ensemble needs a dimension", ("p",))
            ens = cls("rademacher", int(dim), scale=float(spec.get("scale", 1.0)))
        elif kind == "sphere":
            dim = spec.get("p", p)
            if dim is None:
                raise ConfigInvalid("sphere ensemble needs a dimension", ("p",))
            ens = cls("sphere", int(dim), radius=float(spec.get("radius", 1.0)))
        else:
            raise ConfigInvalid(f"unknown distribution kind {kind!r}", ("kind",))
        if p is not None and ens.p != p:
            raise ConfigInvalid(f"distribution dimension {ens.p} does not match class dimension {p}", ("p",))
        return ens

    def to_dict(self) -> dict:
        if self.kind == "gaussian":
            return {"kind": "gaussian", "cholesky_factor": self.cholesky_factor.tolist()}
        if self.kind == "rademacher":
            return {"kind": "rademacher", "p": self.p, "scale": self.scale}
        return {"kind": "sphere", "p": self.p, "radius": self.radius}

    @property
    def is_gaussian(self) -> bool:
        return self.kind == "gaussian"

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """``n x p`` array of i.i.d. draws."""
        if self.kind == "gaussian":
            return rng.standard_normal((n, self.p)) @ self.cholesky_factor.T
        if self.kind == "rademacher":
            return self.scale * (2.0 * rng.integers(0, 2, size=(n, self.p)) - 1.0)
        z = rng.standard_normal((n, self.p))
        return self.radius * z / np.linalg.norm(z, axis=1, keepdims=True)

    def covariance(self) -> np.ndarray:
        if self.kind == "gaussian":
            return self.cholesky_factor @ self.cholesky_factor.T
        if self.kind == "rademacher":
            return self.scale ** 2 * np.eye(self.p)
        return self.radius ** 2 / self.p * np.eye(self.p)


def top_eigenvalue(matrix, rtol: float = 1e-12, max_iter: int = 100_000) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration.

    Starts from the normalised all-ones vector and stops when the Rayleigh
    quotient changes by less than ``rtol`` relative.
    """
    a = np.asarray(matrix, dtype=np.float64)
    v = np.ones(a.shape[0]) / math.sqrt(a.shape[0])
    value = float(v @ a @ v)
    for _ in range(max_iter):
        w = a @ v
        length = np.linalg.norm(w)
        if length == 0.0:
            return 0.0
        v = w / length
        nxt = float(v @ a @ v)
        if abs(nxt - value) <= rtol * abs(nxt):
            return nxt
        value = nxt
    return value


def gaussian_sigma(covariance) -> float:
    """``sup_u ||<X, u>||_{psi_2}`` for ``X ~ N(0, covariance)``."""
    return GAUSSIAN_PSI2 * math.sqrt(top_eigenvalue(covariance))
