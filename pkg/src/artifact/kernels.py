"""Stationary product-rule correlation functions and correlation-matrix assembly.

Every family is written through its per-dimension log factor so the product
over dimensions becomes a sum, which keeps long-range entries from underflowing
before the exponent is taken.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack

from .errors import NonPositiveScale, NotPositiveDefinite

FAMILIES = ("powexp", "matern32", "matern52", "pls_matern32")
NUGGET_SCHEDULE = (1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4)

_SQRT3 = math.sqrt(3.0)
_SQRT5 = math.sqrt(5.0)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus its fixed shape information.

    ``nu`` only matters for the power-exponential family. ``weights`` is the
    h x n matrix of rotated PLS directions used by ``pls_matern32``.
    """

    family: str = "matern32"
    nu: float = 2.0
    weights: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family == "powexp" and not (0.0 < self.nu <= 2.0):
            raise ValueError("power exponential requires 0 < nu <= 2")
        if self.family == "pls_matern32":
            if self.weights is None:
                raise ValueError("pls_matern32 needs a weight matrix")
            W = np.atleast_2d(np.asarray(self.weights, dtype=float))
            if W.shape[0] < 1:
                raise ValueError("need h >= 1 weight vectors")
            object.__setattr__(self, "weights", W)

    @property
    def h(self) -> int | None:
        return None if self.weights is None else int(self.weights.shape[0])

    def n_theta(self, n: int) -> int:
        return self.h if self.family == "pls_matern32" else n

    def to_dict(self) -> dict:
        d = {"family": self.family, "nu": self.nu}
        if self.weights is not None:
            d["weights"] = self.weights.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        w = d.get("weights")
        return cls(d["family"], float(d.get("nu", 2.0)), None if w is None else np.asarray(w, float))


@dataclass(frozen=True)
class Hyperparameters:
    theta: np.ndarray
    sigma2: float = 1.0
    nugget: float = 0.0

    def __post_init__(self):
        th = np.atleast_1d(np.asarray(self.theta, dtype=float))
        if np.any(~(th > 0)):
            raise NonPositiveScale("theta entries must be strictly positive")
        if self.nugget < 0 or self.sigma2 < 0:
            raise ValueError("nugget and sigma2 must be nonnegative")
        object.__setattr__(self, "theta", th)


def _check_theta(theta) -> np.ndarray:
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    if np.any(~(th > 0)):
        raise NonPositiveScale("theta entries must be strictly positive")
    return th


def expand_diffs(spec: KernelSpec, diffs: np.ndarray) -> np.ndarray:
    """Absolute per-dimension distances in the layout the family consumes.

    For the PLS family the last axis becomes h*n weighted distances
    ``|w*_i^(l) d_i|`` ordered component-major.
    """
    d = np.abs(diffs)
    if spec.family != "pls_matern32":
        return d
    W = spec.weights
    out = np.abs(d[..., None, :] * W)  # (..., h, n)
    return out.reshape(d.shape[:-1] + (W.size,))


def expand_theta(spec: KernelSpec, theta: np.ndarray, n: int) -> np.ndarray:
    if spec.family != "pls_matern32":
        return theta
    return np.repeat(theta, n)


def log_factor(spec: KernelSpec, a: np.ndarray) -> np.ndarray:
    """Per-dimension log correlation for scaled distances ``a = |d| / theta``."""
    if spec.family == "powexp":
        return -(a ** spec.nu)
    if spec.family == "matern52":
        s = _SQRT5 * a
        return np.log1p(s + s * s / 3.0) - s
    s = _SQRT3 * a
    return np.log1p(s) - s


def corr_from_expanded(spec: KernelSpec, theta_x: np.ndarray, dx: np.ndarray) -> np.ndarray:
    """Correlations from pre-expanded distances (last axis) and expanded theta."""
    return np.exp(np.sum(log_factor(spec, dx / theta_x), axis=-1))


def correlation(spec: KernelSpec, theta, x, xp) -> float:
    th = _check_theta(theta)
    x = np.atleast_1d(np.asarray(x, float))
    xp = np.atleast_1d(np.asarray(xp, float))
    dx = expand_diffs(spec, x - xp)
    return float(corr_from_expanded(spec, expand_theta(spec, th, x.size), dx))


def pls_correlation(weights, theta, x, xp) -> float:
    """Weighted Matern 3/2 kernel with one scale per PLS component."""
    return correlation(KernelSpec("pls_matern32", weights=np.asarray(weights, float)), theta, x, xp)


class PairCache:
    """Upper-triangle pair distances of a point set, expanded for one kernel.

    Building R for many theta values (an MLE run) only rescales these.
    """

    def __init__(self, spec: KernelSpec, X: np.ndarray):
        X = np.atleast_2d(np.asarray(X, float))
        self.spec = spec
        self.m, self.n = X.shape
        self.iu = np.triu_indices(self.m, 1)
        self.dx = expand_diffs(spec, X[self.iu[0]] - X[self.iu[1]])

    def matrix(self, theta: np.ndarray, nugget: float = 0.0) -> np.ndarray:
        th = expand_theta(self.spec, _check_theta(theta), self.n)
        vals = corr_from_expanded(self.spec, th, self.dx)
        R = np.empty((self.m, self.m))
        R[self.iu] = vals
        R.T[self.iu] = vals
        np.fill_diagonal(R, 1.0 + nugget)
        return R


def correlation_matrix(spec: KernelSpec, theta, X, nugget: float = 0.0) -> np.ndarray:
    return PairCache(spec, X).matrix(theta, nugget)


def cross_correlation(spec: KernelSpec, theta, X, x0) -> np.ndarray:
    """Correlations between training rows of X and one or many query points.

    A single point returns a length-m vector, a k x n block returns k x m.
    """
    th = _check_theta(theta)
    X = np.atleast_2d(np.asarray(X, float))
    x0 = np.asarray(x0, float)
    single = x0.ndim == 1
    Q = x0.reshape(-1, X.shape[1])
    dx = expand_diffs(spec, Q[:, None, :] - X[None, :, :])
    r = corr_from_expanded(spec, expand_theta(spec, th, X.shape[1]), dx)
    return r[0] if single else r


def cholesky_nugget(R: np.ndarray, nugget: float = 0.0) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of ``R + extra*I`` with the escalation schedule.

    ``R`` is expected to already carry ``nugget`` on its diagonal. The first
    attempt uses it as is; later attempts raise the total nugget through
    1e-10 ... 1e-4. Returns the factor and the nugget that worked.
    """
    L, info = lapack.dpotrf(R, lower=1, clean=1, overwrite_a=0)
    if info == 0:
        return L, nugget
    for nug in NUGGET_SCHEDULE:
        if nug <= nugget:
            continue
        Rn = R + (nug - nugget) * np.eye(R.shape[0])
        L, info = lapack.dpotrf(Rn, lower=1, clean=1, overwrite_a=0)
        if info == 0:
            return L, nug
    raise NotPositiveDefinite(f"Cholesky failed with nugget up to {NUGGET_SCHEDULE[-1]:g}")
