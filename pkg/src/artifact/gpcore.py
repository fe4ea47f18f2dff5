"""Ordinary and Universal Kriging.

A :class:`FittedModel` is the factorized Kriging system for one dataset and one
set of hyperparameters. Ordinary Kriging is the special case of a constant
trend. The hierarchical multi-fidelity model reuses the same class with the
low-fidelity predictor as its single trend column.

Hyperparameters are estimated by minimizing the reduced likelihood
``psi(theta) = sigma2_hat(theta) * det(R(theta))**(1/m)`` in log10 coordinates
with a seeded particle swarm followed by a coordinate-descent polish.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import lapack, solve_triangular
from scipy.stats import norm

from .designspace import Dataset, Domain
from .errors import NotPositiveDefinite, SingularBlock
from .kernels import (
    Hyperparameters,
    KernelSpec,
    PairCache,
    cholesky_nugget,
    cross_correlation,
)

# ------------------------------------------------------------------ optimizer


@dataclass(frozen=True)
class OptimizerConfig:
    """Budget and coefficients of the shared swarm optimizer.

    Particle and iteration counts scale with the dimension of the search space.
    """

    particles_per_dim: int = 30
    iters_per_dim: int = 100
    inertia: float = 0.72
    cognitive: float = 1.49
    social: float = 1.49
    polish_sweeps: int = 50
    seed: int = 0
    theta_lower: float = 1e-3
    theta_upper: float = 20.0
    max_particles: int | None = None
    max_iters: int | None = None

    def budget(self, d: int) -> tuple[int, int]:
        p = self.particles_per_dim * d
        it = self.iters_per_dim * d
        if self.max_particles is not None:
            p = min(p, self.max_particles)
        if self.max_iters is not None:
            it = min(it, self.max_iters)
        return max(p, 2), max(it, 1)

    def with_seed(self, seed: int) -> "OptimizerConfig":
        return replace(self, seed=int(seed))

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class OptResult:
    x: np.ndarray
    fun: float
    nfev: int
    nit: int


def pso_minimize(
    fun: Callable[[np.ndarray], np.ndarray],
    lower,
    upper,
    config: OptimizerConfig = OptimizerConfig(),
    x0: np.ndarray | None = None,
) -> OptResult:
    """Minimize a batched objective over a box.

    ``fun`` maps a (P, d) array of candidates to P objective values. NaN is
    treated as +inf. The best point seen is always returned.
    """
    lo = np.atleast_1d(np.asarray(lower, float))
    hi = np.atleast_1d(np.asarray(upper, float))
    d = lo.size
    span = hi - lo
    P, iters = config.budget(d)
    rng = np.random.default_rng(np.uint64(config.seed & 0xFFFFFFFFFFFFFFFF))

    def evaluate(Z):
        v = np.asarray(fun(Z), dtype=float).reshape(-1)
        v[np.isnan(v)] = np.inf
        return v

    pos = lo + rng.random((P, d)) * span
    if x0 is not None:
        seeds = np.clip(np.atleast_2d(np.asarray(x0, float)), lo, hi)[:P]
        pos[: seeds.shape[0]] = seeds
    vel = (rng.random((P, d)) - 0.5) * 0.2 * span
    vmax = 0.5 * span
    f = evaluate(pos)
    nfev = P
    pbest, pbest_f = pos.copy(), f.copy()
    g = int(np.argmin(pbest_f))
    gbest, gbest_f = pbest[g].copy(), pbest_f[g]

    for _ in range(iters):
        r1 = rng.random((P, d))
        r2 = rng.random((P, d))
        vel = (config.inertia * vel + config.cognitive * r1 * (pbest - pos)
               + config.social * r2 * (gbest - pos))
        np.clip(vel, -vmax, vmax, out=vel)
        pos = pos + vel
        out = (pos < lo) | (pos > hi)
        pos = np.clip(pos, lo, hi)
        vel[out] = 0.0
        f = evaluate(pos)
        nfev += P
        better = f < pbest_f
        pbest[better] = pos[better]
        pbest_f[better] = f[better]
        g = int(np.argmin(pbest_f))
        if pbest_f[g] < gbest_f:
            gbest, gbest_f = pbest[g].copy(), pbest_f[g]

    x, fx = gbest.copy(), float(gbest_f)
    step = 0.05 * span
    for _ in range(config.polish_sweeps):
        improved = False
        for j in range(d):
            cand = np.repeat(x[None, :], 2, axis=0)
            cand[0, j] = min(hi[j], x[j] + step[j])
            cand[1, j] = max(lo[j], x[j] - step[j])
            fc = evaluate(cand)
            nfev += 2
            k = int(np.argmin(fc))
            if fc[k] < fx:
                x, fx = cand[k], float(fc[k])
                improved = True
        if not improved:
            step = step * 0.5
    return OptResult(x, fx, nfev, iters)


def optimize_mle(psi: Callable[[np.ndarray], np.ndarray], d: int,
                 config: OptimizerConfig = OptimizerConfig(),
                 x0: np.ndarray | None = None) -> OptResult:
    """Minimize ``psi`` over the log10-theta box; returns theta in natural units."""
    lo = np.full(d, math.log10(config.theta_lower))
    hi = np.full(d, math.log10(config.theta_upper))
    u0 = None if x0 is None else np.log10(np.atleast_2d(x0))
    res = pso_minimize(psi, lo, hi, config, u0)
    return OptResult(10.0 ** res.x, res.fun, res.nfev, res.nit)


# ---------------------------------------------------------------------- trends


def _monomials(n: int, degree: int) -> list[tuple[int, ...]]:
    out = []
    for total in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(n), total):
            e = [0] * n
            for c in combo:
                e[c] += 1
            out.append(tuple(e))
    return out


@dataclass(frozen=True)
class TrendBasis:
    """Regression basis f(x) of the Kriging trend.

    kind ``constant`` gives Ordinary Kriging, ``polynomial`` all monomials up to
    ``degree``, ``custom`` a tuple of callables mapping (k, n) -> (k,), and
    ``lowfidelity`` the mean of ``lf_model`` (hierarchical Kriging).
    """

    kind: str = "constant"
    degree: int = 0
    functions: tuple = ()
    lf_model: "FittedModel | None" = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("constant", "polynomial", "custom", "lowfidelity"):
            raise ValueError(f"unknown trend kind {self.kind!r}")
        if self.kind == "lowfidelity" and self.lf_model is None:
            raise ValueError("lowfidelity trend needs lf_model")

    def n_terms(self, n: int) -> int:
        if self.kind == "constant" or self.kind == "lowfidelity":
            return 1
        if self.kind == "polynomial":
            return len(_monomials(n, self.degree))
        return len(self.functions)

    def matrix(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        k = X.shape[0]
        if self.kind == "constant":
            return np.ones((k, 1))
        if self.kind == "lowfidelity":
            return self.lf_model.predict_mean(X).reshape(k, 1)
        if self.kind == "polynomial":
            exps = np.array(_monomials(X.shape[1], self.degree))
            return np.prod(X[:, None, :] ** exps[None, :, :], axis=2)
        return np.column_stack([np.asarray(f(X), float).reshape(k) for f in self.functions])

    def to_dict(self) -> dict:
        if self.kind == "custom":
            raise ValueError("custom trend functions cannot be serialized")
        d = {"kind": self.kind, "degree": self.degree}
        if self.lf_model is not None:
            d["lf_model"] = self.lf_model.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrendBasis":
        lf = d.get("lf_model")
        return cls(d["kind"], int(d.get("degree", 0)), (),
                   None if lf is None else FittedModel.from_dict(lf))


# ------------------------------------------------------------------ likelihood


def _factor_terms(L: np.ndarray, y: np.ndarray, F: np.ndarray):
    B = np.column_stack([y, F])
    Z, info = lapack.dtrtrs(L, B, lower=1)
    if info != 0:
        raise NotPositiveDefinite("triangular solve failed")
    Ly, LF = Z[:, 0], Z[:, 1:]
    G = LF.T @ LF
    return Ly, LF, G


def _gls(Ly, LF, G):
    try:
        beta = np.linalg.solve(G, LF.T @ Ly)
    except np.linalg.LinAlgError:
        beta = np.linalg.lstsq(LF, Ly, rcond=None)[0]
    res = Ly - LF @ beta
    return beta, res


def make_psi(dataset: Dataset, kernel: KernelSpec, trend: TrendBasis,
             F: np.ndarray | None = None) -> Callable[[np.ndarray], np.ndarray]:
    """Batched reduced-likelihood objective over log10(theta) rows."""
    cache = PairCache(kernel, dataset.points)
    y = dataset.responses
    m = dataset.m
    F = trend.matrix(dataset.points) if F is None else F

    def psi(U: np.ndarray) -> np.ndarray:
        U = np.atleast_2d(U)
        out = np.empty(U.shape[0])
        for k, u in enumerate(U):
            R = cache.matrix(10.0 ** u)
            try:
                L, _ = cholesky_nugget(R)
                Ly, LF, G = _factor_terms(L, y, F)
            except NotPositiveDefinite:
                out[k] = np.inf
                continue
            _, res = _gls(Ly, LF, G)
            sigma2 = float(res @ res) / m
            out[k] = sigma2 * math.exp(2.0 / m * float(np.sum(np.log(np.diag(L)))))
        return out

    return psi


def reduced_likelihood(dataset: Dataset, kernel: KernelSpec, trend: TrendBasis, theta) -> float:
    return float(make_psi(dataset, kernel, trend)(np.log10(np.atleast_1d(theta)))[0])


# ------------------------------------------------------------------- the model


@dataclass(frozen=True)
class Prediction:
    mean: float
    variance: float


def confidence_interval(pred: Prediction, alpha: float = 0.05) -> tuple[float, float]:
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    half = norm.ppf(1.0 - alpha / 2.0) * math.sqrt(max(pred.variance, 0.0))
    return pred.mean - half, pred.mean + half


class FittedModel:
    """Factorized Kriging system, immutable after construction."""

    def __init__(self, dataset: Dataset, kernel: KernelSpec, trend: TrendBasis, theta,
                 nugget: float = 0.0, fit_report: dict | None = None):
        m = dataset.m
        p = trend.n_terms(dataset.n)
        if m < 1:
            raise ValueError("empty dataset")
        if p > m:
            raise ValueError(f"{p} trend terms exceed {m} samples")
        theta = np.atleast_1d(np.asarray(theta, float))
        self.dataset = dataset
        self.kernel = kernel
        self.trend = trend
        self.F = trend.matrix(dataset.points)
        R = PairCache(kernel, dataset.points).matrix(theta, nugget)
        self.L, nug = cholesky_nugget(R, nugget)
        y = dataset.responses
        Ly, self._LF, G = _factor_terms(self.L, y, self.F)
        self._Gc, info = lapack.dpotrf(G, lower=1, clean=1)
        if info != 0:
            raise NotPositiveDefinite("trend Gram matrix F'R^-1F is singular")
        self.beta, res = _gls(Ly, self._LF, G)
        self.degenerate = bool(np.ptp(y) == 0.0)
        if self.degenerate:
            sigma2 = 0.0
            if trend.kind == "constant":
                self.beta = np.array([y[0]])
            res = Ly - self._LF @ self.beta
            self.alpha = solve_triangular(self.L, res, lower=True, trans="T")
            self.alpha[np.abs(self.alpha) < 1e-300] = 0.0
        else:
            sigma2 = float(res @ res) / m
            self.alpha = solve_triangular(self.L, res, lower=True, trans="T")
        self.hyper = Hyperparameters(theta, sigma2, nug)
        self.fit_report = dict(fit_report or {})
        self.fit_report.setdefault("nugget", nug)
        self.fit_report["degenerate_responses"] = self.degenerate
        self._loo = None

    # convenience accessors
    @property
    def theta(self) -> np.ndarray:
        return self.hyper.theta

    @property
    def sigma2(self) -> float:
        return self.hyper.sigma2

    @property
    def nugget(self) -> float:
        return self.hyper.nugget

    @property
    def m(self) -> int:
        return self.dataset.m

    @property
    def X(self) -> np.ndarray:
        return self.dataset.points

    @property
    def y(self) -> np.ndarray:
        return self.dataset.responses

    def log_det_R(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.L))))

    def psi(self) -> float:
        return self.sigma2 * math.exp(self.log_det_R() / self.m)

    # ---------------------------------------------------------------- predict
    def _pieces(self, X0):
        X0 = np.atleast_2d(np.asarray(X0, float))
        r0 = cross_correlation(self.kernel, self.theta, self.X, X0)
        r0 = r0.reshape(X0.shape[0], self.m)
        f0 = self.trend.matrix(X0)
        return X0, r0, f0

    def predict_mean(self, X0) -> np.ndarray:
        _, r0, f0 = self._pieces(X0)
        return f0 @ self.beta + r0 @ self.alpha

    def predict(self, X0) -> tuple[np.ndarray, np.ndarray]:
        """Mean and variance at the rows of X0."""
        _, r0, f0 = self._pieces(X0)
        mean = f0 @ self.beta + r0 @ self.alpha
        V = solve_triangular(self.L, r0.T, lower=True, check_finite=False)
        t1 = np.sum(V * V, axis=0)
        U = self._LF.T @ V - f0.T
        W = solve_triangular(self._Gc, U, lower=True, check_finite=False)
        t3 = np.sum(W * W, axis=0)
        var = self.sigma2 * (1.0 - t1 + t3)
        return mean, np.maximum(var, 0.0)

    def predict_one(self, x0) -> Prediction:
        mu, var = self.predict(np.atleast_2d(x0))
        return Prediction(float(mu[0]), float(var[0]))

    def weights(self, X0) -> np.ndarray:
        """BLUP weights lambda(x) so that mean(x) = lambda(x) . y, one row per query."""
        _, r0, f0 = self._pieces(X0)
        V = solve_triangular(self.L, r0.T, lower=True, check_finite=False)
        U = self._LF.T @ V - f0.T
        GinvU = lapack.dpotrs(self._Gc, U, lower=1)[0]
        Z = V - self._LF @ GinvU
        return solve_triangular(self.L, Z, lower=True, trans="T", check_finite=False).T

    # -------------------------------------------------------------------- LOO
    def loo_block(self) -> np.ndarray:
        """Top-left block of the inverse bordered matrix built from R (not sigma2 R)."""
        m = self.m
        Rinv = lapack.dpotri(self.L, lower=1)[0]
        Rinv = np.tril(Rinv) + np.tril(Rinv, -1).T
        RF = Rinv @ self.F
        G = self.F.T @ RF
        return Rinv - RF @ np.linalg.solve(G, RF.T)

    def loo(self) -> tuple[np.ndarray, np.ndarray]:
        """Closed-form leave-one-out means and variances (theta and sigma2 frozen)."""
        if self._loo is None:
            B = self.loo_block()
            d = np.diag(B).copy()
            if np.any(~(d > 0)):
                raise SingularBlock(f"nonpositive diagonal entries at {np.flatnonzero(~(d > 0)).tolist()}")
            By = B @ self.y
            means = self.y - By / d
            var = self.sigma2 / d
            self._loo = (means, var, (self.y - means))
        return self._loo[0], self._loo[1]

    def loo_errors(self) -> np.ndarray:
        """Signed LOO residuals y_i - mu_{-i}."""
        self.loo()
        return self._loo[2]

    def loo_delta(self, X0) -> np.ndarray:
        """mean(x) - mean_{-i}(x) for every query row and every left-out sample i.

        With theta frozen, removing sample i changes the predictor by
        lambda_i(x) times the LOO residual of i.
        """
        return self.weights(X0) * self.loo_errors()[None, :]

    def submodel(self, drop) -> "FittedModel":
        """Model on the dataset without ``drop`` indices, same theta and nugget."""
        return type(self)(self.dataset.without(drop), self.kernel, self.trend, self.theta,
                          self.nugget)

    # --------------------------------------------------------- serialization
    def to_dict(self) -> dict:
        return {
            "format": "kriging-model/1",
            "kernel": self.kernel.to_dict(),
            "theta": self.theta.tolist(),
            "sigma2": self.sigma2,
            "nugget": self.nugget,
            "trend": self.trend.to_dict(),
            "beta": self.beta.tolist(),
            "dataset": {
                "domain": self.dataset.domain.to_dict(),
                "points": self.dataset.points.tolist(),
                "responses": self.dataset.responses.tolist(),
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FittedModel":
        ds = d["dataset"]
        dataset = Dataset(np.asarray(ds["points"], float), np.asarray(ds["responses"], float),
                          Domain.from_dict(ds["domain"]))
        return cls(dataset, KernelSpec.from_dict(d["kernel"]), TrendBasis.from_dict(d["trend"]),
                   np.asarray(d["theta"], float), float(d["nugget"]))


def gmse(model: FittedModel) -> float:
    mu, _ = model.loo()
    return float(np.sqrt(np.mean((mu - model.y) ** 2)))


def q2(model: FittedModel) -> float:
    mu, var = model.loo()
    return float(1.0 - np.mean((mu - model.y) ** 2 / var))


def loo_dubrule(model: FittedModel) -> tuple[np.ndarray, np.ndarray]:
    return model.loo()


def fit(dataset: Dataset, kernel: KernelSpec = KernelSpec(), trend: TrendBasis = TrendBasis(),
        optimizer: OptimizerConfig = OptimizerConfig(), theta0=None) -> FittedModel:
    """Maximum-likelihood Kriging fit.

    ``theta0`` (one or more rows) seeds the swarm, which lets adaptive loops
    warm-start from the previous iteration.
    """
    if dataset.m < 2:
        raise ValueError("need at least two samples")
    p = trend.n_terms(dataset.n)
    if p > dataset.m:
        raise ValueError(f"{p} trend terms exceed {dataset.m} samples")
    d = kernel.n_theta(dataset.n)
    psi = make_psi(dataset, kernel, trend)
    res = optimize_mle(psi, d, optimizer, theta0)
    report = {"psi": res.fun, "nfev": res.nfev, "iterations": res.nit, "theta_dim": d}
    return FittedModel(dataset, kernel, trend, res.x, 0.0, report)


def predict(model: FittedModel, x0) -> Prediction:
    return model.predict_one(x0)
