"""PLS-reduced Kriging.

NIPALS on the (centered) design and responses gives h weight directions. The
rotated weights W* = W (P^T W)^-1 scale the per-dimension distances of a
Matern 3/2 kernel, and MLE then runs over h scale parameters instead of n.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .designspace import Dataset
from .errors import RankDeficient
from .gpcore import FittedModel, OptimizerConfig, TrendBasis, make_psi, optimize_mle
from .kernels import KernelSpec
from .multifidelity import HkModel, fit_lf


@dataclass(frozen=True)
class PlsWeights:
    W: np.ndarray       # n x h
    P: np.ndarray       # n x h
    W_star: np.ndarray  # n x h
    h: int
    rank_deficient: bool = False
    version: int | None = None


def nipals(X: np.ndarray, y: np.ndarray, h: int, version: int | None = None) -> PlsWeights:
    """Univariate-response NIPALS with deflation.

    For a single response no inner iteration is needed: each weight vector is
    X_l^T y_l normalized. If a weight vector vanishes before ``h`` components
    are found, the components so far are returned and ``rank_deficient`` is set.
    """
    X = np.array(X, dtype=float, copy=True)
    y = np.array(y, dtype=float, copy=True).reshape(-1)
    m, n = X.shape
    if h < 1 or h > n:
        raise ValueError(f"h must be in [1, {n}]")
    Ws, Ps = [], []
    short = False
    for _ in range(h):
        w = X.T @ y
        nw = np.linalg.norm(w)
        if nw < 1e-12:
            short = True
            break
        w /= nw
        t = X @ w
        tt = t @ t
        if tt < 1e-24:
            short = True
            break
        p = X.T @ t / tt
        c = (y @ t) / tt
        X -= np.outer(t, p)
        y -= c * t
        Ws.append(w)
        Ps.append(p)
    if not Ws:
        # nothing explains y (e.g. constant responses): fall back to the first axis
        W = np.zeros((n, 1))
        W[0, 0] = 1.0
        P = W.copy()
    else:
        W = np.column_stack(Ws)
        P = np.column_stack(Ps)
    W_star = W @ np.linalg.inv(P.T @ W)
    if short:
        warnings.warn(f"NIPALS stopped after {W.shape[1]} of {h} components", RuntimeWarning)
    return PlsWeights(W, P, W_star, W.shape[1], short, version)


def default_h(n: int, m: int) -> int:
    h = 4 if n >= 8 else n
    return max(1, min(h, n, m - 1))


def pls_kernel(dataset: Dataset, h: int) -> tuple[KernelSpec, PlsWeights]:
    X = dataset.points - dataset.points.mean(axis=0)
    y = dataset.responses - dataset.responses.mean()
    pw = nipals(X, y, min(h, dataset.n), dataset.version)
    return KernelSpec("pls_matern32", weights=pw.W_star.T.copy()), pw


def fit_plsok(dataset: Dataset, h: int | None = None,
              optimizer: OptimizerConfig = OptimizerConfig(), theta0=None) -> FittedModel:
    """OK with the PLS kernel; W* is recomputed from the dataset on every call."""
    if dataset.m < 2:
        raise ValueError("need at least two samples")
    h = default_h(dataset.n, dataset.m) if h is None else h
    kernel, pw = pls_kernel(dataset, h)
    trend = TrendBasis()
    psi = make_psi(dataset, kernel, trend)
    if theta0 is not None and np.size(theta0) != pw.h:
        theta0 = None
    res = optimize_mle(psi, pw.h, optimizer, theta0)
    report = {"psi": res.fun, "nfev": res.nfev, "iterations": res.nit, "theta_dim": pw.h,
              "pls_version": dataset.version, "rank_deficient": pw.rank_deficient}
    return FittedModel(dataset, kernel, trend, res.x, 0.0, report)


def fit_plshk(lf_dataset: Dataset | None, hf_dataset: Dataset, h_lf: int | None = None,
              h_hf: int | None = None, optimizer: OptimizerConfig = OptimizerConfig(),
              lf_model: FittedModel | None = None, theta0=None) -> HkModel:
    """HK with PLS kernels; NIPALS runs separately on each fidelity level."""
    if lf_model is None:
        lf_model = fit_plsok(lf_dataset, h_lf, optimizer)
    h_hf = default_h(hf_dataset.n, hf_dataset.m) if h_hf is None else h_hf
    kernel, pw = pls_kernel(hf_dataset, h_hf)
    trend = TrendBasis("lowfidelity", lf_model=lf_model)
    psi = make_psi(hf_dataset, kernel, trend)
    if theta0 is not None and np.size(theta0) != pw.h:
        theta0 = None
    res = optimize_mle(psi, pw.h, optimizer, theta0)
    report = {"psi": res.fun, "nfev": res.nfev, "iterations": res.nit, "theta_dim": pw.h,
              "pls_version": hf_dataset.version}
    return HkModel(hf_dataset, kernel, trend, res.x, 0.0, report)


__all__ = ["PlsWeights", "nipals", "fit_plsok", "fit_plshk", "default_h", "pls_kernel",
           "RankDeficient", "fit_lf"]
