"""Adaptive sampling: one new point per iteration from a pluggable strategy.

Every strategy has the signature ``propose_<name>(state, **params)`` and returns
a :class:`ProposeResult` in normalized coordinates. Continuous criteria are
maximized over [0, 1]^n with the same seeded swarm optimizer used for MLE.
Pool-based criteria draw a fresh Monte Carlo pool from the state's RNG.

Sub-model predictions with one sample removed use the full model's theta; the
difference to the full predictor is then ``lambda_i(x) * e_i`` (kriging weight
times LOO residual), so no refits are needed inside a criterion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import solve_triangular
from scipy.stats import norm

from .benchfns import BenchmarkProblem, evaluate_batch
from .designspace import (
    CandidatePool,
    Dataset,
    default_pool_size,
    denormalize,
    initial_size,
    monte_carlo_pool,
    normalize,
    tplhd,
)
from .errors import (
    AllCandidatesRejected,
    AllRanksExhausted,
    ArtifactError,
    ClusteringDetected,
    DegenerateCommittee,
    EmptyCell,
    InfeasibleConstraint,
    NotPositiveDefinite,
    SingularBlock,
)
from .gpcore import FittedModel, OptimizerConfig, TrendBasis, fit, pso_minimize
from .kernels import KernelSpec, cholesky_nugget, correlation_matrix, cross_correlation
from .metrics import classification_rates, compute_metrics
from .multifidelity import fit_hk, fit_lf
from .plsreduce import fit_plshk, fit_plsok

CLUSTER_TOL = 1e-8

STRATEGY_NAMES = ("ace", "ame", "cvd", "cvvor", "ei", "wei", "eigf", "masa", "mepe", "mipt",
                  "msd", "mmse", "sfcvt", "ssa", "mivor")

ACQ_OPTIMIZER = OptimizerConfig(particles_per_dim=40, iters_per_dim=50, polish_sweeps=30)


# ------------------------------------------------------------------ state


@dataclass
class ProposeResult:
    point: np.ndarray
    score: float
    diagnostics: dict = field(default_factory=dict)


@dataclass
class AdaptiveState:
    dataset: Dataset
    model: FittedModel
    rng: np.random.Generator
    memory: dict = field(default_factory=dict)
    iteration: int = 0
    acq_optimizer: OptimizerConfig = ACQ_OPTIMIZER
    pool_size: int | None = None
    threshold: float = 0.0  # class boundary for mivor

    @property
    def X(self) -> np.ndarray:
        return self.dataset.points

    @property
    def n(self) -> int:
        return self.dataset.n

    def new_seed(self) -> int:
        return int(self.rng.integers(0, 2 ** 63 - 1))

    def new_pool(self, size: int | None = None) -> CandidatePool:
        nn = size or self.pool_size or default_pool_size(self.n, self.dataset.m)
        return monte_carlo_pool(nn, self.n, self.new_seed())


# ------------------------------------------------------------------ helpers


def nearest(X: np.ndarray, Q: np.ndarray, chunk: int = 4096) -> tuple[np.ndarray, np.ndarray]:
    """Euclidean distance from each row of Q to its nearest row of X, and that row's index.

    Ties go to the lowest index.
    """
    Q = np.atleast_2d(Q)
    d = np.empty(Q.shape[0])
    idx = np.empty(Q.shape[0], dtype=np.int64)
    for s in range(0, Q.shape[0], chunk):
        D2 = np.sum((Q[s:s + chunk, None, :] - X[None, :, :]) ** 2, axis=2)
        j = np.argmin(D2, axis=1)
        idx[s:s + chunk] = j
        d[s:s + chunk] = np.sqrt(D2[np.arange(j.size), j])
    return d, idx


def sample_spacing(X: np.ndarray) -> np.ndarray:
    """ds(x_i): distance from each sample to its nearest other sample."""
    D = np.sqrt(np.sum((X[:, None, :] - X[None, :, :]) ** 2, axis=2))
    np.fill_diagonal(D, np.inf)
    return D.min(axis=1)


def crowding(X: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Sum of squared distances from each query row to all samples."""
    return np.sum((np.atleast_2d(Q)[:, None, :] - X[None, :, :]) ** 2, axis=(1, 2))


def maximize(score: Callable[[np.ndarray], np.ndarray], n: int, state: AdaptiveState,
             x0=None) -> tuple[np.ndarray, float]:
    """Maximize a batched score over [0, 1]^n; NaN counts as -inf."""
    cfg = state.acq_optimizer.with_seed(state.new_seed())

    def neg(Z):
        v = -np.asarray(score(Z), float)
        v[np.isnan(v)] = np.inf
        return v

    res = pso_minimize(neg, np.zeros(n), np.ones(n), cfg, x0)
    return np.clip(res.x, 0.0, 1.0), -res.fun


def check_clustering(X: np.ndarray, z: np.ndarray, tol: float = CLUSTER_TOL) -> float:
    d = float(nearest(X, z.reshape(1, -1))[0][0])
    if d < tol:
        raise ClusteringDetected(f"proposal within {d:.3g} of an existing sample")
    return d


# ------------------------------------------------------------------ space filling


def mipt_rank(X: np.ndarray, P: np.ndarray, d_min: float) -> np.ndarray:
    """Intersite-projected rank: 0 when any coordinate gap is below d_min, else NN distance."""
    ranks = np.empty(P.shape[0])
    for s in range(0, P.shape[0], 4096):
        diff = np.abs(P[s:s + 4096, None, :] - X[None, :, :])
        proj = diff.min(axis=2).min(axis=1)
        dist = np.sqrt(np.sum(diff ** 2, axis=2).min(axis=1))
        ranks[s:s + 4096] = np.where(proj < d_min, 0.0, dist)
    return ranks


def propose_mipt(state: AdaptiveState, pool: CandidatePool | None = None,
                 retries: int = 2) -> ProposeResult:
    pool = pool or state.new_pool()
    P = pool.points
    for attempt in range(retries + 1):
        ranks = mipt_rank(state.X, P, 1.0 / P.shape[0])
        k = int(np.argmax(ranks))
        if ranks[k] > 0:
            return ProposeResult(P[k].copy(), float(ranks[k]), {"pool": P.shape[0]})
        if attempt < retries:
            P = monte_carlo_pool(4 * P.shape[0], state.n, state.new_seed()).points
    raise AllCandidatesRejected("every pool point fails the projected-distance threshold")


def propose_msd(state: AdaptiveState, pool: CandidatePool | None = None) -> ProposeResult:
    pool = pool or state.new_pool()
    d, _ = nearest(state.X, pool.points)
    k = int(np.argmax(d))
    return ProposeResult(pool.points[k].copy(), float(d[k]))


# ------------------------------------------------------------------ variance based


def propose_mmse(state: AdaptiveState) -> ProposeResult:
    m = state.model
    x, s = maximize(lambda Z: np.sqrt(m.predict(Z)[1]), state.n, state)
    return ProposeResult(x, s)


def weighted_ei(mu, var, y_ref, w: float = 0.5, maximize_mode: bool = False):
    """Weighted expected improvement; w = 0.5 is half the classic EI."""
    mu = np.asarray(mu, float)
    sd = np.sqrt(np.maximum(var, 0.0))
    imp = (mu - y_ref) if maximize_mode else (y_ref - mu)
    out = np.where(imp > 0, w * imp, 0.0)
    pos = sd > 0
    z = np.zeros_like(mu)
    z[pos] = imp[pos] / sd[pos]
    out = np.where(pos, w * imp * norm.cdf(z) + (1 - w) * sd * norm.pdf(z), out)
    return out


def expected_improvement(mu, var, y_min):
    """Classic EI (both terms with unit weight)."""
    return 2.0 * weighted_ei(mu, var, y_min, 0.5)


def propose_wei(state: AdaptiveState, w: float = 0.5, maximize_mode: bool = False) -> ProposeResult:
    if not 0.0 <= w <= 1.0:
        raise ValueError("w must lie in [0, 1]")
    m = state.model
    y = state.dataset.responses
    ref = y.max() if maximize_mode else y.min()

    def score(Z):
        mu, var = m.predict(Z)
        return weighted_ei(mu, var, ref, w, maximize_mode)

    x, s = maximize(score, state.n, state)
    return ProposeResult(x, s, {"w": w})


def propose_ei(state: AdaptiveState, maximize_mode: bool = False) -> ProposeResult:
    return propose_wei(state, 0.5, maximize_mode)


def eigf_score(model: FittedModel, Z: np.ndarray) -> np.ndarray:
    mu, var = model.predict(Z)
    _, owner = nearest(model.X, Z)
    return (mu - model.y[owner]) ** 2 + var


def propose_eigf(state: AdaptiveState) -> ProposeResult:
    x, s = maximize(lambda Z: eigf_score(state.model, Z), state.n, state)
    return ProposeResult(x, s)


def mepe_alpha(q: int, e_true_sq: float | None, e_hat_prev: float | None) -> float:
    if q <= 1 or e_true_sq is None:
        return 0.5
    if not e_hat_prev:
        return 0.99
    return 0.99 * min(0.5 * e_true_sq / e_hat_prev, 1.0)


def mepe_score(model: FittedModel, Z: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    mu, var = model.predict(Z)
    e2 = model.loo_errors() ** 2
    _, owner = nearest(model.X, Z)
    ehat = e2[owner]
    return alpha * ehat + (1 - alpha) * var, mu


def propose_mepe(state: AdaptiveState) -> ProposeResult:
    mem = state.memory.setdefault("mepe", {"q": 0})
    mem["q"] += 1
    q = mem["q"]
    e_true_sq = e_hat_prev = None
    pending = mem.get("pending")
    if pending is not None and q > 1:
        z_prev, mu_prev, ehat_prev = pending
        last = state.X[-1]
        if np.allclose(last, z_prev, atol=1e-14):
            e_true_sq = float((state.dataset.responses[-1] - mu_prev) ** 2)
            e_hat_prev = float(ehat_prev)
    alpha = mepe_alpha(q, e_true_sq, e_hat_prev)
    m = state.model
    x, s = maximize(lambda Z: mepe_score(m, Z, alpha)[0], state.n, state)
    mu_x = float(m.predict(x.reshape(1, -1))[0][0])
    _, owner = nearest(m.X, x.reshape(1, -1))
    mem["pending"] = (x.copy(), mu_x, float(m.loo_errors()[owner[0]] ** 2))
    mem["alpha"] = alpha
    return ProposeResult(x, s, {"alpha": alpha, "q": q})


def ame_adjusted(model: FittedModel, gamma: float, c: float = 0.5):
    """Exponents p_i = 1/(1 - c*eta_i) and the Cholesky factor of the adjusted matrix.

    Correlations with high-error samples are sharpened, R_adj_ij = R_ij^((p_i+p_j)/2),
    so the bordered determinant still vanishes at every sample.
    """
    e = np.abs(model.loo_errors())
    emax = e.max()
    eta = (e / emax) ** gamma if emax > 0 else np.ones_like(e)
    p = 1.0 / (1.0 - c * eta)
    R = correlation_matrix(model.kernel, model.theta, model.X)
    with np.errstate(divide="ignore"):
        Radj = np.clip(R, 0.0, 1.0) ** (0.5 * (p[:, None] + p[None, :]))
    np.fill_diagonal(Radj, 1.0)
    try:
        L, _ = cholesky_nugget(Radj, model.nugget)
    except NotPositiveDefinite:
        # mixed exponents can break definiteness; use the nearest PSD correlation matrix
        w, V = np.linalg.eigh(Radj)
        Radj = (V * np.maximum(w, 1e-10)) @ V.T
        s = np.sqrt(np.diag(Radj))
        Radj = Radj / s[:, None] / s[None, :]
        L, _ = cholesky_nugget(Radj, max(model.nugget, 1e-10))
    return p, L, eta


def ame_log_det(model: FittedModel, p, L, Z) -> np.ndarray:
    """log det(R*) of the bordered adjusted matrix for each row of Z."""
    r0 = cross_correlation(model.kernel, model.theta, model.X, np.atleast_2d(Z))
    r0 = np.clip(r0.reshape(-1, model.m), 0.0, 1.0) ** p[None, :]
    V = solve_triangular(L, r0.T, lower=True, check_finite=False)
    schur = 1.0 - np.sum(V * V, axis=0)
    base = 2.0 * np.sum(np.log(np.diag(L)))
    with np.errstate(divide="ignore", invalid="ignore"):
        return base + np.log(np.maximum(schur, 0.0))


def propose_ame(state: AdaptiveState, gamma_schedule=(0.5, 1.0, 2.0), c: float = 0.5) -> ProposeResult:
    m = state.model
    mem = state.memory.setdefault("ame", {"theta_idx": 0})
    e = np.abs(m.loo_errors())
    gamma = float(gamma_schedule[mem["theta_idx"] % len(gamma_schedule)])
    mem["theta_idx"] = (mem["theta_idx"] + 1) % len(gamma_schedule)
    if e.max() == 0:
        res = propose_mmse(state)
        res.diagnostics.update({"gamma": gamma, "fallback": "mmse"})
        return res
    p, L, _ = ame_adjusted(m, gamma, c)
    x, s = maximize(lambda Z: ame_log_det(m, p, L, Z), state.n, state)
    return ProposeResult(x, s, {"gamma": gamma})


# ------------------------------------------------------------------ cross validation


def loo_departures(model: FittedModel, Z: np.ndarray) -> np.ndarray:
    """Full-model minus leave-one-out predictions, shape (k, m)."""
    return model.loo_delta(Z)


def cvd_score(model: FittedModel, Z: np.ndarray) -> np.ndarray:
    D = loo_departures(model, Z)
    egen = np.sqrt(np.mean(D * D, axis=1))
    d, _ = nearest(model.X, Z)
    return egen * d


def propose_cvd(state: AdaptiveState) -> ProposeResult:
    x, s = maximize(lambda Z: cvd_score(state.model, Z), state.n, state)
    return ProposeResult(x, s)


PENALTY = 1e10


def constrained_maximize(value, X: np.ndarray, S: float, state: AdaptiveState,
                         rel_tol: float = 1e-6) -> tuple[np.ndarray, float]:
    """Maximize value(Z) subject to distance >= S from every sample.

    Infeasible points get a score that still grows with distance, so the swarm
    can find a feasible set of measure almost zero (e.g. gap midpoints in 1D).
    Raises InfeasibleConstraint if none is found, after one enlarged pool search.
    """
    floor = S * (1.0 - rel_tol)

    def score(Z):
        d, _ = nearest(X, Z)
        v = np.asarray(value(Z), float)
        return np.where(d >= floor, v, -PENALTY * (1.0 + floor - d))

    x, s = maximize(score, state.n, state)
    if s > -PENALTY:
        return x, s
    P = state.new_pool(max(10 * default_pool_size(state.n, X.shape[0]), 1000)).points
    sc = score(P)
    k = int(np.argmax(sc))
    if sc[k] <= -PENALTY:
        raise InfeasibleConstraint(f"no candidate at distance >= {S:.3g}")
    return P[k].copy(), float(sc[k])


def _error_model(model: FittedModel, state: AdaptiveState) -> FittedModel:
    e = np.abs(model.loo_errors())
    ds = Dataset(model.X, e, model.dataset.domain)
    cfg = OptimizerConfig(particles_per_dim=20, iters_per_dim=30, polish_sweeps=20,
                          seed=state.new_seed())
    return fit(ds, model.kernel if model.kernel.family != "pls_matern32" else KernelSpec(),
               TrendBasis(), cfg)


def propose_sfcvt(state: AdaptiveState) -> ProposeResult:
    m = state.model
    if m.m < 2:
        raise ValueError("SFCVT needs at least two samples")
    S = 0.5 * float(sample_spacing(m.X).max())
    me = _error_model(m, state)
    x, s = constrained_maximize(me.predict_mean, m.X, S, state)
    return ProposeResult(x, s, {"S": S})


def propose_ace(state: AdaptiveState, alpha_doi: float | None = None) -> ProposeResult:
    m = state.model
    ds = sample_spacing(m.X)
    S = 0.5 * float(ds.mean())
    a = math.log(2.0) / float(ds.mean()) if alpha_doi is None else float(alpha_doi)
    e = np.abs(m.loo_errors())

    def value(Z):
        D = np.sqrt(np.sum((np.atleast_2d(Z)[:, None, :] - m.X[None, :, :]) ** 2, axis=2))
        return np.exp(-a * D) @ e

    x, s = constrained_maximize(value, m.X, S, state)
    return ProposeResult(x, s, {"S": S, "alpha_doi": a})


def voronoi_volumes(dataset: Dataset | np.ndarray, pool: CandidatePool | np.ndarray) -> np.ndarray:
    """Monte Carlo estimate of each sample's normalized Voronoi-cell volume."""
    X = dataset.points if isinstance(dataset, Dataset) else np.atleast_2d(dataset)
    P = pool.points if isinstance(pool, CandidatePool) else np.atleast_2d(pool)
    if P.shape[0] < 1:
        raise ValueError("pool must be nonempty")
    _, owner = nearest(X, P)
    counts = np.bincount(owner, minlength=X.shape[0]).astype(float)
    return counts / counts.sum()


def propose_cvvor(state: AdaptiveState, pool: CandidatePool | None = None) -> ProposeResult:
    m = state.model
    if m.m == 1:
        e = np.zeros(1)
    else:
        e = np.abs(m.loo_errors())
    target = int(np.argmax(e))
    for attempt in range(2):
        P = (pool.points if (pool is not None and attempt == 0) else state.new_pool().points)
        _, owner = nearest(m.X, P)
        cell = np.flatnonzero(owner == target)
        if cell.size:
            d = np.sqrt(np.sum((P[cell] - m.X[target]) ** 2, axis=1))
            k = cell[int(np.argmax(d))]
            return ProposeResult(P[k].copy(), float(e[target]), {"cell": target})
    raise EmptyCell(f"no pool point fell into the cell of sample {target}")


def refit_submodel(model: FittedModel, drop, state: AdaptiveState) -> FittedModel:
    """Leave-out sub-model with its own MLE, warm-started from the full theta."""
    ds = model.dataset.without(drop)
    cfg = OptimizerConfig(particles_per_dim=20, iters_per_dim=30, polish_sweeps=20,
                          seed=state.new_seed())
    sub = fit(ds, model.kernel, model.trend, cfg, model.theta) if model.trend.kind != "lowfidelity" \
        else None
    if sub is None:
        from .multifidelity import fit_hk
        sub = fit_hk(None, ds, model.kernel, cfg, lf_model=model.trend.lf_model, theta0=model.theta)
    return sub


def propose_ssa(state: AdaptiveState, epsilon_dist: float = 0.01, refit: bool = True) -> ProposeResult:
    m = state.model
    if m.m < 2:
        raise ValueError("SSA needs at least two samples")
    cdm = crowding(m.X, m.X)
    order = np.argsort(-cdm, kind="stable")
    e = m.loo_errors()
    for rank, j in enumerate(order):
        if refit and m.kernel.family != "pls_matern32":
            sub = refit_submodel(m, [j], state)

            def score(Z, sub=sub):
                return (m.predict_mean(Z) - sub.predict_mean(Z)) ** 2 * crowding(m.X, Z)
        else:
            def score(Z, j=j):
                lam = m.weights(Z)[:, j]
                return (lam * e[j]) ** 2 * crowding(m.X, Z)

        x, s = maximize(score, state.n, state)
        if s <= 0:
            continue
        d, _ = nearest(m.X, x.reshape(1, -1))
        if d[0] >= epsilon_dist:
            return ProposeResult(x, s, {"rank": rank, "sample": int(j)})
    raise AllRanksExhausted("every rank's optimum lies within epsilon of a sample")


def committee(model: FittedModel, K: int, rng: np.random.Generator) -> list[FittedModel]:
    m = model.m
    if K < 2 or m < K:
        raise DegenerateCommittee(f"need m >= K >= 2 (m={m}, K={K})")
    perm = rng.permutation(m)
    size = math.ceil(m / K)
    members = []
    for k in range(K):
        block = perm[k * size:(k + 1) * size]
        if m - block.size < 2:
            raise DegenerateCommittee("a committee member would keep fewer than 2 samples")
        members.append(model.submodel(np.sort(block)))
    return members


def qbc_variance(members: list[FittedModel], P: np.ndarray) -> np.ndarray:
    Y = np.column_stack([mb.predict_mean(P) for mb in members])
    return np.var(Y, axis=1)


def propose_masa(state: AdaptiveState, K: int = 5, pool: CandidatePool | None = None) -> ProposeResult:
    pool = pool or state.new_pool()
    members = committee(state.model, K, np.random.default_rng(state.new_seed()))
    P = pool.points
    var = qbc_variance(members, P)
    d, _ = nearest(state.X, P)
    dterm = d / d.max() if d.max() > 0 else np.zeros_like(d)
    vterm = var / var.max() if var.max() > 0 else np.zeros_like(var)
    eta = dterm + vterm
    k = int(np.argmax(eta))
    return ProposeResult(P[k].copy(), float(eta[k]), {"K": K})


# ------------------------------------------------------------------ classification


def neighbour_counts(X: np.ndarray, labels: np.ndarray, idx: np.ndarray, k: int) -> np.ndarray:
    """Number of label-0 samples among the k nearest other samples of each index."""
    D = np.sqrt(np.sum((X[idx, None, :] - X[None, :, :]) ** 2, axis=2))
    D[np.arange(idx.size), idx] = np.inf
    out = np.empty(idx.size, dtype=int)
    for r in range(idx.size):
        nb = np.argsort(D[r], kind="stable")[: min(k, X.shape[0] - 1)]
        out[r] = int(np.sum(labels[nb] == 0))
    return out


def propose_mivor(state: AdaptiveState, r0: float = 0.5, alpha_decay: float = 1.05,
                  r_floor: float = 0.05, pool: CandidatePool | None = None,
                  threshold: float | None = None) -> ProposeResult:
    if alpha_decay < 1.0:
        raise ValueError("alpha_decay must be >= 1")
    a = state.threshold if threshold is None else threshold
    mem = state.memory.setdefault("mivor", {"r": float(r0)})
    r = mem["r"]
    pool = pool or state.new_pool()
    X = state.X
    labels = (state.dataset.responses >= a).astype(int)
    positives = np.flatnonzero(labels == 1)

    def explore(branch):
        res = propose_mipt(state, pool)
        res.diagnostics.update({"branch": branch, "r": r})
        return res

    if positives.size == 0:
        return explore("explore_no_positive")
    u = float(state.rng.random())
    mem["r"] = max(r / alpha_decay, r_floor)
    if u < r:
        return explore("explore")
    regular = np.flatnonzero(labels == 0)
    if regular.size == 0:
        return explore("mipt_no_regular")
    P = pool.points
    _, owner = nearest(X, P)
    vol = np.bincount(owner, minlength=X.shape[0]) / P.shape[0]
    N = neighbour_counts(X, labels, positives, 2 * state.n)
    score = vol[positives] * N
    if score.max() <= 0:
        return explore("mipt_zero_score")
    i_max = int(positives[int(np.argmax(score))])
    cell = np.flatnonzero(owner == i_max)
    if cell.size == 0:
        return explore("mipt_empty_cell")
    S = 0.1 * float(sample_spacing(X).max()) if X.shape[0] > 1 else 0.0
    dreg, _ = nearest(X[regular], P[cell])
    cand = P[cell[int(np.argmin(dreg))]]
    dmin = nearest(X, cand.reshape(1, -1))[0][0]
    if dmin >= S and dmin > CLUSTER_TOL:
        return ProposeResult(cand.copy(), float(score.max()),
                             {"branch": "edge", "sample": i_max, "r": r, "u": u})
    _, var = state.model.predict(P[cell])
    cand = P[cell[int(np.argmax(var))]]
    dmin = nearest(X, cand.reshape(1, -1))[0][0]
    if dmin >= S and dmin > CLUSTER_TOL:
        return ProposeResult(cand.copy(), float(score.max()),
                             {"branch": "variance", "sample": i_max, "r": r, "u": u})
    return explore("mipt_spacing")


STRATEGIES: dict[str, Callable[..., ProposeResult]] = {
    "ace": propose_ace,
    "ame": propose_ame,
    "cvd": propose_cvd,
    "cvvor": propose_cvvor,
    "ei": propose_ei,
    "wei": propose_wei,
    "eigf": propose_eigf,
    "masa": propose_masa,
    "mepe": propose_mepe,
    "mipt": propose_mipt,
    "msd": propose_msd,
    "mmse": propose_mmse,
    "sfcvt": propose_sfcvt,
    "ssa": propose_ssa,
    "mivor": propose_mivor,
}


def propose(name: str, state: AdaptiveState, **params) -> ProposeResult:
    try:
        fn = STRATEGIES[name]
    except KeyError:
        raise ValueError(f"unknown strategy {name!r}") from None
    return fn(state, **params)


# ------------------------------------------------------------------ models


@dataclass(frozen=True)
class ModelSpec:
    """Which Kriging variant the loop refits after every new sample."""

    kind: str = "ok"  # ok | uk | hk | plsok | plshk
    kernel: KernelSpec = field(default_factory=KernelSpec)
    degree: int = 1
    h: int | None = None
    h_lf: int | None = None
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    def __post_init__(self):
        if self.kind not in ("ok", "uk", "hk", "plsok", "plshk"):
            raise ValueError(f"unknown model kind {self.kind!r}")

    @property
    def multifidelity(self) -> bool:
        return self.kind in ("hk", "plshk")

    def fit_lf(self, lf_dataset: Dataset, seed: int) -> FittedModel:
        opt = self.optimizer.with_seed(seed)
        if self.kind == "plshk":
            return fit_plsok(lf_dataset, self.h_lf, opt)
        return fit_lf(lf_dataset, self.kernel, opt)

    def fit(self, dataset: Dataset, seed: int, lf_model: FittedModel | None = None,
            theta0=None) -> FittedModel:
        opt = self.optimizer.with_seed(seed)
        if self.kind == "ok":
            return fit(dataset, self.kernel, TrendBasis(), opt, theta0)
        if self.kind == "uk":
            return fit(dataset, self.kernel, TrendBasis("polynomial", self.degree), opt, theta0)
        if self.kind == "plsok":
            return fit_plsok(dataset, self.h, opt, theta0)
        if self.kind == "hk":
            return fit_hk(None, dataset, self.kernel, opt, lf_model=lf_model, theta0=theta0)
        return fit_plshk(None, dataset, None, self.h, opt, lf_model=lf_model, theta0=theta0)


# ------------------------------------------------------------------ stopping


ERROR_METRICS = ("mae", "rmse", "rmae")
SCORE_METRICS = ("r2", "pct_pos", "pct_neg", "pct_min")


@dataclass(frozen=True)
class StoppingRule:
    """Budget, accuracy threshold, or both (whichever triggers first)."""

    max_samples: int | None = None
    metric: str | None = None
    threshold: float | None = None

    def __post_init__(self):
        if self.max_samples is None and self.metric is None:
            raise ValueError("stopping rule needs a budget or a metric threshold")
        if self.metric is not None:
            if self.metric not in ERROR_METRICS + SCORE_METRICS:
                raise ValueError(f"unknown stopping metric {self.metric!r}")
            if self.threshold is None:
                raise ValueError("metric threshold missing")

    def reached(self, metrics: dict) -> bool:
        if self.metric is None:
            return False
        v = metrics.get(self.metric)
        if v is None or not np.isfinite(v):
            return False
        if self.metric in ERROR_METRICS:
            return v < self.threshold
        return v >= self.threshold

    def exhausted(self, m: int) -> bool:
        return self.max_samples is not None and m >= self.max_samples


# ------------------------------------------------------------------ reference sets


@dataclass(frozen=True)
class ReferenceSet:
    points: np.ndarray  # raw units
    values: np.ndarray
    seed: int

    @property
    def size(self) -> int:
        return int(self.values.size)


_REF_CACHE: dict = {}


def make_reference(problem: BenchmarkProblem, size: int | None = None, seed: int = 12345) -> ReferenceSet:
    """Seeded uniform reference points (default 5000 per dimension) with true responses."""
    size = 5000 * problem.dim if size is None else int(size)
    key = (problem.name, size, seed)
    if key not in _REF_CACHE:
        rng = np.random.default_rng(seed)
        Z = rng.random((size, problem.dim))
        Xr = denormalize(Z, problem.domain)
        _REF_CACHE[key] = ReferenceSet(Xr, evaluate_batch(problem, Xr), seed)
    return _REF_CACHE[key]


def model_metrics(model: FittedModel, problem: BenchmarkProblem, ref: ReferenceSet) -> dict:
    Z = normalize(ref.points, problem.domain)
    pred = model.predict_mean(Z)
    rep = compute_metrics(ref.values, pred)
    out = {"mae": rep.mae, "rmse": rep.rmse, "rmae": rep.rmae, "r2": rep.r2}
    if problem.threshold is not None:
        a = problem.threshold
        pp, pn = classification_rates(ref.values >= a, pred >= a)
        out["pct_pos"] = pp
        out["pct_neg"] = pn
        out["pct_min"] = None if pp is None or pn is None else min(pp, pn)
    return out


# ------------------------------------------------------------------ the loop


FAILURES = (ClusteringDetected, NotPositiveDefinite, AllCandidatesRejected, AllRanksExhausted,
            InfeasibleConstraint, EmptyCell, DegenerateCommittee, SingularBlock)


@dataclass
class RunRecord:
    problem: str
    strategy: str
    model_kind: str
    seed: int
    replication: int = 0
    rows: list = field(default_factory=list)
    status: str = "completed"
    message: str = ""
    dataset: Dataset | None = None
    lf_dataset: Dataset | None = None
    model: FittedModel | None = None

    def samples_to_threshold(self, rule: StoppingRule) -> int | None:
        for row in self.rows:
            if rule.reached(row["metrics"]):
                return row["m"]
        return None

    def final_metrics(self) -> dict:
        return self.rows[-1]["metrics"] if self.rows else {}


def _evaluate(problem: BenchmarkProblem, Z: np.ndarray, fidelity: str = "hf") -> np.ndarray:
    return evaluate_batch(problem, denormalize(np.atleast_2d(Z), problem.domain), fidelity)


def run_adaptive_loop(problem: BenchmarkProblem, model_kind: ModelSpec | str, strategy: str,
                      stopping: StoppingRule, seed: int = 0, *, initial: int | np.ndarray | None = None,
                      lf_size: int | None = None, strategy_params: dict | None = None,
                      reference: ReferenceSet | None = None,
                      acq_optimizer: OptimizerConfig = ACQ_OPTIMIZER,
                      pool_size: int | None = None,
                      callback: Callable[[AdaptiveState, dict], None] | None = None) -> RunRecord:
    """Propose, evaluate, append and refit until the stopping rule fires.

    Strategy and model failures end the run with status ``clustering_failure``
    instead of propagating.
    """
    spec = ModelSpec(model_kind) if isinstance(model_kind, str) else model_kind
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    params = dict(strategy_params or {})
    rng = np.random.default_rng(seed)
    n = problem.dim
    if initial is None:
        Z0 = tplhd(initial_size(n), n)
    elif np.ndim(initial) == 0:
        Z0 = tplhd(int(initial), n)
    else:
        Z0 = np.atleast_2d(np.asarray(initial, float))
    ref = reference if reference is not None else make_reference(problem)
    rec = RunRecord(problem.name, strategy, spec.kind, seed)

    lf_model = None
    if spec.multifidelity:
        if not problem.multifidelity:
            raise ValueError(f"{problem.name} has no low-fidelity level")
        Zl = tplhd(lf_size or 7 * Z0.shape[0], n)
        rec.lf_dataset = Dataset(Zl, _evaluate(problem, Zl, "lf"), problem.domain)
        lf_model = spec.fit_lf(rec.lf_dataset, int(rng.integers(0, 2 ** 63 - 1)))

    ds = Dataset(Z0, _evaluate(problem, Z0), problem.domain)
    try:
        model = spec.fit(ds, int(rng.integers(0, 2 ** 63 - 1)), lf_model)
    except FAILURES as exc:
        rec.status, rec.message, rec.dataset = "clustering_failure", str(exc), ds
        return rec
    state = AdaptiveState(ds, model, rng, acq_optimizer=acq_optimizer, pool_size=pool_size,
                          threshold=problem.threshold if problem.threshold is not None else 0.0)
    metrics = model_metrics(model, problem, ref)
    rec.rows.append({"iteration": 0, "m": ds.m, "point": None, "y": None,
                     "metrics": metrics, "diagnostics": {}, "status": "initial"})

    while True:
        if stopping.reached(metrics):
            rec.status = "threshold_reached"
            break
        if stopping.exhausted(state.dataset.m):
            rec.status = "budget_exhausted" if stopping.metric is not None else "completed"
            break
        try:
            res = propose(strategy, state, **params)
            z = np.clip(np.asarray(res.point, float).reshape(-1), 0.0, 1.0)
            check_clustering(state.X, z)
            y = float(_evaluate(problem, z)[0])
            new_ds = state.dataset.append(z, y)
            model = spec.fit(new_ds, state.new_seed(), lf_model, state.model.theta)
        except FAILURES as exc:
            rec.status, rec.message = "clustering_failure", f"{type(exc).__name__}: {exc}"
            break
        state.dataset = new_ds
        state.model = model
        state.iteration += 1
        metrics = model_metrics(model, problem, ref)
        row = {"iteration": state.iteration, "m": new_ds.m,
               "point": denormalize(z, problem.domain), "y": y, "metrics": metrics,
               "diagnostics": res.diagnostics, "status": "ok"}
        rec.rows.append(row)
        if callback is not None:
            callback(state, row)
    rec.dataset = state.dataset
    rec.model = state.model
    return rec


__all__ = [name for name in dir() if name.startswith("propose")] + [
    "AdaptiveState", "ProposeResult", "StoppingRule", "RunRecord", "ModelSpec", "ReferenceSet",
    "make_reference", "run_adaptive_loop", "voronoi_volumes", "STRATEGIES", "STRATEGY_NAMES",
    "model_metrics", "ArtifactError",
]
