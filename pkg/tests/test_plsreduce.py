import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from artifact.benchfns import get_problem
from artifact.designspace import Dataset, Domain, denormalize, tplhd
from artifact.gpcore import OptimizerConfig, TrendBasis, fit
from artifact.kernels import KernelSpec, cholesky_nugget, correlation_matrix
from artifact.multifidelity import HkModel, fit_hk
from artifact.plsreduce import default_h, fit_plshk, fit_plsok, nipals, pls_kernel

FAST = OptimizerConfig(particles_per_dim=15, iters_per_dim=30, polish_sweeps=20)


def centered(X, y):
    return X - X.mean(axis=0), y - y.mean()


def test_single_direction(rng):
    # enough rows that chance covariances between columns stay small
    X = rng.random((4000, 5))
    Xc, yc = centered(X, X[:, 0])
    w = nipals(Xc, yc, 1).W_star[:, 0]
    assert abs(w[0]) / np.linalg.norm(w) > 0.99


def test_one_dimensional(rng):
    Xc, yc = centered(rng.random((10, 1)), rng.normal(size=10))
    pw = nipals(Xc, yc, 1)
    assert abs(pw.W[0, 0]) == pytest.approx(1.0)


def test_full_rank_scores_span_inputs(rng):
    Xc, yc = centered(rng.random((20, 4)), rng.normal(size=20))
    pw = nipals(Xc, yc, 4)
    T = Xc @ pw.W_star
    proj = T @ np.linalg.lstsq(T, Xc, rcond=None)[0]
    assert np.max(np.abs(proj - Xc)) < 1e-8
    assert np.allclose(np.linalg.norm(pw.W, axis=0), 1.0)


def test_rank_deficiency_flagged(rng):
    X = rng.random((10, 3))
    X[:, 1:] = X[:, :1]  # rank one
    Xc, yc = centered(X, X[:, 0])
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        pw = nipals(Xc, yc, 3)
    assert pw.rank_deficient and pw.h < 3 and w


def test_plsok_1d_matches_ok():
    p = get_problem("schwefel1d")
    Z = tplhd(8, 1)
    ds = Dataset(Z, p.hf(Z * 15), p.domain)
    a = fit_plsok(ds, 1, FAST)
    b = fit(ds, optimizer=FAST)
    G = np.linspace(0, 1, 200).reshape(-1, 1)
    # W* is +-1 so the two likelihood surfaces coincide
    assert np.allclose(a.predict_mean(G), b.predict_mean(G), atol=1e-6 * np.ptp(ds.responses))


def test_plsok_interpolates_and_tracks_version(rng):
    p = get_problem("wong10")
    Z = tplhd(40, 10)
    ds = Dataset(Z, p.hf(denormalize(Z, p.domain)), p.domain)
    mdl = fit_plsok(ds, 4, FAST)
    assert mdl.theta.size == 4 and mdl.fit_report["theta_dim"] == 4
    assert mdl.fit_report["pls_version"] == ds.version
    mu, _ = mdl.predict(Z)
    assert np.max(np.abs(mu - ds.responses)) < 1e-6 * np.ptp(ds.responses)
    grown = ds.append(rng.random(10), 1.0)
    mdl2 = fit_plsok(grown, 4, FAST)
    assert mdl2.fit_report["pls_version"] == grown.version
    assert not np.array_equal(mdl2.kernel.weights, mdl.kernel.weights)


def test_plshk_reduces_to_hk(rng):
    d = Domain.unit(2)
    f_hf = lambda X: np.sin(4 * X[:, 0]) + X[:, 1] ** 2  # noqa: E731
    f_lf = lambda X: 0.8 * f_hf(X) + 0.1 * X[:, 0]  # noqa: E731
    Zl, Zh = tplhd(20, 2), rng.random((8, 2))
    lf = Dataset(Zl, f_lf(Zl), d)
    hf = Dataset(Zh, f_hf(Zh), d)
    ref = fit_hk(lf, hf, optimizer=FAST)
    # identity weights with the fitted HK theta must give the same predictor
    lf_pls = fit_plsok(lf, 2, FAST)
    ident = KernelSpec("pls_matern32", weights=np.eye(2))
    via_pls = HkModel(hf, ident, TrendBasis("lowfidelity", lf_model=ref.lf_model), ref.theta)
    Q = rng.random((50, 2))
    assert np.allclose(via_pls.predict_mean(Q), ref.predict_mean(Q), atol=1e-4)
    full = fit_plshk(lf, hf, 2, 2, FAST)
    mu, _ = full.predict(Zh)
    assert np.allclose(mu, hf.responses, atol=1e-6 * np.ptp(hf.responses))
    assert lf_pls.theta.size == 2


def test_plshk_borehole_interpolates():
    p = get_problem("borehole8")
    Zl, Zh = tplhd(60, 8), tplhd(30, 8)
    lf = Dataset(Zl, p.lf(denormalize(Zl, p.domain)), p.domain)
    hf = Dataset(Zh, p.hf(denormalize(Zh, p.domain)), p.domain)
    mdl = fit_plshk(lf, hf, 4, 4, FAST)
    assert mdl.theta.size == 4 and mdl.lf_model.theta.size == 4
    mu, _ = mdl.predict(Zh)
    assert np.max(np.abs(mu - hf.responses)) < 1e-6 * np.ptp(hf.responses)


@pytest.mark.filterwarnings("ignore:NIPALS stopped")
def test_plshk_constant_hf():
    d = Domain.unit(3)
    lf = Dataset(tplhd(12, 3), np.ones(12), d)
    hf = Dataset(tplhd(6, 3), np.full(6, 2.5), d)
    mdl = fit_plshk(lf, hf, 2, 2, FAST)
    assert mdl.mu_hf == pytest.approx(2.5, rel=1e-10)


def test_default_h():
    assert default_h(10, 100) == 4 and default_h(3, 50) == 3 and default_h(8, 3) == 2


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4), st.floats(0.05, 10))
def test_pls_kernel_spd(seed, h, th):
    r = np.random.default_rng(seed)
    ds = Dataset(r.random((10, 5)), r.normal(size=10), Domain.unit(5))
    k, pw = pls_kernel(ds, h)
    assert k.weights.shape == (pw.h, 5)
    R = correlation_matrix(k, [th] * pw.h, ds.points, 1e-10)
    cholesky_nugget(R, 1e-10)
