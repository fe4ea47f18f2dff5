import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import cholesky

from artifact.errors import NonPositiveScale
from artifact.kernels import (
    KernelSpec,
    cholesky_nugget,
    correlation,
    correlation_matrix,
    cross_correlation,
    pls_correlation,
)

M32 = KernelSpec("matern32")
FAMILIES = [KernelSpec("matern32"), KernelSpec("matern52"), KernelSpec("powexp", 2.0),
            KernelSpec("powexp", 1.3)]


def m32_scalar(d, th):
    a = math.sqrt(3) * abs(d) / th
    return (1 + a) * math.exp(-a)


def test_scalar_values():
    assert correlation(M32, [1.0], [0.0], [1.0]) == pytest.approx((1 + math.sqrt(3)) * math.exp(-math.sqrt(3)), rel=1e-14)
    assert correlation(M32, [1.0], [0.0], [1.0]) == pytest.approx(0.48335772459650765, rel=1e-14)  # mpmath, 30 digits
    assert correlation(KernelSpec("powexp", 2.0), [1.0], [0.0], [1.0]) == pytest.approx(math.exp(-1), rel=1e-14)
    for k in FAMILIES:
        assert correlation(k, [0.3, 2.0], [0.1, 0.2], [0.1, 0.2]) == 1.0


def test_bad_inputs():
    with pytest.raises(NonPositiveScale):
        correlation(M32, [0.0], [0.0], [1.0])
    with pytest.raises(ValueError):
        KernelSpec("powexp", 2.5)
    with pytest.raises(ValueError):
        KernelSpec("pls_matern32")


def test_matrix_small_cases():
    assert np.allclose(correlation_matrix(M32, [1.0], [[0.3]], 1e-6), [[1 + 1e-6]])
    R = correlation_matrix(M32, [0.5], [[0.3], [0.3]], 0.0)
    with pytest.raises(np.linalg.LinAlgError):
        cholesky(R, lower=True)


def test_matrix_entrywise_oracle(rng):
    X = rng.random((5, 2))
    th = np.array([0.4, 1.7])
    R = correlation_matrix(M32, th, X)
    for i in range(5):
        for j in range(5):
            ref = m32_scalar(X[i, 0] - X[j, 0], th[0]) * m32_scalar(X[i, 1] - X[j, 1], th[1])
            assert R[i, j] == pytest.approx(ref, rel=1e-13)


def test_cross_correlation(rng):
    X = rng.random((6, 3))
    th = np.array([0.2, 0.5, 1.0])
    R = correlation_matrix(M32, th, X)
    r = cross_correlation(M32, th, X, X[3])
    assert r[3] == 1.0
    assert np.allclose(r, R[3], rtol=1e-14)
    far = cross_correlation(M32, [0.01] * 3, X, X[0] + 5.0)
    assert np.all(far < 1e-6)
    block = cross_correlation(M32, th, X, X[:2])
    assert block.shape == (2, 6)


def test_pls_kernel_reductions(rng):
    x, xp = rng.random(3), rng.random(3)
    th = np.array([0.3, 0.8, 1.2])
    assert pls_correlation(np.eye(3), th, x, xp) == pytest.approx(correlation(M32, th, x, xp), rel=1e-13)
    assert pls_correlation(rng.random((2, 3)), [0.5, 0.5], x, x) == 1.0
    w = np.array([[1.0, 0.0, 0.0]])
    base = pls_correlation(w, [0.4], x, xp)
    moved = xp.copy()
    moved[1:] += rng.random(2)
    assert pls_correlation(w, [0.4], x, moved) == base


pts = st.lists(st.floats(0, 1), min_size=3, max_size=3)


@given(pts, pts, st.floats(0.05, 10), st.sampled_from(range(4)))
def test_symmetric_bounded(x, xp, th, fam):
    k = FAMILIES[fam]
    a = correlation(k, [th] * 3, x, xp)
    assert a == correlation(k, [th] * 3, xp, x)
    assert 0 < a <= 1


@given(st.floats(0, 0.5), st.floats(0, 0.5), st.floats(0.05, 10), st.sampled_from(range(4)))
def test_monotone_decay(d1, d2, th, fam):
    k = FAMILIES[fam]
    lo, hi = sorted((d1, d2))
    assert correlation(k, [th], [0.0], [hi]) <= correlation(k, [th], [0.0], [lo])


@given(st.integers(0, 2 ** 32 - 1), st.floats(0.05, 10), st.sampled_from(range(4)), st.booleans())
def test_spd_with_small_nugget(seed, th, fam, pls):
    X = np.random.default_rng(seed).random((10, 3))
    k = KernelSpec("pls_matern32", weights=np.random.default_rng(seed + 1).normal(size=(2, 3))) \
        if pls else FAMILIES[fam]
    thetas = [th] * (2 if pls else 3)
    R = correlation_matrix(k, thetas, X, 1e-10)
    L, nug = cholesky_nugget(R, 1e-10)
    assert np.allclose(L @ L.T, R + (nug - 1e-10) * np.eye(10), atol=1e-10)


@given(st.integers(0, 2 ** 32 - 1), st.floats(1e-10, 1e-3), st.floats(1e-10, 1e-3))
def test_nugget_never_worsens_conditioning(seed, n1, n2):
    X = np.random.default_rng(seed).random((8, 2))
    lo, hi = sorted((n1, n2))
    c_lo = np.linalg.cond(correlation_matrix(M32, [0.7, 0.7], X, lo))
    c_hi = np.linalg.cond(correlation_matrix(M32, [0.7, 0.7], X, hi))
    assert c_hi <= c_lo * (1 + 1e-9)


def test_nugget_escalation():
    R = correlation_matrix(M32, [0.5], [[0.2], [0.2 + 1e-13]])
    L, nug = cholesky_nugget(R)
    assert nug >= 1e-10
