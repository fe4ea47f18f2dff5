import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from artifact.errors import ClassAbsent, DegenerateReference
from artifact.metrics import (
    classification_rates,
    compute_metrics,
    strict_classification_rates,
    strict_metrics,
)

# rounded so squared residuals never underflow
floats = st.floats(-1e3, 1e3).map(lambda v: round(v, 6))
vals = st.lists(floats, min_size=2, max_size=40)


def test_examples():
    r = compute_metrics([1.0, 2.0, 4.0], [1.0, 2.0, 4.0])
    assert (r.mae, r.rmse, r.rmae, r.r2) == (0.0, 0.0, 0.0, 1.0)
    r = compute_metrics([1, 3], [2, 5])
    assert r.mae == 1.5 and r.rmse == pytest.approx(math.sqrt(2.5))
    # RMAE divides by the population standard deviation
    assert r.rmae == pytest.approx(2.0 / 1.0)


def test_degenerate_reference():
    r = compute_metrics([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])
    assert r.rmae is None and r.r2 is None
    with pytest.raises(DegenerateReference):
        strict_metrics([2.0, 2.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        compute_metrics([1.0], [1.0])


@given(vals, st.data())
def test_rmse_dominates_mae_and_permutation(t, data):
    p = data.draw(st.lists(floats, min_size=len(t), max_size=len(t)))
    a = compute_metrics(t, p)
    assert a.rmse >= a.mae * (1 - 1e-12)
    perm = np.random.default_rng(len(t)).permutation(len(t))
    b = compute_metrics(np.array(t)[perm], np.array(p)[perm])
    assert b.mae == pytest.approx(a.mae, rel=1e-12, abs=1e-12)
    assert b.rmse == pytest.approx(a.rmse, rel=1e-12, abs=1e-12)
    if a.r2 is not None:
        assert a.r2 <= 1.0
        assert b.r2 == pytest.approx(a.r2, rel=1e-9, abs=1e-9)


@given(vals)
def test_r2_one_iff_exact(t):
    if np.ptp(t) == 0:
        return
    assert compute_metrics(t, t).r2 == 1.0
    bumped = np.array(t, float)
    bumped[0] += 1.0
    assert compute_metrics(t, bumped).r2 < 1.0


def test_classification_examples():
    t = np.array([1, 0, 1, 0, 0])
    assert classification_rates(t, t) == (100.0, 100.0)
    assert classification_rates(t, np.zeros(5)) == (0.0, 100.0)
    assert classification_rates(np.zeros(3), np.zeros(3)) == (None, 100.0)
    with pytest.raises(ClassAbsent):
        strict_classification_rates(np.ones(3), np.ones(3))


@given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=60))
def test_confusion_matrix_oracle(pairs):
    t = np.array([a for a, _ in pairs], int)
    p = np.array([b for _, b in pairs], int)
    tp = sum(1 for a, b in pairs if a and b)
    tn = sum(1 for a, b in pairs if not a and not b)
    npos, nneg = int(t.sum()), int((1 - t).sum())
    rp, rn = classification_rates(t, p)
    assert rp == (None if npos == 0 else pytest.approx(100.0 * tp / npos))
    assert rn == (None if nneg == 0 else pytest.approx(100.0 * tn / nneg))
