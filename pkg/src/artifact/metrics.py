"""Validation metrics over a reference set."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ClassAbsent, DegenerateReference

METRIC_NAMES = ("mae", "rmse", "rmae", "r2", "pct_pos", "pct_neg")


@dataclass(frozen=True)
class MetricReport:
    mae: float
    rmse: float
    rmae: float | None
    r2: float | None
    n_ref: int

    def as_dict(self) -> dict:
        return {"mae": self.mae, "rmse": self.rmse, "rmae": self.rmae, "r2": self.r2}


def compute_metrics(y_true, y_pred) -> MetricReport:
    """MAE, RMSE, RMAE and R^2.

    RMAE is the largest absolute error divided by the population standard
    deviation of ``y_true``. For a constant reference both RMAE and R^2 are
    undefined and come back as None.
    """
    t = np.asarray(y_true, float).reshape(-1)
    p = np.asarray(y_pred, float).reshape(-1)
    if t.size != p.size:
        raise ValueError("length mismatch")
    if t.size < 2:
        raise ValueError("need at least two reference values")
    e = t - p
    mae = float(np.mean(np.abs(e)))
    rmse = float(math.sqrt(np.mean(e * e)))
    sd = float(np.std(t))
    if sd == 0.0:
        return MetricReport(mae, rmse, None, None, t.size)
    rmae = float(np.max(np.abs(e)) / sd)
    r2 = float(1.0 - np.sum(e * e) / np.sum((t - t.mean()) ** 2))
    return MetricReport(mae, rmse, rmae, r2, t.size)


def strict_metrics(y_true, y_pred) -> MetricReport:
    """Like :func:`compute_metrics` but raises on a constant reference."""
    rep = compute_metrics(y_true, y_pred)
    if rep.rmae is None:
        raise DegenerateReference("reference responses are constant")
    return rep


def classification_rates(labels_true, labels_pred) -> tuple[float | None, float | None]:
    """Percent of true positives and true negatives recovered.

    A class that is absent from ``labels_true`` gets None for its rate.
    """
    t = np.asarray(labels_true).astype(int).reshape(-1)
    p = np.asarray(labels_pred).astype(int).reshape(-1)
    if t.size != p.size:
        raise ValueError("length mismatch")
    pos = t == 1
    neg = t == 0
    rp = float(100.0 * np.mean(p[pos] == 1)) if pos.any() else None
    rn = float(100.0 * np.mean(p[neg] == 0)) if neg.any() else None
    return rp, rn


def strict_classification_rates(labels_true, labels_pred) -> tuple[float, float]:
    rp, rn = classification_rates(labels_true, labels_pred)
    if rp is None or rn is None:
        raise ClassAbsent("reference set lacks one of the classes")
    return rp, rn
