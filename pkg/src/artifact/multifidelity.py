"""Hierarchical Kriging with two fidelity levels.

The low-fidelity (LF) data get an Ordinary Kriging model. The high-fidelity
model is a Kriging system whose one-column regression matrix holds the LF mean
at the HF sites, so the trend coefficient is the scaling factor mu_HF.
"""

from __future__ import annotations

import numpy as np

from .designspace import Dataset
from .gpcore import (
    FittedModel,
    OptimizerConfig,
    Prediction,
    TrendBasis,
    fit,
    make_psi,
    optimize_mle,
)
from .kernels import KernelSpec


class HkModel(FittedModel):
    """HF Kriging model with the LF predictor as trend.

    Prediction, LOO and sub-model machinery are inherited unchanged; they only
    see a one-column regression matrix.
    """

    @property
    def lf_model(self) -> FittedModel:
        return self.trend.lf_model

    @property
    def mu_hf(self) -> float:
        return float(self.beta[0])

    @property
    def F_hk(self) -> np.ndarray:
        return self.F[:, 0]

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["format"] = "hierarchical-kriging/1"
        return d


def fit_lf(lf_dataset: Dataset, kernel: KernelSpec = KernelSpec(),
           optimizer: OptimizerConfig = OptimizerConfig()) -> FittedModel:
    return fit(lf_dataset, kernel, TrendBasis(), optimizer)


def fit_hk(lf_dataset: Dataset | None, hf_dataset: Dataset, kernel: KernelSpec = KernelSpec(),
           optimizer: OptimizerConfig = OptimizerConfig(), lf_model: FittedModel | None = None,
           lf_kernel: KernelSpec | None = None, theta0=None) -> HkModel:
    """Fit the LF model (unless given) and then the HF level by MLE.

    The LF model stays fixed when only HF samples are added, so adaptive loops
    pass the previous ``lf_model`` back in.
    """
    if lf_model is None:
        if lf_dataset is None:
            raise ValueError("need lf_dataset or lf_model")
        if lf_dataset.domain != hf_dataset.domain:
            raise ValueError("LF and HF datasets must share a domain")
        lf_model = fit_lf(lf_dataset, lf_kernel or KernelSpec(), optimizer)
    if hf_dataset.m < 2:
        raise ValueError("need at least two HF samples")
    trend = TrendBasis("lowfidelity", lf_model=lf_model)
    F = trend.matrix(hf_dataset.points)
    psi = make_psi(hf_dataset, kernel, trend, F)
    res = optimize_mle(psi, kernel.n_theta(hf_dataset.n), optimizer, theta0)
    report = {"psi": res.fun, "nfev": res.nfev, "iterations": res.nit}
    return HkModel(hf_dataset, kernel, trend, res.x, 0.0, report)


def predict_hk(model: HkModel, x0) -> Prediction:
    return model.predict_one(x0)
