"""Kriging surrogates with adaptive sampling, multi-fidelity and PLS variants,
plus a friction-oscillator Lyapunov toolkit and an experiment harness."""

from .designspace import Dataset, Domain, denormalize, monte_carlo_pool, normalize, tplhd
from .gpcore import FittedModel, OptimizerConfig, TrendBasis, fit
from .kernels import KernelSpec

__version__ = "0.1.0"

__all__ = ["Dataset", "Domain", "normalize", "denormalize", "tplhd", "monte_carlo_pool",
           "KernelSpec", "FittedModel", "OptimizerConfig", "TrendBasis", "fit", "__version__"]
