"""Analytic benchmark problems, single and multi-fidelity.

Every function takes a (k, n) array of raw points and returns k values. Look
problems up by name with :func:`get_problem`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .designspace import Domain
from .errors import NotMultifidelity, OutOfDomain
from .metrics import compute_metrics

CLAMP_TOL = 1e-9


@dataclass(frozen=True)
class BenchmarkProblem:
    name: str
    domain: Domain
    hf: Callable[[np.ndarray], np.ndarray]
    lf: Callable[[np.ndarray], np.ndarray] | None = None
    known_optima: tuple = ()
    spread_hint: float | None = None
    open_lower: bool = False
    # domain on which the fidelity gap is measured, if it differs from the modelling domain
    gap_domain: Domain | None = None
    description: str = ""
    expensive: bool = False
    threshold: float | None = None  # classification threshold for LLE-type problems
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def multifidelity(self) -> bool:
        return self.lf is not None


def _prepare(problem: BenchmarkProblem, x, domain: Domain | None = None) -> np.ndarray:
    d = domain or problem.domain
    X = np.atleast_2d(np.asarray(x, float))
    if X.shape[1] != d.dim:
        X = X.reshape(-1, d.dim)
    tol = CLAMP_TOL * d.width
    if np.any(X < d.lower - tol) or np.any(X > d.upper + tol):
        raise OutOfDomain(f"point outside {problem.name} domain")
    lo = d.lower + tol if problem.open_lower else d.lower
    return np.clip(X, lo, d.upper)


def evaluate(problem: BenchmarkProblem, x, fidelity: str = "hf") -> float:
    """Evaluate one raw point."""
    return float(evaluate_batch(problem, np.atleast_2d(x), fidelity)[0])


def evaluate_batch(problem: BenchmarkProblem, X, fidelity: str = "hf",
                   domain: Domain | None = None) -> np.ndarray:
    fn = problem.hf if fidelity == "hf" else problem.lf
    if fn is None:
        raise NotMultifidelity(f"{problem.name} has no low-fidelity version")
    return np.asarray(fn(_prepare(problem, X, domain)), float).reshape(-1)


def fidelity_gap(problem: BenchmarkProblem, n_probes: int = 5000, seed: int = 0):
    """(MAE, RMAE, RMSE) between the two fidelity levels on uniform probes."""
    if not problem.multifidelity:
        raise NotMultifidelity(f"{problem.name} is single fidelity")
    d = problem.gap_domain or problem.domain
    rng = np.random.default_rng(seed)
    X = d.lower + rng.random((n_probes, d.dim)) * d.width
    if problem.open_lower:
        X = np.maximum(X, d.lower + CLAMP_TOL * d.width)
    rep = compute_metrics(problem.hf(X), problem.lf(X))
    return rep.mae, rep.rmae, rep.rmse


# ----------------------------------------------------------------- functions


def schwefel1d(X):
    x = X[:, 0]
    return x * np.sin(x)


def schwefel_mod(X):
    x = X[:, 0]
    return np.where(x <= 10.0, x * np.sin(x), -x * np.cos(x))


def ackley2d(X):
    x1, x2 = X[:, 0], X[:, 1]
    a = -20.0 * np.exp(-0.2 * np.sqrt(0.5 * (x1 ** 2 + x2 ** 2)))
    b = -np.exp(0.5 * (np.cos(2 * np.pi * x1) + np.cos(2 * np.pi * x2)))
    return a + b + math.e + 20.0


def six_hump_camel(X):
    x1, x2 = X[:, 0], X[:, 1]
    return (4 - 2 * x1 ** 2 + x1 ** 4 / 3) * x1 ** 2 + x1 * x2 + (-4 + 4 * x2 ** 2) * x2 ** 2


_H3_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
_H3_A = np.array([[3.0, 10.0, 30.0], [0.1, 10.0, 35.0], [3.0, 10.0, 30.0], [0.1, 10.0, 35.0]])
_H3_P = 1e-4 * np.array([[3689.0, 1170.0, 2673.0], [4699.0, 4387.0, 7470.0],
                         [1091.0, 8732.0, 5547.0], [381.0, 5743.0, 8828.0]])


def hartmann3(X):
    inner = np.sum(_H3_A[None] * (X[:, None, :] - _H3_P[None]) ** 2, axis=2)
    return -np.exp(-inner) @ _H3_ALPHA


def trid5(X):
    return np.sum((X - 1.0) ** 2, axis=1) - np.sum(X[:, 1:] * X[:, :-1], axis=1)


def levy(X):
    w = 1.0 + (X - 1.0) / 4.0
    head = np.sin(np.pi * w[:, 0]) ** 2
    body = np.sum((w[:, :-1] - 1) ** 2 * (1 + 10 * np.sin(np.pi * w[:, :-1] + 1) ** 2), axis=1)
    tail = (w[:, -1] - 1) ** 2 * (1 + np.sin(2 * np.pi * w[:, -1]) ** 2)
    return head + body + tail


def forrester_hf(X):
    x = X[:, 0]
    return (6 * x - 2) ** 2 * np.sin(12 * x - 4)


def forrester_lf(X):
    x = X[:, 0]
    return 0.5 * forrester_hf(X) + 10 * (x - 0.5) - 5


def currin_hf(X):
    x1, x2 = X[:, 0], X[:, 1]
    with np.errstate(divide="ignore", over="ignore"):
        damp = np.where(x2 > 0, 1.0 - np.exp(-1.0 / (2.0 * np.where(x2 > 0, x2, 1.0))), 1.0)
    num = 2300 * x1 ** 3 + 1900 * x1 ** 2 + 2092 * x1 + 60
    den = 100 * x1 ** 3 + 500 * x1 ** 2 + 4 * x1 + 20
    return damp * num / den


def currin_lf(X):
    x1, x2 = X[:, 0], X[:, 1]
    up = x2 + 0.05
    dn = np.maximum(0.0, x2 - 0.05)
    f = lambda a, b: currin_hf(np.column_stack([a, b]))
    return 0.25 * (f(x1 + 0.05, up) + f(x1 + 0.05, dn) + f(x1 - 0.05, up) + f(x1 - 0.05, dn))


def park_hf(X):
    x1, x2, x3, x4 = X.T
    return (x1 / 2 * (np.sqrt(1 + (x2 + x3 ** 2) * x4 / x1 ** 2) - 1)
            + (x1 + 3 * x4) + np.exp(1 + np.sin(x3)))


def park_lf(X):
    x1, x2, x3 = X[:, 0], X[:, 1], X[:, 2]
    return (1 + np.sin(x1) / 10) * park_hf(X) - 2 * x1 + x2 ** 2 + x3 ** 2 + 0.5


def wong10(X):
    # Wong No. 2 (Asaadi 1973 test problem); quadratic in x2 and weight 4 on (x4 - 5)^2
    x = X.T
    return (x[0] ** 2 + x[1] ** 2 + x[0] * x[1] - 14 * x[0] - 16 * x[1]
            + (x[2] - 10) ** 2 + 4 * (x[3] - 5) ** 2 + (x[4] - 3) ** 2 + 2 * (x[5] - 1) ** 2
            + 5 * x[6] ** 2 + 7 * (x[7] - 11) ** 2 + 2 * (x[8] - 10) ** 2 + (x[9] - 7) ** 2 + 45)


def _borehole_parts(X):
    rw, r, Tu, Hu, Tl, Hl, L, Kw = X.T
    lr = np.log(r / rw)
    return rw, lr, Tu, Hu, Tl, Hl, L, Kw


def borehole_hf(X):
    rw, lr, Tu, Hu, Tl, Hl, L, Kw = _borehole_parts(X)
    return 2 * np.pi * Tu * (Hu - Hl) / (lr * (1 + 2 * L * Tu / (lr * rw ** 2 * Kw) + Tu / Tl))


def borehole_lf(X):
    rw, lr, Tu, Hu, Tl, Hl, L, Kw = _borehole_parts(X)
    return 5 * Tu * (Hu - Hl) / (lr * (1.5 + 2 * L * Tu / (lr * rw ** 2 * Kw) + Tu / Tl))


# ------------------------------------------------------------------ registry

WONG_MINIMIZER = (2.171996, 2.363683, 8.773926, 5.095984, 0.9906548,
                  1.430574, 1.321644, 9.828726, 8.280092, 8.375927)

_REGISTRY: dict[str, BenchmarkProblem] = {}


def register(problem: BenchmarkProblem) -> BenchmarkProblem:
    _REGISTRY[problem.name] = problem
    return problem


def _box(lo, hi, n):
    return Domain([lo] * n, [hi] * n)


register(BenchmarkProblem("schwefel1d", _box(0, 15, 1), schwefel1d, spread_hint=17.2))
register(BenchmarkProblem("schwefel1d_35", _box(0, 35, 1), schwefel1d))
register(BenchmarkProblem("schwefel_mod", _box(9, 13, 1), schwefel_mod, threshold=0.0))
register(BenchmarkProblem("ackley2d", _box(-2, 2, 2), ackley2d, known_optima=(((0.0, 0.0), 0.0),)))
register(BenchmarkProblem("shc2d", _box(-2, 2, 2), six_hump_camel,
                          known_optima=(((0.0898, -0.7126), -1.0316), ((-0.0898, 0.7126), -1.0316))))
register(BenchmarkProblem("hartmann3", _box(0, 1, 3), hartmann3,
                          known_optima=(((0.1146, 0.5556, 0.8525), -3.8627),)))
register(BenchmarkProblem("trid5", _box(-25, 25, 5), trid5, known_optima=(((5, 8, 9, 8, 5), -30.0),)))
register(BenchmarkProblem("levy7", _box(-2, 2, 7), levy, known_optima=(((1,) * 7, 0.0),), spread_hint=17.5))
register(BenchmarkProblem("forrester", _box(0, 1, 1), forrester_hf, forrester_lf,
                          gap_domain=_box(-3, 3, 1)))
register(BenchmarkProblem("currin", _box(0, 1, 2), currin_hf, currin_lf, open_lower=True))
register(BenchmarkProblem("park4", _box(0, 1, 4), park_hf, park_lf, open_lower=True,
                          spread_hint=36.0))
register(BenchmarkProblem("wong10", _box(-10, 10, 10), wong10, known_optima=((WONG_MINIMIZER, 24.3062),)))
register(BenchmarkProblem(
    "borehole8",
    Domain([0.05, 100, 63070, 990, 63.1, 700, 1120, 9855],
           [0.15, 50000, 115600, 1100, 116, 820, 1680, 12045]),
    borehole_hf, borehole_lf))


def get_problem(name: str) -> BenchmarkProblem:
    if name not in _REGISTRY and name.startswith("mob_"):
        from . import dynamics  # noqa: F401  registers the oscillator problems
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; known: {sorted(_REGISTRY)}") from None


def problem_names() -> list[str]:
    from . import dynamics  # noqa: F401
    return sorted(_REGISTRY)
