"""Boxed input domains, normalization, TPLHD initial designs and Monte Carlo pools.

All samplers work in the unit hypercube. A :class:`Domain` maps between problem
units and normalized coordinates, ``z = (x - lower) / (upper - lower)``.

Random numbers come from numpy's ``default_rng`` (PCG64) seeded with a 64-bit
integer, so a given seed always reproduces the same pool.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ZeroWidthDimension

DUPLICATE_TOL = 1e-12


@dataclass(frozen=True)
class Domain:
    lower: np.ndarray
    upper: np.ndarray

    def __init__(self, lower: Sequence[float], upper: Sequence[float]):
        lo = np.atleast_1d(np.asarray(lower, dtype=float)).copy()
        hi = np.atleast_1d(np.asarray(upper, dtype=float)).copy()
        if lo.ndim != 1 or lo.shape != hi.shape or lo.size < 1:
            raise ValueError("lower and upper must be 1-D vectors of equal length >= 1")
        if np.any(hi == lo):
            raise ZeroWidthDimension(f"zero-width dimension(s) {np.flatnonzero(hi == lo).tolist()}")
        if np.any(hi < lo):
            raise ValueError("upper bound below lower bound")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return int(self.lower.size)

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @classmethod
    def unit(cls, n: int) -> "Domain":
        return cls(np.zeros(n), np.ones(n))

    def to_dict(self) -> dict:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Domain":
        return cls(d["lower"], d["upper"])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Domain)
            and np.array_equal(self.lower, other.lower)
            and np.array_equal(self.upper, other.upper)
        )

    def __hash__(self) -> int:
        return hash((self.lower.tobytes(), self.upper.tobytes()))


def normalize(x, d: Domain) -> np.ndarray:
    """Map raw points (rows) into normalized coordinates. No clamping is applied."""
    if np.any(d.upper == d.lower):
        raise ZeroWidthDimension("zero-width dimension")
    x = np.asarray(x, dtype=float)
    return (x - d.lower) / (d.upper - d.lower)


def denormalize(z, d: Domain) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    return d.lower + z * (d.upper - d.lower)


def initial_size(n: int) -> int:
    """Default initial design size, ten points per input dimension."""
    return 10 * int(n)


@dataclass
class Dataset:
    """Normalized inputs with their scalar responses.

    ``points`` lives in [0, 1]^n; ``responses`` in problem units.
    """

    points: np.ndarray
    responses: np.ndarray
    domain: Domain
    version: int = 0

    def __post_init__(self):
        X = np.asarray(self.points, dtype=float)
        if X.ndim < 2:
            X = X.reshape(-1, self.domain.dim)
        y = np.asarray(self.responses, dtype=float).reshape(-1)
        if X.shape[0] != y.size:
            raise ValueError(f"{X.shape[0]} points but {y.size} responses")
        if X.shape[1] != self.domain.dim:
            raise ValueError(f"points have {X.shape[1]} columns, domain has {self.domain.dim}")
        if np.any(X < -1e-12) or np.any(X > 1 + 1e-12):
            raise ValueError("dataset points must lie in the unit hypercube")
        self.points = np.clip(X, 0.0, 1.0)
        self.responses = y
        dup = find_duplicates(self.points)
        if dup:
            raise ValueError(f"duplicate points at rows {dup[0]}")

    @property
    def m(self) -> int:
        return int(self.points.shape[0])

    @property
    def n(self) -> int:
        return self.domain.dim

    def raw_points(self) -> np.ndarray:
        return denormalize(self.points, self.domain)

    def append(self, z, y: float) -> "Dataset":
        """Return a new dataset with one extra sample (version bumped)."""
        z = np.asarray(z, dtype=float).reshape(1, -1)
        return Dataset(np.vstack([self.points, z]), np.append(self.responses, float(y)),
                       self.domain, self.version + 1)

    def without(self, idx) -> "Dataset":
        keep = np.setdiff1d(np.arange(self.m), np.atleast_1d(idx))
        return Dataset(self.points[keep], self.responses[keep], self.domain, self.version)

    def to_csv(self, path) -> None:
        write_dataset_csv(path, self)


def find_duplicates(X: np.ndarray, tol: float = DUPLICATE_TOL) -> list[tuple[int, int]]:
    X = np.atleast_2d(X)
    m = X.shape[0]
    if m < 2:
        return []
    out = []
    order = np.lexsort(X.T[::-1])
    Xs = X[order]
    gaps = np.max(np.abs(np.diff(Xs, axis=0)), axis=1)
    for k in np.flatnonzero(gaps <= tol):
        out.append((int(order[k]), int(order[k + 1])))
    if out:
        return out
    # lexsort neighbours miss near-ties in the leading column; fall back for small sets
    if m <= 400:
        D = np.max(np.abs(X[:, None, :] - X[None, :, :]), axis=2)
        iu = np.triu_indices(m, 1)
        hits = np.flatnonzero(D[iu] <= tol)
        out = [(int(iu[0][h]), int(iu[1][h])) for h in hits]
    return out


def write_dataset_csv(path, ds: Dataset) -> None:
    path = Path(path)
    raw = ds.raw_points()
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow([f"x{i + 1}" for i in range(ds.n)] + ["y"])
        for row, y in zip(raw, ds.responses):
            w.writerow([repr(float(v)) for v in row] + [repr(float(y))])


def read_dataset_csv(path, domain: Domain) -> Dataset:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    n = len(header) - 1
    if header != [f"x{i + 1}" for i in range(n)] + ["y"]:
        raise ValueError(f"unexpected dataset header {header}")
    arr = np.array([[float(v) for v in r] for r in body if r], dtype=float).reshape(-1, n + 1)
    return Dataset(normalize(arr[:, :n], domain), arr[:, n], domain)


# --------------------------------------------------------------------------- TPLHD


def _tplhd_levels(nd: int, nv: int) -> np.ndarray:
    """Integer TPLHD on nd**nv levels per dimension built from a one-point seed.

    The seed sits at level 1 of every axis. For each axis in turn the current
    block is copied nd times, shifted by one block width along that axis and by
    the current per-block fill along every other axis.
    """
    npts = nd ** nv
    width = npts // nd
    X = np.ones((1, nv), dtype=np.int64)
    for c in range(nv):
        shift = np.empty(nv, dtype=np.int64)
        for j in range(nv):
            if j == c:
                shift[j] = width
            else:
                shift[j] = int(np.count_nonzero(np.unique(X[:, j]) <= width))
        X = np.vstack([X + k * shift for k in range(nd)])
    return X


def tplhd(m: int, d: Domain | int, seed: int | None = None) -> np.ndarray:
    """Translational-propagation Latin hypercube in normalized coordinates.

    The design is deterministic in ``(m, n)``; ``seed`` is accepted for
    interface symmetry and ignored. Each point sits at the center of its stratum.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    nv = d if isinstance(d, int) else d.dim
    if nv == 1:
        return ((np.arange(m) + 0.5) / m).reshape(-1, 1)
    nd = max(1, math.ceil(round(m ** (1.0 / nv), 12)))
    while nd ** nv < m:
        nd += 1
    L = _tplhd_levels(nd, nv).astype(float)
    if L.shape[0] > m:
        # keep the m points nearest the center of the big design, then re-rank
        center = (L.shape[0] + 1) / 2.0
        dist = np.linalg.norm(L - center, axis=1)
        keep = np.sort(np.argsort(dist, kind="stable")[:m])
        L = L[keep]
    ranks = np.argsort(np.argsort(L, axis=0, kind="stable"), axis=0, kind="stable")
    return (ranks + 0.5) / m


# --------------------------------------------------------------------- MC pools


@dataclass(frozen=True)
class CandidatePool:
    points: np.ndarray
    seed: int = field(default=0)

    @property
    def nn(self) -> int:
        return int(self.points.shape[0])


def monte_carlo_pool(nn: int, n: int, seed: int) -> CandidatePool:
    if nn < 1:
        raise ValueError("nn must be >= 1")
    rng = np.random.default_rng(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    return CandidatePool(rng.random((int(nn), int(n))), int(seed))


def default_pool_size(n: int, m: int) -> int:
    return 100 * int(n) * int(m)
