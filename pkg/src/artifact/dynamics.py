"""Mass-on-belt oscillator with elasto-plastic friction, sticking time and LLE.

The state is (X, Xdot, z) where z is the bristle deflection. The integrator is
an embedded Dormand-Prince 5(4) pair with step-size control. Hot loops are
compiled with numba when it is importable; the same source runs as plain Python
otherwise (and always for user-supplied Python right-hand sides).

Largest Lyapunov exponents follow the tangent-frame scheme: every ``dt`` the
flow-map Jacobian is estimated by central differences from 2N short
integrations, applied to an orthonormal frame, and the frame is re-orthonormalized
with modified Gram-Schmidt. The log stretch of the leading vector, averaged
after the transient, is the estimate.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import types
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .designspace import Domain
from .errors import NonFiniteTrajectory, StepSizeUnderflow

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


H_MIN = 1e-14

# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200,
                                22 / 525, -1 / 40)


# ------------------------------------------------------------------ parameters


@dataclass(frozen=True)
class OscillatorParams:
    """Mass-on-belt parameters (SI units).

    ``z_max`` and ``z_ba`` default to g(0)/sigma0 and 0.7 of that.
    """

    M: float = 1.0
    V0: float = 0.1
    D: float = 0.0
    K1: float = 1.0
    K2: float = 0.0
    U0: float = 0.1
    Omega: float = 0.5
    N0: float = 1.0
    mu_s: float = 0.3
    mu_k: float = 0.15
    Vs: float = 0.1
    sigma0: float = 100.0
    sigma1: float = 10.0
    sigma2: float = 0.1
    z_max: float | None = None
    z_ba: float | None = None

    def __post_init__(self):
        if self.M <= 0:
            raise ValueError("M must be positive")
        if not (self.mu_s >= self.mu_k > 0):
            raise ValueError("need mu_s >= mu_k > 0")
        if self.Vs <= 0 or self.sigma0 <= 0:
            raise ValueError("Vs and sigma0 must be positive")
        ceiling = self.N0 * self.mu_s / self.sigma0
        if ceiling <= 0:
            ceiling = 1.0
        if self.z_max is None:
            object.__setattr__(self, "z_max", ceiling)
        if self.z_ba is None:
            object.__setattr__(self, "z_ba", 0.7 * self.z_max)
        if not (self.z_max > self.z_ba >= 0):
            raise ValueError("need z_max > z_ba >= 0")

    def g(self, vr: float) -> float:
        return self.N0 * (self.mu_k + (self.mu_s - self.mu_k) * math.exp(-(vr * vr) / (self.Vs * self.Vs)))

    def array(self) -> np.ndarray:
        return np.array([self.M, self.V0, self.D, self.K1, self.K2, self.U0, self.Omega, self.N0,
                         self.mu_s, self.mu_k, self.Vs, self.sigma0, self.sigma1, self.sigma2,
                         self.z_max, self.z_ba], dtype=float)

    def with_values(self, **kw) -> "OscillatorParams":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class OscillatorState:
    X: float = 0.0
    Xdot: float = 0.0
    z: float = 0.0
    t: float = 0.0

    def vector(self) -> np.ndarray:
        return np.array([self.X, self.Xdot, self.z], dtype=float)


@dataclass(frozen=True)
class LleConfig:
    delta: float = 1e-4
    dt: float = 0.05
    t_transient: float = 150.0
    t_total: float = 400.0
    renorm_interval: int = 1
    rtol: float = 1e-8
    atol: float = 1e-10

    def __post_init__(self):
        if self.delta <= 0 or self.dt <= 0:
            raise ValueError("delta and dt must be positive")
        if not self.t_total > self.t_transient >= 0:
            raise ValueError("need t_total > t_transient >= 0")
        if self.renorm_interval < 1:
            raise ValueError("renorm_interval must be >= 1")


# ------------------------------------------------------------------ dynamics


@njit(cache=True)
def _alpha(z, vr, z_max, z_ba):
    if vr * z < 0.0:
        return 0.0
    az = abs(z)
    if az <= z_ba:
        return 0.0
    if az >= z_max:
        return 1.0
    return 0.5 * (1.0 + math.sin(math.pi * (az - 0.5 * (z_max + z_ba)) / (z_max - z_ba)))


@njit(cache=True)
def _friction(z, vr, p):
    N0, mu_s, mu_k, Vs = p[7], p[8], p[9], p[10]
    s0, s1, s2, z_max, z_ba = p[11], p[12], p[13], p[14], p[15]
    if N0 == 0.0:
        return 0.0, 0.0
    g = N0 * (mu_k + (mu_s - mu_k) * math.exp(-(vr * vr) / (Vs * Vs)))
    sg = 0.0
    if vr > 0.0:
        sg = 1.0
    elif vr < 0.0:
        sg = -1.0
    a = _alpha(z, vr, z_max, z_ba)
    zd = (1.0 - a * s0 / g * z * sg) * vr
    fr = s0 * z + s1 * zd + s2 * vr
    return zd, fr


@njit(cache=True)
def mob_rhs(t, s, p):
    M, V0, D, K1, K2, U0, Om, N0 = p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7]
    X, Xd, z = s[0], s[1], s[2]
    vr = V0 - Xd
    zd, fr = _friction(z, vr, p)
    out = np.empty(3)
    out[0] = Xd
    out[1] = (-D * Xd - K1 * X * X * X - K2 * X + N0 * fr + U0 * math.sin(Om * t)) / M
    out[2] = zd
    return out


def friction_rhs(state: OscillatorState, params: OscillatorParams) -> tuple[float, float]:
    """Bristle velocity zdot and friction force f_R at a state."""
    vr = params.V0 - state.Xdot
    zd, fr = _friction(float(state.z), float(vr), params.array())
    return float(zd), float(fr)


def alpha_blend(z: float, vr: float, params: OscillatorParams) -> float:
    return float(_alpha(float(z), float(vr), params.z_max, params.z_ba))


# ------------------------------------------------------------------ integrator


def _dp45_py(rhs, t0, y0, t1, p, rtol, atol, h0, hmin):
    """Integrate from t0 to t1. Returns (y, last_h, steps, status).

    status: 0 ok, 1 step underflow, 2 non-finite state.
    """
    t = t0
    y = y0.copy()
    h = h0
    steps = 0
    if t1 <= t0:
        return y, h, steps, 0
    k1 = rhs(t, y, p)
    while t < t1:
        last = False
        if t + h >= t1:
            h = t1 - t
            last = True
        k2 = rhs(t + _C2 * h, y + h * _A21 * k1, p)
        k3 = rhs(t + _C3 * h, y + h * (_A31 * k1 + _A32 * k2), p)
        k4 = rhs(t + _C4 * h, y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3), p)
        k5 = rhs(t + _C5 * h, y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4), p)
        k6 = rhs(t + h, y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5), p)
        yn = y + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
        k7 = rhs(t + h, yn, p)
        err = h * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(yn))
        en = math.sqrt(np.mean((err / sc) ** 2))
        if not math.isfinite(en):
            if not np.all(np.isfinite(y)):
                return y, h, steps, 2
            en = 1e10
        if en <= 1.0:
            t = t1 if last else t + h
            y = yn
            k1 = k7
            steps += 1
            if not np.all(np.isfinite(y)):
                return y, h, steps, 2
            fac = 5.0 if en == 0.0 else min(5.0, 0.9 * en ** -0.2)
            if not last:
                h = h * fac
        else:
            h = h * max(0.2, 0.9 * en ** -0.2)
        if h < hmin:
            return y, h, steps, 1
    return y, h, steps, 0


def _dp45_fixed_py(rhs, t0, y0, h, nsteps, p):
    """Fixed-step Dormand-Prince 5th-order solution (for order checks)."""
    t = t0
    y = y0.copy()
    for _ in range(nsteps):
        k1 = rhs(t, y, p)
        k2 = rhs(t + _C2 * h, y + h * _A21 * k1, p)
        k3 = rhs(t + _C3 * h, y + h * (_A31 * k1 + _A32 * k2), p)
        k4 = rhs(t + _C4 * h, y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3), p)
        k5 = rhs(t + _C5 * h, y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4), p)
        k6 = rhs(t + h, y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5), p)
        y = y + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
        t += h
    return y


def _dense_py(rhs, t0, y0, t_eval, p, rtol, atol, h0, hmin):
    """States at increasing output times via cubic Hermite interpolation of accepted steps."""
    n = y0.size
    out = np.empty((t_eval.size, n))
    t = t0
    y = y0.copy()
    h = h0
    j = 0
    while j < t_eval.size and t_eval[j] <= t0:
        out[j] = y
        j += 1
    if j == t_eval.size:
        return out, 0
    t1 = t_eval[-1]
    k1 = rhs(t, y, p)
    while t < t1:
        last = False
        if t + h >= t1:
            h = t1 - t
            last = True
        k2 = rhs(t + _C2 * h, y + h * _A21 * k1, p)
        k3 = rhs(t + _C3 * h, y + h * (_A31 * k1 + _A32 * k2), p)
        k4 = rhs(t + _C4 * h, y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3), p)
        k5 = rhs(t + _C5 * h, y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4), p)
        k6 = rhs(t + h, y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5), p)
        yn = y + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
        k7 = rhs(t + h, yn, p)
        err = h * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(yn))
        en = math.sqrt(np.mean((err / sc) ** 2))
        if not math.isfinite(en):
            if not np.all(np.isfinite(y)):
                return out, 2
            en = 1e10
        if en <= 1.0:
            tn = t1 if last else t + h
            while j < t_eval.size and t_eval[j] <= tn:
                s = (t_eval[j] - t) / h
                h00 = 2 * s ** 3 - 3 * s ** 2 + 1
                h10 = s ** 3 - 2 * s ** 2 + s
                h01 = -2 * s ** 3 + 3 * s ** 2
                h11 = s ** 3 - s ** 2
                out[j] = h00 * y + h10 * h * k1 + h01 * yn + h11 * h * k7
                j += 1
            t = tn
            y = yn
            k1 = k7
            if not np.all(np.isfinite(y)):
                return out, 2
            fac = 5.0 if en == 0.0 else min(5.0, 0.9 * en ** -0.2)
            if not last:
                h = h * fac
        else:
            h = h * max(0.2, 0.9 * en ** -0.2)
        if h < hmin:
            return out, 1
    while j < t_eval.size:
        out[j] = y
        j += 1
    return out, 0


def _mgs_py(A):
    """Modified Gram-Schmidt on the columns of A; returns (Q, diag of R)."""
    n = A.shape[1]
    V = A.T.copy()  # rows are the vectors, contiguous for the dot products
    r = np.empty(n)
    for i in range(n):
        for k in range(i):
            V[i] = V[i] - np.dot(V[k], V[i]) * V[k]
        nrm = math.sqrt(np.dot(V[i], V[i]))
        r[i] = nrm
        V[i] = V[i] / nrm
    return V.T.copy(), r


def _fd_jacobian_py(rhs, t, y, dt, p, delta, rtol, atol, h, hmin):
    n = y.size
    J = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = delta
        yp, _, _, s1 = _dp45(rhs, t, y + e, t + dt, p, rtol, atol, h, hmin)
        ym, _, _, s2 = _dp45(rhs, t, y - e, t + dt, p, rtol, atol, h, hmin)
        if s1 != 0:
            return J, s1
        if s2 != 0:
            return J, s2
        J[:, j] = (yp - ym) / (2.0 * delta)
    return J, 0


def _lle_fd_py(rhs, p, y0, t0, dt, nsteps, ntrans, renorm, delta, rtol, atol, hmin):
    n = y0.size
    y = y0.copy()
    t = t0
    Q = np.eye(n)
    acc = 0.0
    h = min(1e-3, dt)
    worst = 0.0
    Phi = Q.copy()
    for k in range(nsteps):
        yb, h2, _, st = _dp45(rhs, t, y, t + dt, p, rtol, atol, h, hmin)
        if st != 0:
            return acc, st, worst
        J, st = _fd_jacobian(rhs, t, y, dt, p, delta, rtol, atol, h, hmin)
        if st != 0:
            return acc, st, worst
        Phi = J @ Phi
        h = h2
        t = t0 + (k + 1) * dt
        y = yb
        if (k + 1) % renorm == 0 or k == nsteps - 1:
            Q, r = _mgs(Phi)
            if not np.all(np.isfinite(r)) or r[0] <= 0.0:
                return acc, 2, worst
            dev = np.max(np.abs(Q.T @ Q - np.eye(n)))
            if dev > worst:
                worst = dev
            if k + 1 > ntrans:
                acc += math.log(r[0])
            Phi = Q.copy()
    return acc, 0, worst


def _lle_exact_py(aug_rhs, p, y0, t0, dt, nsteps, ntrans, renorm, rtol, atol, hmin):
    """Tangent frame propagated with the variational equations (aug state = [y, Phi])."""
    n = y0.size
    y = y0.copy()
    t = t0
    Phi = np.eye(n)
    acc = 0.0
    h = min(1e-3, dt)
    worst = 0.0
    for k in range(nsteps):
        aug = np.empty(n + n * n)
        aug[:n] = y
        aug[n:] = Phi.ravel()
        out, h2, _, st = _dp45(aug_rhs, t, aug, t + dt, p, rtol, atol, h, hmin)
        if st != 0:
            return acc, st, worst
        y = out[:n].copy()
        Phi = out[n:].copy().reshape(n, n)
        h = h2
        t = t0 + (k + 1) * dt
        if (k + 1) % renorm == 0 or k == nsteps - 1:
            Q, r = _mgs(Phi)
            if not np.all(np.isfinite(r)) or r[0] <= 0.0:
                return acc, 2, worst
            dev = np.max(np.abs(Q.T @ Q - np.eye(n)))
            if dev > worst:
                worst = dev
            if k + 1 > ntrans:
                acc += math.log(r[0])
            Phi = Q.copy()
    return acc, 0, worst


# compiled variants; the plain versions stay available for Python callables
_dp45 = njit(cache=True)(_dp45_py)
_dense = njit(cache=True)(_dense_py)
_mgs = njit(cache=True)(_mgs_py)
_fd_jacobian = njit(cache=True)(_fd_jacobian_py)
_lle_fd = njit(cache=True)(_lle_fd_py)
_lle_exact = njit(cache=True)(_lle_exact_py)
_dp45_fixed = njit(cache=True)(_dp45_fixed_py)


def _rebind(fn, ns):
    return types.FunctionType(fn.__code__, ns, fn.__name__, fn.__defaults__)


# Pure-Python copies whose helper lookups resolve to other pure-Python copies, so
# user-supplied (uncompiled) right-hand sides never reach a compiled helper.
_PY_NS = dict(globals())
_PY_NS.update(_dp45=_dp45_py, _mgs=_mgs_py)
_PY_NS["_fd_jacobian"] = _rebind(_fd_jacobian_py, _PY_NS)
_PY = {f.__name__: _rebind(f, _PY_NS) for f in (_lle_fd_py, _lle_exact_py)}
_PY.update(_dp45_py=_dp45_py, _dense_py=_dense_py, _fd_jacobian_py=_PY_NS["_fd_jacobian"])


def _is_compiled(fn) -> bool:
    return HAVE_NUMBA and hasattr(fn, "py_func")


def _pick(compiled, plain, rhs):
    if _is_compiled(rhs):
        return compiled
    return _PY[plain.__name__]


def _raise_status(status: int, where: str):
    if status == 1:
        raise StepSizeUnderflow(f"step size fell below {H_MIN:g} s in {where}")
    if status == 2:
        raise NonFiniteTrajectory(f"non-finite state in {where}")


# ------------------------------------------------------------------ systems


@dataclass(frozen=True)
class OdeSystem:
    """Autonomous or driven ODE y' = rhs(t, y, p) with an optional variational form.

    ``aug_rhs`` integrates [y, Phi] with Phi' = J(t, y) Phi (row-major Phi) and
    enables the exact-Jacobian LLE.
    """

    rhs: object
    p: np.ndarray
    y0: np.ndarray
    t0: float = 0.0
    aug_rhs: object = None
    name: str = ""


def mob_system(params: OscillatorParams, initial: OscillatorState = OscillatorState()) -> OdeSystem:
    return OdeSystem(mob_rhs, params.array(), initial.vector(), initial.t, None, "mass-on-belt")


@njit(cache=True)
def molaie_rhs(t, s, p):
    a = p[0]
    out = np.empty(3)
    out[0] = s[1]
    out[1] = s[2]
    out[2] = -a * s[0] - s[1] - 4.0 * s[2] + s[1] * s[1] + s[0] * s[1]
    return out


@njit(cache=True)
def molaie_aug_rhs(t, s, p):
    a = p[0]
    x, y = s[0], s[1]
    out = np.empty(12)
    out[0] = s[1]
    out[1] = s[2]
    out[2] = -a * x - s[1] - 4.0 * s[2] + y * y + x * y
    J = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-a + y, -1.0 + 2.0 * y + x, -4.0]])
    Phi = s[3:].reshape(3, 3)
    out[3:] = (J @ Phi).ravel()
    return out


def molaie_system(a: float = 3.4, y0=(3.0, 2.0, 0.0)) -> OdeSystem:
    return OdeSystem(molaie_rhs, np.array([a], float), np.asarray(y0, float), 0.0,
                     molaie_aug_rhs, "molaie")


@njit(cache=True)
def linear_rhs(t, s, p):
    n = s.size
    A = p[: n * n].reshape(n, n)
    return A @ s


@njit(cache=True)
def linear_aug_rhs(t, s, p):
    n = int(round(math.sqrt(p.size)))
    A = p.reshape(n, n)
    out = np.empty(s.size)
    out[:n] = A @ s[:n]
    out[n:] = (A @ s[n:].copy().reshape(n, n)).ravel()
    return out


def linear_system(A, y0=None) -> OdeSystem:
    A = np.atleast_2d(np.asarray(A, float))
    n = A.shape[0]
    y = np.ones(n) if y0 is None else np.asarray(y0, float)
    return OdeSystem(linear_rhs, A.ravel().copy(), y, 0.0, linear_aug_rhs, "linear")


# ------------------------------------------------------------------ public ops


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    y: np.ndarray

    @property
    def X(self):
        return self.y[:, 0]

    @property
    def Xdot(self):
        return self.y[:, 1]

    @property
    def z(self):
        return self.y[:, 2]


def integrate_system(system: OdeSystem, t_end: float, t_eval=None, rtol: float = 1e-8,
                     atol: float = 1e-10) -> Trajectory:
    if t_end <= system.t0:
        raise ValueError("t_end must exceed the initial time")
    if t_eval is None:
        t_eval = np.array([t_end])
    t_eval = np.asarray(t_eval, float)
    fn = _pick(_dense, _dense_py, system.rhs)
    Y, st = fn(system.rhs, float(system.t0), system.y0.astype(float), t_eval, system.p,
               rtol, atol, 1e-3, H_MIN)
    _raise_status(st, "integrate")
    return Trajectory(t_eval, Y)


def integrate(params: OscillatorParams, initial: OscillatorState = OscillatorState(),
              t_end: float = 250.0, t_eval=None, rtol: float = 1e-8,
              atol: float = 1e-10) -> Trajectory:
    """Integrate the oscillator and sample the solution at ``t_eval`` (default: t_end)."""
    return integrate_system(mob_system(params, initial), t_end, t_eval, rtol, atol)


def propagate(system: OdeSystem, y, t0: float, t1: float, rtol=1e-8, atol=1e-10) -> np.ndarray:
    fn = _pick(_dp45, _dp45_py, system.rhs)
    out, _, _, st = fn(system.rhs, float(t0), np.asarray(y, float), float(t1), system.p,
                       rtol, atol, min(1e-3, t1 - t0), H_MIN)
    _raise_status(st, "propagate")
    return out


def sticking_time(params: OscillatorParams, window=(150.0, 250.0), v_thresh: float = 1e-4,
                  dt_out: float = 1e-3, initial: OscillatorState = OscillatorState(),
                  rtol: float = 1e-8, atol: float = 1e-10) -> float:
    """Time within ``window`` during which |V0 - Xdot| < v_thresh.

    Evaluated on a dense output grid; a crossing between two grid samples is
    located by linear interpolation of |V_R|.
    """
    ta, tb = map(float, window)
    if tb <= ta:
        raise ValueError("window must satisfy t_b > t_a")
    n = max(2, int(math.ceil((tb - ta) / dt_out)) + 1)
    ts = np.linspace(ta, tb, n)
    if ts[0] <= initial.t:
        ts = ts[ts > initial.t]
        ts = np.concatenate([[initial.t], ts]) if ta <= initial.t else ts
    tr = integrate(params, initial, tb, ts, rtol, atol)
    vr = np.abs(params.V0 - tr.Xdot) - v_thresh
    return float(_sub_level_measure(ts, vr))


def _sub_level_measure(t: np.ndarray, f: np.ndarray) -> float:
    """Measure of {f < 0} for piecewise-linear f sampled at t."""
    total = 0.0
    for i in range(t.size - 1):
        a, b = f[i], f[i + 1]
        w = t[i + 1] - t[i]
        if a < 0 and b < 0:
            total += w
        elif a < 0 <= b:
            total += w * a / (a - b)
        elif b < 0 <= a:
            total += w * b / (b - a)
    return total


def estimate_jacobian(system: OdeSystem | OscillatorParams, state, delta: float = 1e-4,
                      dt: float = 0.05, t: float = 0.0, rtol: float = 1e-8,
                      atol: float = 1e-10) -> np.ndarray:
    """Central-difference Jacobian of the flow map over ``dt`` (2N short runs)."""
    if delta <= 0 or dt <= 0:
        raise ValueError("delta and dt must be positive")
    if isinstance(system, OscillatorParams):
        system = mob_system(system)
    if isinstance(state, OscillatorState):
        t = state.t
        state = state.vector()
    fn = _pick(_fd_jacobian, _fd_jacobian_py, system.rhs)
    J, st = fn(system.rhs, float(t), np.asarray(state, float), float(dt), system.p,
               float(delta), rtol, atol, min(1e-3, dt), H_MIN)
    _raise_status(st, "estimate_jacobian")
    return J


def exact_flow_jacobian(system: OdeSystem, state, dt: float, t: float = 0.0,
                        rtol: float = 1e-10, atol: float = 1e-12) -> np.ndarray:
    """Flow-map Jacobian from the variational equations."""
    if system.aug_rhs is None:
        raise ValueError("system has no variational form")
    y = np.asarray(state, float)
    n = y.size
    aug = np.concatenate([y, np.eye(n).ravel()])
    fn = _pick(_dp45, _dp45_py, system.aug_rhs)
    out, _, _, st = fn(system.aug_rhs, float(t), aug, float(t + dt), system.p, rtol, atol,
                       min(1e-3, dt), H_MIN)
    _raise_status(st, "exact_flow_jacobian")
    return out[n:].reshape(n, n)


def largest_lyapunov(system: OdeSystem | OscillatorParams, config: LleConfig = LleConfig(),
                     jacobian: str = "estimated", return_diagnostics: bool = False):
    """Largest Lyapunov exponent by tangent-frame propagation."""
    if isinstance(system, OscillatorParams):
        system = mob_system(system)
    nsteps = int(round(config.t_total / config.dt))
    ntrans = int(round(config.t_transient / config.dt))
    y0 = np.asarray(system.y0, float)
    if jacobian == "estimated":
        fn = _pick(_lle_fd, _lle_fd_py, system.rhs)
        acc, st, worst = fn(system.rhs, system.p, y0, float(system.t0), config.dt, nsteps, ntrans,
                            config.renorm_interval, config.delta, config.rtol, config.atol, H_MIN)
    elif jacobian == "exact":
        if system.aug_rhs is None:
            raise ValueError("exact Jacobian requested but system has no variational form")
        fn = _pick(_lle_exact, _lle_exact_py, system.aug_rhs)
        acc, st, worst = fn(system.aug_rhs, system.p, y0, float(system.t0), config.dt, nsteps,
                            ntrans, config.renorm_interval, config.rtol, config.atol, H_MIN)
    else:
        raise ValueError("jacobian must be 'estimated' or 'exact'")
    _raise_status(st, "largest_lyapunov")
    lle = acc / ((nsteps - ntrans) * config.dt)
    if return_diagnostics:
        return lle, {"orthonormality_error": worst, "steps": nsteps}
    return lle


def chaos_label(lle: float) -> int:
    """1 for chaotic motion (LLE >= 0), else 0."""
    return int(lle >= 0.0)


def chaos_classifier(params: OscillatorParams, config: LleConfig = LleConfig()) -> int:
    return chaos_label(largest_lyapunov(params, config))


# ------------------------------------------------------------------ parameter maps


_MEMO: dict[str, float] = {}


def _cache_dir() -> Path | None:
    d = os.environ.get("ARTIFACT_CACHE")
    return Path(d) if d else None


def _key(params: OscillatorParams, config: LleConfig, kind: str, extra=()) -> str:
    blob = json.dumps([kind, params.to_dict(), asdict(config), list(extra)], sort_keys=True)
    return hashlib.sha1(blob.encode()).hexdigest()


def _memo_get(key):
    if key in _MEMO:
        return _MEMO[key]
    d = _cache_dir()
    if d is not None:
        f = d / f"{key}.json"
        if f.exists():
            v = json.loads(f.read_text())["value"]
            _MEMO[key] = v
            return v
    return None


def _memo_put(key, value):
    _MEMO[key] = value
    d = _cache_dir()
    if d is not None:
        d.mkdir(parents=True, exist_ok=True)
        (d / f"{key}.json").write_text(json.dumps({"value": value}))


def memo_lle(params: OscillatorParams, config: LleConfig = LleConfig()) -> float:
    """LLE with an in-process memo (and an on-disk one if ARTIFACT_CACHE is set)."""
    key = _key(params, config, "lle")
    v = _memo_get(key)
    if v is None:
        v = float(largest_lyapunov(params, config))
        _memo_put(key, v)
    return v


def memo_sticking(params: OscillatorParams, window=(150.0, 250.0), v_thresh=1e-4) -> float:
    key = _key(params, LleConfig(), "stick", (window[0], window[1], v_thresh))
    v = _memo_get(key)
    if v is None:
        v = sticking_time(params, window, v_thresh)
        _memo_put(key, v)
    return v


@dataclass(frozen=True)
class ParameterMap:
    """Vectorized mapping from rows of named oscillator parameters to an observable."""

    base: OscillatorParams
    names: tuple
    observable: str = "lle"
    config: LleConfig = field(default_factory=LleConfig)

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, float))
        out = np.empty(X.shape[0])
        for i, row in enumerate(X):
            prm = self.base.with_values(**{k: float(v) for k, v in zip(self.names, row)})
            out[i] = memo_lle(prm, self.config) if self.observable == "lle" else memo_sticking(prm)
        return out


def lle_grid(pmap: ParameterMap, domain: Domain, shape) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate a map on a regular grid; returns (points, values)."""
    axes = [np.linspace(lo, hi, k) for lo, hi, k in zip(domain.lower, domain.upper, shape)]
    mesh = np.meshgrid(*axes, indexing="ij")
    P = np.column_stack([m.ravel() for m in mesh])
    return P, pmap(P)


def write_map_csv(path, P: np.ndarray, values: np.ndarray, threshold: float = 0.0) -> None:
    import csv

    n = P.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow([f"p{i + 1}" for i in range(n)] + ["lle", "label"])
        for row, v in zip(P, values):
            w.writerow([repr(float(c)) for c in row] + [repr(float(v)), int(v >= threshold)])


def _register():
    from .benchfns import BenchmarkProblem, register

    base = OscillatorParams()
    cases = {
        "mob_lle_1d": (("Omega",), Domain([0.2], [1.0]), base),
        "mob_lle_p1": (("K1", "K2"), Domain([0.5, 0.0], [1.0, 0.6]), base.with_values(Omega=0.6)),
        "mob_lle_p2": (("K1", "K2"), Domain([0.5, 0.0], [1.0, 0.5]), base.with_values(Omega=0.6)),
        "mob_lle_p3": (("K2", "mu_k"), Domain([0.0, 0.08], [0.5, 0.18]),
                       base.with_values(Omega=0.6, K1=1.0)),
        "mob_lle_p4": (("K1", "K2"), Domain([0.5, 0.0], [1.0, 0.6]), base.with_values(Omega=0.7)),
    }
    for name, (names, dom, prm) in cases.items():
        register(BenchmarkProblem(name, dom, ParameterMap(prm, names), expensive=True,
                                  threshold=0.0, meta={"parameters": names}))
    register(BenchmarkProblem("mob_sticking", Domain([0.5, 0.0], [1.0, 0.6]),
                              ParameterMap(base.with_values(Omega=0.6), ("K1", "K2"), "sticking"),
                              expensive=True, meta={"parameters": ("K1", "K2")}))


_register()
