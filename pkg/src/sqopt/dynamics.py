"""Fixed-step integrators for the gradient-flow dynamical systems.

A classical 4-stage Runge-Kutta step on a uniform grid: reproducible runs and
clean step-halving refinement studies matter more than adaptive efficiency at
desk scale.  The first-order flow is ``du/dt = -grad h(u) + psi(t)`` and the
second-order flows are ``u'' + a u' + grad h(u) = 0`` (viscous damping
``a >= 0``); descent signs throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .functions import Objective
from .geometry import as_point

DISTANCE_FLOOR = 1e-14


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    values: np.ndarray
    velocities: np.ndarray | None = None

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


def _rk4(field, z0: np.ndarray, T: float, dt: float):
    if dt <= 0 or T < dt:
        raise ValueError("need dt > 0 and T >= dt")
    n_steps = int(round(T / dt))
    times = np.arange(n_steps + 1) * dt
    out = np.empty((n_steps + 1, z0.shape[0]))
    out[0] = z0
    z = z0.copy()
    for i in range(n_steps):
        t = times[i]
        k1 = field(t, z)
        k2 = field(t + 0.5 * dt, z + 0.5 * dt * k1)
        k3 = field(t + 0.5 * dt, z + 0.5 * dt * k2)
        k4 = field(t + dt, z + dt * k3)
        z = z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(z)):
            raise FloatingPointError(f"non-finite state at t={t + dt:.6g}")
        out[i + 1] = z
    return times, out


def integrate_ds1(h: Objective, psi, x0, T: float, dt: float) -> Trajectory:
    """First-order flow ``du/dt = -grad h(u) + psi(t)``; descent when psi = 0."""
    if h.grad is None:
        raise ValueError("integrate_ds1 needs a differentiable objective")
    x0 = as_point(x0, h.dim)

    if psi is None:
        field_fn = lambda t, u: -h.grad_at(u)
    else:
        field_fn = lambda t, u: -h.grad_at(u) + np.asarray(psi(t), dtype=float)
    times, states = _rk4(field_fn, x0, T, dt)
    return Trajectory(times, states, h.value_many(states))


def integrate_ds2(h: Objective, damping: float, x0, v0, T: float, dt: float) -> Trajectory:
    """Second-order flow ``u'' + damping u' + grad h(u) = 0`` in (u, u') form."""
    if h.grad is None:
        raise ValueError("integrate_ds2 needs a differentiable objective")
    if damping < 0:
        raise ValueError("damping must be nonnegative")
    x0 = as_point(x0, h.dim)
    v0 = as_point(v0, h.dim)
    n = h.dim

    def field_fn(t, z):
        u, v = z[:n], z[n:]
        return np.concatenate([v, -damping * v - h.grad_at(u)])

    times, Z = _rk4(field_fn, np.concatenate([x0, v0]), T, dt)
    states, vel = Z[:, :n], Z[:, n:]
    return Trajectory(times, states, h.value_many(states), velocities=vel)


def integrate_ds2_undamped_descent(h: Objective, x0, v0, T: float, dt: float) -> Trajectory:
    """Undamped second-order descent flow ``u'' = -grad h(u)``."""
    return integrate_ds2(h, 0.0, x0, v0, T, dt)


@dataclass
class RateFit:
    rate: float | None
    r_squared: float | None
    n_points: int
    below_floor: bool


def loglinear_rate(xs: np.ndarray, distances: np.ndarray, window: float = 0.5, min_points: int = 10) -> RateFit:
    """Least-squares slope of log(distance) over the tail window of the series."""
    if not 0.0 < window <= 1.0:
        raise ValueError("window must lie in (0, 1]")
    xs = np.asarray(xs, dtype=float)
    d = np.asarray(distances, dtype=float)
    pos = d > DISTANCE_FLOOR
    xs, d = xs[pos], d[pos]
    n_tail = max(min_points, int(np.ceil(window * xs.shape[0])))
    xs, d = xs[-n_tail:], d[-n_tail:]
    if xs.shape[0] < min_points:
        return RateFit(None, None, int(xs.shape[0]), True)
    y = np.log(d)
    A = np.stack([xs, np.ones_like(xs)], axis=-1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return RateFit(float(coef[0]), r2, int(xs.shape[0]), False)


def fit_exponential_rate(traj: Trajectory, target, window: float = 0.5) -> RateFit:
    """Exponential rate of ||u(t) - target|| via log-linear least squares."""
    target = np.asarray(target, dtype=float)
    d = np.linalg.norm(traj.states - target, axis=-1)
    return loglinear_rate(traj.times, d, window=window)
