"""Spatially homogeneous moment equations for (u, T).

Averaging the collision rule over an isotropic direction ``n`` gives
E[(q.n) n] = q/3, E[(q.n)(v.n)] = (q.v)/3 and E[(q.n)^2] = |q|^2/3, so the
mean velocity and the kinetic energy change at rates that depend on the
first two velocity moments only:

    du/dt   = -kappa1 (u - u1),          kappa1 = (2/3) nu a
    deps/dt = (2/3) nu D,                eps = |u|^2/2 + 3T/2
    D       = a^2 (3T + 3T1 + |u - u1|^2) - a (3T + |u|^2 - u.u1)

with nu = rate_constant * S * rho1 / lambda the collision frequency. For
constant S (and for S depending on u, T only) the system is exactly closed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError, StepSizeError
from .model import (
    BackgroundState,
    ModelParams,
    MomentState,
    SClosure,
    collision_rate,
    effective_coefficient,
    evaluate_S,
    model_fixed_point_temperature,
)

NEGATIVE_T_TOLERANCE = 1e-12


@dataclass(frozen=True)
class OdeState:
    u: np.ndarray
    T: float
    t: float = 0.0

    def __post_init__(self):
        u = np.array(self.u, dtype=float).reshape(3)
        u.flags.writeable = False
        object.__setattr__(self, "u", u)

    def as_moments(self, rho: float = 1.0) -> MomentState:
        return MomentState(rho, self.u, max(self.T, 0.0))


def energy_bracket(u, T, a: float, bg: BackgroundState):
    """D = a^2 (3T + 3T1 + |u - u1|^2) - a (3T + |u|^2 - u.u1); vectorised over leading axes."""
    u = np.asarray(u, dtype=float)
    d = u - bg.u1
    rel2 = np.sum(d * d, axis=-1)
    uu = np.sum(u * u, axis=-1)
    uu1 = u @ bg.u1
    return a * a * (3.0 * T + 3.0 * bg.T1 + rel2) - a * (3.0 * T + uu - uu1)


def momentum_rhs(state: OdeState, params: ModelParams, bg: BackgroundState, S: float) -> np.ndarray:
    nu = collision_rate(params, bg, S)
    kappa1 = 2.0 / 3.0 * nu * effective_coefficient(params)
    return -kappa1 * (state.u - bg.u1)


def energy_rhs(state: OdeState, params: ModelParams, bg: BackgroundState, S: float) -> float:
    """Rate of change of eps = |u|^2/2 + 3T/2 (energy per unit density)."""
    nu = collision_rate(params, bg, S)
    return 2.0 / 3.0 * nu * float(energy_bracket(state.u, state.T, effective_coefficient(params), bg))


def temperature_rhs(state: OdeState, params: ModelParams, bg: BackgroundState, S: float) -> float:
    """(4 nu / 9) [a^2 (3T + 3T1 + |u - u1|^2) - 3aT]; the |u|^2 terms of D cancel."""
    nu = collision_rate(params, bg, S)
    return 4.0 / 9.0 * nu * _temperature_bracket(state.u, state.T, effective_coefficient(params), bg)


def _temperature_bracket(u, T, a, bg):
    d = np.asarray(u, dtype=float) - bg.u1
    rel2 = np.sum(d * d, axis=-1)
    return a * a * (3.0 * T + 3.0 * bg.T1 + rel2) - 3.0 * a * T


def relaxation_rates(params: ModelParams, bg: BackgroundState, S: float) -> tuple[float, float]:
    """(kappa1, kappaT): decay rates of u - u1 and of T - T_eq at u = u1."""
    nu = collision_rate(params, bg, S)
    a = effective_coefficient(params)
    return 2.0 / 3.0 * nu * a, 4.0 / 3.0 * nu * a * (1.0 - a)


def fixed_point(params: ModelParams, bg: BackgroundState, closure: SClosure | None = None) -> OdeState:
    """(u1, a T1 / (1 - a)); S only rescales time, so the closure does not matter."""
    a = effective_coefficient(params)
    if a >= 1.0:
        raise DomainError(f"no finite equilibrium for effective coefficient a = {a!r} >= 1")
    return OdeState(bg.u1, model_fixed_point_temperature(a, bg.T1))


@dataclass
class Trajectory:
    t: np.ndarray
    u: np.ndarray
    T: np.ndarray
    S: np.ndarray

    def state(self, i: int) -> OdeState:
        return OdeState(self.u[i], float(self.T[i]), float(self.t[i]))


def _rhs(y: np.ndarray, params, bg, closure, a: float) -> tuple[np.ndarray, float]:
    u, T = y[:3], y[3]
    S = evaluate_S(closure, MomentState(1.0, u, max(T, 0.0)), bg)
    nu = collision_rate(params, bg, S)
    out = np.empty(4)
    out[:3] = -2.0 / 3.0 * nu * a * (u - bg.u1)
    out[3] = 4.0 / 9.0 * nu * _temperature_bracket(u, T, a, bg)
    return out, S


def integrate(
    state0: OdeState,
    params: ModelParams,
    bg: BackgroundState,
    closure: SClosure,
    dt: float,
    t_end: float,
    output_interval: float | None = None,
) -> Trajectory:
    """Fixed-step classical RK4; S is re-evaluated at every stage.

    Raises :class:`StepSizeError` if a step drives T below -1e-12 instead of
    clamping it.
    """
    if not dt > 0:
        raise ParameterError("ode.dt", f"must be > 0, got {dt!r}")
    n_steps = _whole_steps(t_end, dt, "ode.t_end")
    stride = n_steps if output_interval is None else _whole_steps(output_interval, dt, "ode.output_interval")
    stride = max(stride, 1)
    a = effective_coefficient(params)
    y = np.concatenate([state0.u, [state0.T]]).astype(float)
    t0 = state0.t

    ts, ys, Ss = [t0], [y.copy()], [_rhs(y, params, bg, closure, a)[1]]
    for step in range(n_steps):
        k1, _ = _rhs(y, params, bg, closure, a)
        k2, _ = _rhs(y + 0.5 * dt * k1, params, bg, closure, a)
        k3, _ = _rhs(y + 0.5 * dt * k2, params, bg, closure, a)
        k4, _ = _rhs(y + dt * k3, params, bg, closure, a)
        y = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if y[3] < -NEGATIVE_T_TOLERANCE:
            raise StepSizeError(f"temperature went negative ({y[3]:.3e}) at t={t0 + (step + 1) * dt:.6g}; reduce ode.dt")
        if (step + 1) % stride == 0 or step + 1 == n_steps:
            ts.append(t0 + (step + 1) * dt)
            ys.append(y.copy())
            Ss.append(_rhs(y, params, bg, closure, a)[1])
    Y = np.array(ys)
    return Trajectory(np.array(ts), Y[:, :3], Y[:, 3], np.array(Ss))


def _whole_steps(span: float, dt: float, name: str) -> int:
    n = round(span / dt)
    if n < 0 or abs(n * dt - span) > 1e-9 * max(span, dt):
        raise ParameterError(name, f"{span!r} is not a whole number of steps of dt={dt!r}")
    return int(n)


def _exp_gap(x, y, t):
    """(exp(-x t) - exp(-y t)) / (y - x), stable as y - x -> 0."""
    d = y - x
    dt_ = d * t
    small = np.abs(dt_) < 1e-3
    safe_d = np.where(small, 1.0, d)
    direct = (np.exp(-x * t) - np.exp(-y * t)) / safe_d
    safe_dt = np.where(dt_ == 0, 1.0, dt_)
    series = np.exp(-y * t) * t * np.where(dt_ == 0, 1.0, np.expm1(safe_dt) / safe_dt)
    return np.where(small, series, direct)


def frozen_rate_solution(u0, T0, nu, a: float, bg: BackgroundState, t):
    """Exact (u, T) after time ``t`` at a fixed collision frequency ``nu``.

    Vectorised: ``u0`` is (..., 3) and ``T0``, ``nu``, ``t`` broadcast against
    the leading axes. With nu fixed the system is linear; u relaxes
    exponentially and T obeys a linear equation forced by |u - u1|^2, which
    decays at twice the momentum rate.
    """
    u0 = np.asarray(u0, dtype=float)
    nu = np.asarray(nu, dtype=float)
    t = np.asarray(t, dtype=float)
    k1 = 2.0 / 3.0 * nu * a
    kT = 4.0 / 3.0 * nu * a * (1.0 - a)
    c = 4.0 / 9.0 * nu
    d0 = u0 - bg.u1
    u = bg.u1 + d0 * np.exp(-k1 * t)[..., None]
    T_inf = model_fixed_point_temperature(a, bg.T1)
    forced = c * a * a * np.sum(d0 * d0, axis=-1) * _exp_gap(2.0 * k1, kT, t)
    T = T_inf + (np.asarray(T0, dtype=float) - T_inf) * np.exp(-kT * t) + forced
    return u, T


def constant_S_solution(state0: OdeState, params: ModelParams, bg: BackgroundState, S: float, t) -> tuple:
    """Closed-form (u(t), T(t)) for constant S, evaluated at the times ``t``."""
    nu = collision_rate(params, bg, S)
    a = effective_coefficient(params)
    if not nu * a * (1.0 - a) > 0:
        raise DomainError("closed form needs a finite, non-zero collision rate")
    t = np.asarray(t, dtype=float)
    u0 = np.broadcast_to(state0.u, t.shape + (3,))
    return frozen_rate_solution(u0, np.full(t.shape, state0.T), np.full(t.shape, nu), a, bg, t)
