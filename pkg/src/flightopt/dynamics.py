"""Planar point-mass aircraft model with turn-rate input.

State ``(x, y, v, m, theta)``: position in km, speed in m/s, mass in kg and
unwrapped heading in rad (east = 0, counter-clockwise positive).
Control ``(thrust, turn_rate)`` in N and rad/s.  Wind enters the kinematics
additively; since positions are kept in km the horizontal rates carry a
factor 1/1000.

The array functions (:func:`vector_field`, :func:`state_jacobians`) take
stacked states of shape ``(..., 5)`` and are what the transcription uses;
the NamedTuple wrappers are for single-point work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .wind import evaluate as wind_at
from .wind import hessian as wind_hessian
from .wind import jacobian as wind_jacobian

KM = 1.0e-3  # km per metre
NX, NU = 5, 2


class State(NamedTuple):
    x: float
    y: float
    v: float
    m: float
    theta: float


class Control(NamedTuple):
    thrust: float
    turn_rate: float


class Derivative(NamedTuple):
    """Time derivative of a :class:`State`; ``dx, dy`` are in km/s."""

    dx: float
    dy: float
    dv: float
    dm: float
    dtheta: float


@dataclass(frozen=True)
class AircraftParams:
    """A320-class placeholders; every field can be overridden."""

    cd: float = 0.025
    rho: float = 0.38
    area: float = 122.6
    eta: float = 1.6e-5
    g: float = 9.81
    m_dry: float = 55000.0

    def __post_init__(self):
        for name in ("cd", "rho", "area", "eta", "g", "m_dry"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"aircraft parameter {name} must be positive, got {value!r}")

    @property
    def drag_factor(self) -> float:
        """``C_d * rho * A``; drag force is ``0.5 * drag_factor * v**2``."""
        return self.cd * self.rho * self.area

    def drag(self, v):
        return 0.5 * self.drag_factor * np.square(v)


def wind_along(X, wind):
    """Wind (m/s) at the positions of stacked states; zeros when ``wind`` is None."""
    X = np.asarray(X, dtype=float)
    if wind is None:
        return np.zeros(X.shape[:-1] + (2,))
    wx, wy = wind_at(wind, (X[..., 0], X[..., 1]))
    return np.stack([np.asarray(wx), np.asarray(wy)], axis=-1)


def vector_field(X, U, W, params: AircraftParams) -> np.ndarray:
    """Right-hand side for stacked states ``X (..., 5)``, controls ``U (..., 2)``
    and wind ``W (..., 2)``."""
    X = np.asarray(X, dtype=float)
    U = np.asarray(U, dtype=float)
    W = np.asarray(W, dtype=float)
    v, m, th = X[..., 2], X[..., 3], X[..., 4]
    thrust, rate = U[..., 0], U[..., 1]
    f = np.empty(np.broadcast_shapes(X.shape, U.shape[:-1] + (NX,)))
    f[..., 0] = (v * np.cos(th) + W[..., 0]) * KM
    f[..., 1] = (v * np.sin(th) + W[..., 1]) * KM
    f[..., 2] = (2.0 * thrust - params.drag_factor * v * v) / (2.0 * m)
    f[..., 3] = -params.eta * thrust
    f[..., 4] = rate
    return f


def rhs(X, U, wind, params):
    """Vector field with the wind evaluated at each state's position."""
    return vector_field(X, U, wind_along(X, wind), params)


def state_jacobians(X, U, wind, params):
    """Analytic ``A = df/dX`` (..., 5, 5) and ``B = df/dU`` (..., 5, 2),
    including the wind-gradient terms through ``x`` and ``y``."""
    X = np.asarray(X, dtype=float)
    U = np.asarray(U, dtype=float)
    shape = X.shape[:-1]
    v, m, th = X[..., 2], X[..., 3], X[..., 4]
    thrust = U[..., 0]
    k = params.drag_factor
    c, s = np.cos(th), np.sin(th)

    A = np.zeros(shape + (NX, NX))
    if wind is not None:
        Jw = wind_jacobian(wind, (X[..., 0], X[..., 1]))
        A[..., 0:2, 0:2] = Jw * KM
    A[..., 0, 2] = c * KM
    A[..., 1, 2] = s * KM
    A[..., 0, 4] = -v * s * KM
    A[..., 1, 4] = v * c * KM
    A[..., 2, 2] = -k * v / m
    A[..., 2, 3] = -(2.0 * thrust - k * v * v) / (2.0 * m * m)

    B = np.zeros(shape + (NX, NU))
    B[..., 2, 0] = 1.0 / m
    B[..., 3, 0] = -params.eta
    B[..., 4, 1] = 1.0
    return A, B


def weighted_hessian(X, U, wind, params, weights):
    """``sum_j weights[..., j] * d2 f_j / d(X, U)^2`` as a ``(..., 7, 7)`` array
    over the stacked variables ``(x, y, v, m, theta, thrust, turn_rate)``."""
    X = np.asarray(X, dtype=float)
    U = np.asarray(U, dtype=float)
    w = np.asarray(weights, dtype=float)
    v, m, th = X[..., 2], X[..., 3], X[..., 4]
    thrust = U[..., 0]
    k = params.drag_factor
    c, s = np.cos(th), np.sin(th)
    H = np.zeros(X.shape[:-1] + (NX + NU, NX + NU))
    if wind is not None:
        Hw = wind_hessian(wind, (X[..., 0], X[..., 1]))
        H[..., 0:2, 0:2] = (w[..., 0, None, None] * Hw[..., 0, :, :]
                            + w[..., 1, None, None] * Hw[..., 1, :, :]) * KM
    # horizontal kinematics
    vth = (-w[..., 0] * s + w[..., 1] * c) * KM
    H[..., 2, 4] = H[..., 4, 2] = vth
    H[..., 4, 4] = -v * (w[..., 0] * c + w[..., 1] * s) * KM
    # speed equation
    w2 = w[..., 2]
    H[..., 2, 2] = -w2 * k / m
    H[..., 2, 3] = H[..., 3, 2] = w2 * k * v / (m * m)
    H[..., 3, 3] = w2 * (2.0 * thrust - k * v * v) / m**3
    H[..., 3, 5] = H[..., 5, 3] = -w2 / (m * m)
    return H


def continuous_dynamics(s, u, w, params: AircraftParams) -> Derivative:
    if not s[3] > 0:
        raise DomainError(f"mass must be positive, got {s[3]!r}")
    return Derivative(*vector_field(np.asarray(s), np.asarray(u), np.asarray(w), params).tolist())


def jacobians(s, u, wind, params: AircraftParams):
    if not s[3] > 0:
        raise DomainError(f"mass must be positive, got {s[3]!r}")
    return state_jacobians(np.asarray(s, float), np.asarray(u, float), wind, params)


def _checked(x_next, params):
    if x_next[3] < params.m_dry:
        raise DomainError(
            f"mass {x_next[3]:.3f} kg fell below the dry-mass limit {params.m_dry:.1f} kg"
        )
    return State(*x_next.tolist())


def _check_step(s, dT):
    if not dT > 0:
        raise DomainError(f"time step must be positive, got {dT!r}")
    if not s[3] > 0:
        raise DomainError(f"mass must be positive, got {s[3]!r}")


def euler_step(s, u, wind, dT: float, params: AircraftParams) -> State:
    """``s + dT * f(s, u, w(s))``."""
    _check_step(s, dT)
    x = np.asarray(s, dtype=float)
    return _checked(x + dT * rhs(x, np.asarray(u, float), wind, params), params)


def rk4_step(s, u, wind, dT: float, params: AircraftParams) -> State:
    """Classical Runge-Kutta step with the control held over the interval."""
    _check_step(s, dT)
    x = np.asarray(s, dtype=float)
    u = np.asarray(u, dtype=float)
    k1 = rhs(x, u, wind, params)
    k2 = rhs(x + 0.5 * dT * k1, u, wind, params)
    k3 = rhs(x + 0.5 * dT * k2, u, wind, params)
    k4 = rhs(x + dT * k3, u, wind, params)
    return _checked(x + dT / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), params)


def simulate(s0, controls, wind, dT: float, params: AircraftParams, stepper=euler_step) -> np.ndarray:
    """Roll ``s0`` forward under ``controls``; returns an ``(N + 1, 5)`` array."""
    controls = np.asarray(controls, dtype=float).reshape(-1, NU)
    if len(controls) == 0:
        raise ValueError("simulate needs at least one control")
    traj = np.empty((len(controls) + 1, NX))
    traj[0] = s0
    for k, u in enumerate(controls):
        try:
            traj[k + 1] = stepper(traj[k], u, wind, dT, params)
        except DomainError as exc:
            raise DomainError(f"step {k}: {exc}") from exc
    return traj


def bank_angle(v, turn_rate, params: AircraftParams):
    """Bank angle that produces ``turn_rate`` at speed ``v`` in a coordinated turn."""
    if np.any(np.asarray(v) <= 0):
        raise DomainError(f"speed must be positive, got {v!r}")
    return np.arctan(np.asarray(v) * np.asarray(turn_rate) / params.g)


def trim_thrust(v, params: AircraftParams):
    """Thrust that balances drag at speed ``v``."""
    return params.drag(v)
