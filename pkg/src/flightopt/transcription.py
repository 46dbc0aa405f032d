"""Forward-Euler direct transcription of the fixed-horizon flight problem.

Decision vector layout: all states first, then all controls::

    z = [X_0, X_1, ..., X_N, U_0, ..., U_{N-1}]      n = 5 (N + 1) + 2 N

Equality constraints, in order: ``5 N`` Euler defects, 5 initial-state rows,
and 2 terminal-position rows.  Terminal speed, mass and heading are only
bounded.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .dynamics import (NU, NX, AircraftParams, State, rhs, state_jacobians, trim_thrust,
                       weighted_hessian)

log = logging.getLogger(__name__)

STATE_NAMES = ("x", "y", "v", "m", "theta")
CONTROL_NAMES = ("thrust", "turn_rate")

# characteristic magnitudes used to scale variables and defect rows
STATE_SCALE = np.array([1e3, 1e3, 1e2, 1e4, 1.0])
CONTROL_SCALE = np.array([1e5, 1e-3])

TIME_FOCUS = "time"
FUEL_FOCUS = "fuel"


def time_weights():
    """Default ``(Q, R)`` for the time-focus objective."""
    return np.diag([1e-2, 1e-2, 0.0, 0.0, 0.0]), np.diag([1e-10, 1e2])


def fuel_weights():
    """Default ``(Q, R)`` for the fuel-focus objective (used with ``w_fuel = 1``)."""
    return np.diag([1e-4, 1e-4, 0.0, 0.0, 0.0]), np.diag([1e-10, 1e2])


def _as_array(v, size, name):
    a = np.array(v, dtype=float).reshape(-1)
    if a.shape != (size,):
        raise ValueError(f"{name} must have {size} entries, got {a.size}")
    return a


@dataclass(frozen=True)
class CftocProblem:
    n_steps: int
    dt: float
    x0: State
    xf: State
    x_lb: np.ndarray
    x_ub: np.ndarray
    u_lb: np.ndarray
    u_ub: np.ndarray
    Q: np.ndarray = field(default_factory=lambda: time_weights()[0])
    R: np.ndarray = field(default_factory=lambda: time_weights()[1])
    objective_mode: str = TIME_FOCUS
    w_fuel: float = 0.0
    terminal_slack: float = 1.0

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("x0", State(*_as_array(self.x0, NX, "x0")))
        set_("xf", State(*_as_array(self.xf, NX, "xf")))
        for name, size in (("x_lb", NX), ("x_ub", NX), ("u_lb", NU), ("u_ub", NU)):
            set_(name, _as_array(getattr(self, name), size, name))
        set_("Q", np.array(self.Q, dtype=float).reshape(NX, NX))
        set_("R", np.array(self.R, dtype=float).reshape(NU, NU))

        if int(self.n_steps) != self.n_steps or self.n_steps < 2:
            raise ValueError(f"n_steps must be an integer >= 2, got {self.n_steps!r}")
        set_("n_steps", int(self.n_steps))
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        for lb, ub, names, kind in ((self.x_lb, self.x_ub, STATE_NAMES, "state"),
                                    (self.u_lb, self.u_ub, CONTROL_NAMES, "control")):
            for j, name in enumerate(names):
                if lb[j] > ub[j]:
                    raise ValueError(f"{kind} bound for {name}: lower {lb[j]} > upper {ub[j]}")
        for label, s in (("x0", self.x0), ("xf", self.xf)):
            for j, name in enumerate(STATE_NAMES):
                if not self.x_lb[j] <= s[j] <= self.x_ub[j]:
                    raise ValueError(
                        f"{label}.{name} = {s[j]} outside bounds [{self.x_lb[j]}, {self.x_ub[j]}]"
                    )
        if not np.allclose(self.Q, self.Q.T) or np.linalg.eigvalsh(self.Q).min() < -1e-12:
            raise ValueError("Q must be symmetric positive semidefinite")
        if not np.allclose(self.R, self.R.T) or np.linalg.eigvalsh(self.R).min() <= 0:
            raise ValueError("R must be symmetric positive definite")
        if self.objective_mode not in (TIME_FOCUS, FUEL_FOCUS):
            raise ValueError(f"objective_mode must be 'time' or 'fuel', got {self.objective_mode!r}")
        if not self.terminal_slack > 0:
            raise ValueError("terminal_slack must be positive")

    @property
    def horizon(self) -> float:
        """Total horizon in seconds."""
        return self.n_steps * self.dt


@dataclass(frozen=True)
class DecisionLayout:
    n_steps: int

    @property
    def n(self) -> int:
        return NX * (self.n_steps + 1) + NU * self.n_steps

    @property
    def n_state_vars(self) -> int:
        return NX * (self.n_steps + 1)

    def state_index(self, k, j):
        return NX * k + j

    def control_index(self, k, j):
        return self.n_state_vars + NU * k + j

    def split(self, z):
        z = np.asarray(z)
        if z.shape != (self.n,):
            raise ValueError(f"decision vector must have shape ({self.n},), got {z.shape}")
        X = z[: self.n_state_vars].reshape(self.n_steps + 1, NX)
        U = z[self.n_state_vars:].reshape(self.n_steps, NU)
        return X, U

    def pack(self, X, U):
        return np.concatenate([np.asarray(X, float).reshape(-1), np.asarray(U, float).reshape(-1)])


def _jacobian_pattern(N, layout):
    rows, cols = [], []
    # defect k: dense 5x5 on X_k, 5x2 on U_k, identity on X_{k+1}
    r = np.arange(NX)
    for k in range(N):
        base = NX * k
        rr, cc = np.meshgrid(base + r, layout.state_index(k, 0) + r, indexing="ij")
        rows.append(rr.ravel())
        cols.append(cc.ravel())
        rr, cc = np.meshgrid(base + r, layout.control_index(k, 0) + np.arange(NU), indexing="ij")
        rows.append(rr.ravel())
        cols.append(cc.ravel())
        rows.append(base + r)
        cols.append(layout.state_index(k + 1, 0) + r)
    rows.append(NX * N + r)
    cols.append(r)
    rows.append(NX * N + NX + np.arange(2))
    cols.append(layout.state_index(N, 0) + np.arange(2))
    return np.concatenate(rows), np.concatenate(cols)


class NlpInstance:
    """Immutable NLP built from a :class:`CftocProblem`; see :func:`build`."""

    def __init__(self, problem: CftocProblem, wind, params: AircraftParams):
        self.problem = problem
        self.wind = wind
        self.params = params
        N = problem.n_steps
        self.layout = DecisionLayout(N)
        self.n = self.layout.n
        self.m = NX * N + NX + 2

        self.lb = self.layout.pack(np.tile(problem.x_lb, (N + 1, 1)), np.tile(problem.u_lb, (N, 1)))
        self.ub = self.layout.pack(np.tile(problem.x_ub, (N + 1, 1)), np.tile(problem.u_ub, (N, 1)))
        self.x_scale = self.layout.pack(np.tile(STATE_SCALE, (N + 1, 1)), np.tile(CONTROL_SCALE, (N, 1)))
        self.c_scale = np.concatenate([
            np.tile(STATE_SCALE, N + 1),
            STATE_SCALE[:2],
        ])
        self.jac_rows, self.jac_cols = _jacobian_pattern(N, self.layout)
        self._xf = np.asarray(problem.xf, dtype=float)
        self._x0 = np.asarray(problem.x0, dtype=float)
        self._eye = np.eye(NX)
        idx = np.array([[self.layout.state_index(k, j) for j in range(NX)]
                        + [self.layout.control_index(k, j) for j in range(NU)] for k in range(N)])
        self._hess_rows = np.repeat(idx, NX + NU, axis=1).ravel()
        self._hess_cols = np.tile(idx, (1, NX + NU)).ravel()

    def split(self, z):
        return self.layout.split(z)

    def objective(self, z) -> float:
        X, U = self.split(z)
        p = self.problem
        dX = X[:-1] - self._xf
        val = np.einsum("ki,ij,kj->", dX, p.Q, dX) + np.einsum("ki,ij,kj->", U, p.R, U)
        if p.objective_mode == FUEL_FOCUS:
            val += p.w_fuel * (self._x0[3] - X[-1, 3])
        return float(val)

    def objective_gradient(self, z) -> np.ndarray:
        X, U = self.split(z)
        p = self.problem
        gX = np.zeros_like(X)
        gX[:-1] = (X[:-1] - self._xf) @ (p.Q + p.Q.T)
        gU = U @ (p.R + p.R.T)
        if p.objective_mode == FUEL_FOCUS:
            gX[-1, 3] -= p.w_fuel
        return self.layout.pack(gX, gU)

    def objective_hessian(self, z=None) -> sp.csr_matrix:
        """Constant Hessian of the quadratic objective."""
        p = self.problem
        N = p.n_steps
        Qs = p.Q + p.Q.T
        blocks = [Qs] * N + [np.zeros((NX, NX))] + [p.R + p.R.T] * N
        return sp.block_diag(blocks, format="csr")

    def constraints(self, z) -> np.ndarray:
        X, U = self.split(z)
        f = rhs(X[:-1], U, self.wind, self.params)
        defects = X[1:] - X[:-1] - self.problem.dt * f
        return np.concatenate([
            defects.ravel(),
            X[0] - self._x0,
            X[-1, :2] - self._xf[:2],
        ])

    def constraint_jacobian(self, z) -> sp.csr_matrix:
        X, U = self.split(z)
        dt = self.problem.dt
        A, B = state_jacobians(X[:-1], U, self.wind, self.params)
        N = self.problem.n_steps
        blocks_x = -self._eye - dt * A                       # (N, 5, 5)
        blocks_u = -dt * B                                   # (N, 5, 2)
        per_step = np.concatenate(
            [blocks_x.reshape(N, -1), blocks_u.reshape(N, -1), np.ones((N, NX))], axis=1
        )
        vals = np.concatenate([per_step.ravel(), np.ones(NX + 2)])
        return sp.csr_matrix((vals, (self.jac_rows, self.jac_cols)), shape=(self.m, self.n))

    def constraint_hessian(self, z, v) -> sp.csr_matrix:
        """``sum_i v_i * Hessian(c_i)``; only the defect rows are nonlinear."""
        X, U = self.split(z)
        N = self.problem.n_steps
        w = np.asarray(v, dtype=float)[: NX * N].reshape(N, NX)
        blocks = -self.problem.dt * weighted_hessian(X[:-1], U, self.wind, self.params, w)
        return sp.csr_matrix((blocks.ravel(), (self._hess_rows, self._hess_cols)),
                             shape=(self.n, self.n))

    def initial_guess(self):
        return initial_guess(self.problem, self.params)


def build(problem: CftocProblem, wind, params: AircraftParams) -> NlpInstance:
    """Transcribe ``problem`` under ``wind`` (None for calm air) and ``params``."""
    return NlpInstance(problem, wind, params)


def initial_guess(problem: CftocProblem, params: AircraftParams) -> np.ndarray:
    """Straight-line, constant-speed warm start at trim thrust."""
    N = problem.n_steps
    x0 = np.asarray(problem.x0, float)
    xf = np.asarray(problem.xf, float)
    s = np.linspace(0.0, 1.0, N + 1)[:, None]
    X = np.empty((N + 1, NX))
    X[:, [0, 1, 3]] = x0[[0, 1, 3]] + s * (xf[[0, 1, 3]] - x0[[0, 1, 3]])
    v_guess = 0.5 * (x0[2] + xf[2])
    X[:, 2] = v_guess
    dx, dy = xf[0] - x0[0], xf[1] - x0[1]
    if dx == 0 and dy == 0:
        heading = x0[4]
    else:
        heading = math.atan2(dy, dx)
        heading += 2 * math.pi * round((x0[4] - heading) / (2 * math.pi))
    X[:, 4] = heading
    U = np.empty((N, NU))
    U[:, 0] = trim_thrust(v_guess, params)
    U[:, 1] = 0.0

    layout = DecisionLayout(N)
    z = layout.pack(X, U)
    lb = layout.pack(np.tile(problem.x_lb, (N + 1, 1)), np.tile(problem.u_lb, (N, 1)))
    ub = layout.pack(np.tile(problem.x_ub, (N + 1, 1)), np.tile(problem.u_ub, (N, 1)))
    clipped = np.clip(z, lb, ub)
    n_clipped = int(np.count_nonzero(clipped != z))
    if n_clipped:
        log.info("initial guess: %d entries clipped to bounds", n_clipped)
    return clipped
