"""Scenario files: one JSON document describing a complete optimization run.

Unknown keys are rejected at every nesting level and every value is checked
against the invariants of the objects it feeds (projection, aircraft
parameters, bounds, weights, solver options) when the scenario is loaded.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .dynamics import AircraftParams, State
from .errors import ConfigError
from .geo import GeoPoint, Projection, chord_heading, project
from .solver import SolverOptions
from .transcription import FUEL_FOCUS, TIME_FOCUS, CftocProblem, fuel_weights, time_weights
from .wind import PolynomialWindField, average_slots, fit, ingest_csv

SCENARIO_VERSION = 1


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GeoSpec(_Strict):
    lon: float
    lat: float


class DepartureSpec(_Strict):
    v0: float = 230.0
    m0: float = 70000.0
    theta0: Union[float, Literal["auto"]] = "auto"


class ArrivalSpec(_Strict):
    """Target state.  Only ``x, y`` are enforced; ``v, m, theta`` seed the warm start."""

    v: Optional[float] = None          # default: departure speed
    m: Optional[float] = None          # default: departure mass
    theta: Union[float, Literal["auto"]] = "auto"


class AircraftSpec(_Strict):
    cd: float = 0.025
    rho: float = 0.38
    area: float = 122.6
    eta: float = 1.6e-5
    g: float = 9.81
    m_dry: float = 55000.0


class HorizonSpec(_Strict):
    n_steps: int = 35
    hours: Optional[float] = None
    t_range: Optional[tuple[float, float]] = None
    step: float = 0.1

    @model_validator(mode="after")
    def _one_kind(self):
        if (self.hours is None) == (self.t_range is None):
            raise ValueError("horizon needs exactly one of 'hours' (fixed) or 't_range' (search)")
        if self.hours is not None and not self.hours > 0:
            raise ValueError("horizon hours must be positive")
        if self.t_range is not None and not 0 < self.t_range[0] <= self.t_range[1]:
            raise ValueError("t_range must satisfy 0 < lo <= hi")
        if not self.step > 0:
            raise ValueError("horizon step must be positive")
        if self.n_steps < 2:
            raise ValueError("n_steps must be >= 2")
        return self

    @property
    def is_search(self) -> bool:
        return self.t_range is not None


class BoundsSpec(_Strict):
    x_lb: tuple[float, float, float, float, float] = (-6000.0, -3000.0, 120.0, 55000.0, -10.0)
    x_ub: tuple[float, float, float, float, float] = (6000.0, 3000.0, 310.0, 70000.0, 10.0)
    u_lb: tuple[float, float] = (0.0, -0.005)
    u_ub: tuple[float, float] = (1.2e5, 0.005)


class WeightsSpec(_Strict):
    objective_mode: Literal["time", "fuel"] = TIME_FOCUS
    q_diag: Optional[tuple[float, float, float, float, float]] = None   # default per mode
    r_diag: Optional[tuple[float, float]] = None
    w_fuel: Optional[float] = None                                     # default 0 / 1 per mode
    terminal_slack: float = 1.0

    def resolved(self):
        """``(Q, R, w_fuel)`` with mode defaults filled in."""
        Q0, R0 = fuel_weights() if self.objective_mode == FUEL_FOCUS else time_weights()
        Q = np.diag(self.q_diag) if self.q_diag is not None else Q0
        R = np.diag(self.r_diag) if self.r_diag is not None else R0
        w = self.w_fuel if self.w_fuel is not None else (1.0 if self.objective_mode == FUEL_FOCUS else 0.0)
        return Q, R, float(w)


class CsvWindSpec(_Strict):
    kind: Literal["csv"]
    path: str
    basis: Union[Literal["published"], int] = "published"


class CoefficientWindSpec(_Strict):
    kind: Literal["coefficients"]
    a: tuple[float, ...]
    b: tuple[float, ...]
    x_terms: Optional[tuple[tuple[int, int], ...]] = None
    y_terms: Optional[tuple[tuple[int, int], ...]] = None


class SolverSpec(_Strict):
    max_outer: int = 50
    max_inner: int = 200
    tol_feas: float = 1e-6
    tol_stat: float = 1e-6
    penalty_init: float = 10.0
    penalty_growth: float = 10.0
    penalty_max: float = 1e8
    memory: int = 10
    armijo: float = 1e-4
    obj_scale: Optional[float] = None
    obj_grad_target: float = 1e-2
    inner: Literal["newton", "lbfgs"] = "newton"


class Scenario(_Strict):
    version: Literal[1] = SCENARIO_VERSION
    name: str = "scenario"
    origin: GeoSpec
    destination: GeoSpec
    departure: DepartureSpec = Field(default_factory=DepartureSpec)
    arrival: ArrivalSpec = Field(default_factory=ArrivalSpec)
    aircraft: AircraftSpec = Field(default_factory=AircraftSpec)
    horizon: HorizonSpec
    bounds: BoundsSpec = Field(default_factory=BoundsSpec)
    weights: WeightsSpec = Field(default_factory=WeightsSpec)
    wind: Optional[Union[CsvWindSpec, CoefficientWindSpec]] = Field(default=None, discriminator="kind")
    solver: SolverSpec = Field(default_factory=SolverSpec)
    output_dir: Optional[str] = None

    @model_validator(mode="after")
    def _downstream(self):
        # building the runtime objects runs every downstream invariant check
        self.problem()
        self.aircraft_params()
        self.solver_options()
        return self

    # -- runtime objects ------------------------------------------------

    def projection(self) -> Projection:
        return Projection(GeoPoint(self.origin.lon, self.origin.lat))

    def aircraft_params(self) -> AircraftParams:
        return AircraftParams(**self.aircraft.model_dump())

    def solver_options(self) -> SolverOptions:
        return SolverOptions(**self.solver.model_dump())

    def load_wind(self, base_dir=".") -> PolynomialWindField | None:
        """Wind field for this scenario; CSV paths resolve against ``base_dir``."""
        w = self.wind
        if w is None:
            return None
        if w.kind == "coefficients":
            d = {"a": w.a, "b": w.b}
            if w.x_terms is not None:
                d["x_terms"] = w.x_terms
            if w.y_terms is not None:
                d["y_terms"] = w.y_terms
            return PolynomialWindField.from_dict(d)
        path = Path(w.path)
        if not path.is_absolute():
            path = Path(base_dir) / path
        field, _ = fit(average_slots(ingest_csv(path, self.projection())), w.basis)
        return field

    def problem(self, hours: float | None = None) -> CftocProblem:
        """CFTOC problem at ``hours`` (default: the fixed horizon, or the top of the search range)."""
        if hours is None:
            hours = self.horizon.hours if self.horizon.hours is not None else self.horizon.t_range[1]
        proj = self.projection()
        xf, yf = project(GeoPoint(self.destination.lon, self.destination.lat), proj)
        heading = chord_heading((0.0, 0.0), (xf, yf)) if (xf, yf) != (0.0, 0.0) else 0.0
        dep, arr = self.departure, self.arrival
        theta0 = heading if dep.theta0 == "auto" else float(dep.theta0)
        thetaf = heading if arr.theta == "auto" else float(arr.theta)
        thetaf += 2 * math.pi * round((theta0 - thetaf) / (2 * math.pi))
        x0 = State(0.0, 0.0, dep.v0, dep.m0, theta0)
        x_f = State(xf, yf, arr.v if arr.v is not None else dep.v0,
                    arr.m if arr.m is not None else dep.m0, thetaf)
        Q, R, w_fuel = self.weights.resolved()
        N = self.horizon.n_steps
        return CftocProblem(
            n_steps=N,
            dt=float(hours) * 3600.0 / N,
            x0=x0,
            xf=x_f,
            x_lb=self.bounds.x_lb,
            x_ub=self.bounds.x_ub,
            u_lb=self.bounds.u_lb,
            u_ub=self.bounds.u_ub,
            Q=Q,
            R=R,
            objective_mode=self.weights.objective_mode,
            w_fuel=w_fuel,
            terminal_slack=self.weights.terminal_slack,
        )

    # -- (de)serialization ------------------------------------------------

    def to_dict(self) -> dict:
        return self.model_dump(mode="json", exclude_none=True)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        return cls.model_validate(d)


def load(path) -> Scenario:
    """Read and validate a scenario file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read scenario ({exc.strerror or exc})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    try:
        return Scenario.from_dict(data)
    except ValidationError as exc:
        raise ConfigError(f"{path}: invalid scenario\n{exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{path}: invalid scenario: {exc}") from None


def published_wind_spec() -> dict:
    """Inline-coefficient wind block holding the published field."""
    return PolynomialWindField.published().to_dict()
