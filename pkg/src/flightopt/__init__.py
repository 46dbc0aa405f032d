"""Wind-aware flight trajectory optimization on a projected plane.

Modules
-------
geo            Mercator projection to a km grid centred on the departure point
wind           polynomial wind fields: evaluation, derivatives, least-squares fit
dynamics       2D point-mass aircraft model, Euler / RK4 steps, Jacobians
transcription  forward-Euler direct transcription into a sparse NLP
solver         augmented-Lagrangian NLP solver and minimum-time horizon search
sim            replay, trajectory metrics, recorded-track comparison
scenario       JSON scenario files
cli            ``flightopt`` command line
"""

from .dynamics import AircraftParams, Control, State, euler_step, rk4_step, simulate
from .errors import (ConfigError, DataError, DomainError, FitError, FlightOptError,
                     InfeasibleError)
from .geo import GeoPoint, PlanePoint, Projection, project, unproject
from .sim import TrackPoint, TrajectoryMetrics, load_tracks, metrics, replay
from .solver import SolveResult, SolverOptions, kkt_residuals, solve, solve_min_time
from .transcription import CftocProblem, NlpInstance, build, initial_guess
from .wind import PolynomialWindField, WindSample, average_slots, fit, ingest_csv

__version__ = "0.1.0"

__all__ = [
    "AircraftParams", "CftocProblem", "ConfigError", "Control", "DataError", "DomainError",
    "FitError", "FlightOptError", "GeoPoint", "InfeasibleError", "NlpInstance", "PlanePoint",
    "PolynomialWindField", "Projection", "SolveResult", "SolverOptions", "State", "TrackPoint",
    "TrajectoryMetrics", "WindSample", "average_slots", "build", "euler_step", "fit",
    "ingest_csv", "initial_guess", "kkt_residuals", "load_tracks", "metrics", "project",
    "replay", "rk4_step", "simulate", "solve", "solve_min_time", "unproject",
]
