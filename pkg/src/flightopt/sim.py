"""Post-solve checks: control replay, trajectory metrics, recorded-track comparison."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from .dynamics import euler_step, simulate
from .errors import DataError, DomainError
from .geo import GeoPoint, Projection, project
from .transcription import STATE_SCALE, DecisionLayout
from .wind import _data_rows


class TrackPoint(NamedTuple):
    t: float
    lon: float
    lat: float
    alt: float | None = None

    @property
    def pos(self):
        return GeoPoint(self.lon, self.lat)


@dataclass(frozen=True)
class TrajectoryMetrics:
    travel_time_h: float
    fuel_burned_kg: float
    path_length_km: float
    max_cross_track_km: float | None = None
    mean_cross_track_km: float | None = None

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class Replay:
    trajectory: np.ndarray
    max_gap: float                # largest scaled state gap (units of STATE_SCALE)
    component_gap: np.ndarray     # per-component max absolute gap, physical units


def replay(result, problem, wind, params, stepper=euler_step) -> Replay:
    """Re-simulate the optimized controls from the problem's initial state.

    Parameters
    ----------
    result : SolveResult or ndarray
        Solver output, or a bare decision vector.
    problem : CftocProblem
    wind : PolynomialWindField or None
    params : AircraftParams

    Returns
    -------
    Replay
        Simulated states and the largest gap to the optimized states,
        measured in units of the transcription's state scales.
    """
    z = getattr(result, "z", result)
    X, U = DecisionLayout(problem.n_steps).split(np.asarray(z, dtype=float))
    traj = simulate(problem.x0, U, wind, problem.dt, params, stepper=stepper)
    gap = np.max(np.abs(traj - X), axis=0)
    return Replay(traj, float(np.max(gap / STATE_SCALE)), gap)


def _polyline_distance(points, line):
    """Distance of each point in ``points (k, 2)`` to the polyline ``line (n, 2)``."""
    a = line[:-1][None, :, :]
    b = line[1:][None, :, :]
    p = points[:, None, :]
    ab = b - a
    denom = np.sum(ab * ab, axis=-1)
    t = np.where(denom > 0, np.sum((p - a) * ab, axis=-1) / np.where(denom > 0, denom, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[..., None] * ab
    return np.min(np.linalg.norm(p - closest, axis=-1), axis=1)


def cross_track(traj_xy, ref_xy):
    """``(max, mean)`` nearest-point distance of a trajectory to a reference polyline."""
    ref_xy = np.asarray(ref_xy, dtype=float)
    if len(ref_xy) < 2:
        raise DomainError("reference track needs at least 2 points")
    d = _polyline_distance(np.asarray(traj_xy, dtype=float), ref_xy)
    return float(d.max()), float(d.mean())


def metrics(traj, reference, dt, proj: Projection | None = None) -> TrajectoryMetrics:
    """Summary numbers for a state trajectory ``(N + 1, 5)``.

    ``reference`` is either a sequence of :class:`TrackPoint` (projected with
    ``proj``) or an ``(n, 2)`` array of planar km coordinates.
    """
    traj = np.asarray(traj, dtype=float)
    if len(traj) < 2:
        raise DomainError("trajectory needs at least 2 states")
    xy = traj[:, :2]
    path = float(np.sum(np.linalg.norm(np.diff(xy, axis=0), axis=1)))
    out = dict(
        travel_time_h=(len(traj) - 1) * dt / 3600.0,
        fuel_burned_kg=float(traj[0, 3] - traj[-1, 3]),
        path_length_km=path,
    )
    if reference is not None:
        ref = _reference_xy(reference, proj)
        out["max_cross_track_km"], out["mean_cross_track_km"] = cross_track(xy, ref)
    return TrajectoryMetrics(**out)


def _reference_xy(reference, proj):
    if len(reference) and isinstance(reference[0], TrackPoint):
        if proj is None:
            raise ValueError("a projection is needed to compare against geographic tracks")
        lon = np.array([p.lon for p in reference])
        lat = np.array([p.lat for p in reference])
        x, y = project((lon, lat), proj)
        return np.column_stack([x, y])
    return np.asarray(reference, dtype=float).reshape(-1, 2)


TRACK_COLUMNS = ("acid", "t", "lon", "lat")


def load_tracks(path, proj: Projection | None = None) -> dict[str, list[TrackPoint]]:
    """Read an ``acid,t,lon,lat[,alt]`` CSV into time-sorted tracks keyed by flight id.

    When ``proj`` is given every position is also checked to be projectable.
    """
    header, rows = _data_rows(path)
    missing = [c for c in TRACK_COLUMNS if c not in header]
    if missing:
        raise DataError(f"{path}:1: missing column(s) {', '.join(missing)}")
    idx = {c: header.index(c) for c in TRACK_COLUMNS}
    alt_col = header.index("alt") if "alt" in header else None
    tracks: dict[str, list[TrackPoint]] = {}
    for row in rows:
        vals = row.values
        try:
            acid = vals[idx["acid"]].strip()
            t = float(vals[idx["t"]])
            lon = float(vals[idx["lon"]])
            lat = float(vals[idx["lat"]])
            alt_raw = vals[alt_col].strip() if alt_col is not None and alt_col < len(vals) else ""
            alt = float(alt_raw) if alt_raw else None
        except (ValueError, IndexError) as exc:
            raise DataError(f"{path}:{row.lineno}: bad field ({exc})") from None
        if proj is not None:
            try:
                project((lon, lat), proj)
            except DomainError as exc:
                raise DataError(f"{path}:{row.lineno}: {exc}") from None
        if not acid:
            raise DataError(f"{path}:{row.lineno}: empty acid")
        if not (math.isfinite(t) and math.isfinite(lon) and math.isfinite(lat)):
            raise DataError(f"{path}:{row.lineno}: non-finite value")
        tracks.setdefault(acid, []).append(TrackPoint(t, lon, lat, alt))
    if not tracks:
        raise DataError(f"{path}: no track rows")
    return {acid: sorted(points, key=lambda p: p.t) for acid, points in tracks.items()}
