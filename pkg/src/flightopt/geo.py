"""Spherical (pseudo-)Mercator projection onto a local kilometre grid.

Coordinates are projected with the spherical Mercator formulas on the WGS84
semi-major axis and then shifted so the configured origin (normally the
departure airport) maps to ``(0, 0)``.  All planar values are in kilometres.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DomainError

EARTH_RADIUS_KM = 6378.137
MAX_LATITUDE = 85.06


class GeoPoint(NamedTuple):
    lon: float
    lat: float


class PlanePoint(NamedTuple):
    x: float
    y: float


def _check_lat(lat):
    lat = np.asarray(lat, dtype=float)
    bad = ~(np.abs(lat) < MAX_LATITUDE)
    if np.any(bad):
        value = lat[bad].flat[0] if lat.ndim else float(lat)
        raise DomainError(
            f"latitude {value!r} outside the Mercator band (-{MAX_LATITUDE}, {MAX_LATITUDE})"
        )


def _check_lon(lon):
    if not np.all(np.isfinite(lon)):
        raise DomainError(f"longitude must be finite, got {lon!r}")


def _mercator_y(lat_deg):
    return np.log(np.tan(np.pi / 4.0 + np.radians(lat_deg) / 2.0))


@dataclass(frozen=True)
class Projection:
    """Origin-shifted spherical Mercator projection in kilometres."""

    origin: GeoPoint = field(default_factory=lambda: GeoPoint(0.0, 0.0))
    earth_radius: float = EARTH_RADIUS_KM

    def __post_init__(self):
        if not self.earth_radius > 0:
            raise DomainError(f"earth_radius must be positive, got {self.earth_radius!r}")
        object.__setattr__(self, "origin", GeoPoint(float(self.origin[0]), float(self.origin[1])))
        _check_lon(self.origin.lon)
        _check_lat(self.origin.lat)

    def project(self, p):
        return project(p, self)

    def unproject(self, q):
        return unproject(q, self)


def project(p, proj: Projection) -> PlanePoint:
    """Map ``(lon, lat)`` degrees to ``(x, y)`` km east/north of ``proj.origin``.

    Accepts scalars or equally shaped arrays for the two coordinates; the
    result has the same shape.
    """
    lon, lat = p
    lon = np.asarray(lon, dtype=float)
    lat = np.asarray(lat, dtype=float)
    _check_lon(lon)
    _check_lat(lat)
    r = proj.earth_radius
    x = r * np.radians(lon - proj.origin.lon)
    y = r * (_mercator_y(lat) - _mercator_y(proj.origin.lat))
    if x.ndim == 0:
        return PlanePoint(float(x), float(y))
    return PlanePoint(x, y)


def unproject(q, proj: Projection) -> GeoPoint:
    """Exact inverse of :func:`project`."""
    x, y = q
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DomainError("planar coordinates must be finite")
    r = proj.earth_radius
    lon = proj.origin.lon + np.degrees(x / r)
    merc = y / r + _mercator_y(proj.origin.lat)
    lat = np.degrees(2.0 * np.arctan(np.exp(merc)) - np.pi / 2.0)
    if lon.ndim == 0:
        return GeoPoint(float(lon), float(lat))
    return GeoPoint(lon, lat)


def chord_heading(a: PlanePoint, b: PlanePoint) -> float:
    """Heading (rad, east = 0, counter-clockwise) of the segment a -> b."""
    return math.atan2(b[1] - a[1], b[0] - a[0])
