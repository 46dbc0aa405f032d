"""Polynomial wind surfaces: sample ingestion, slot averaging, fitting, evaluation.

A :class:`PolynomialWindField` is a pair of bivariate polynomials in the
projected plane (x, y in km) returning the eastward and northward wind in m/s.
Each component is described by a list of monomial exponents ``(px, py)`` and
a matching coefficient vector.  The default basis is the 13-term / 10-term
layout of the published ORD-SFO fit, constant terms duplicated included.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DataError, DomainError, FitError
from .geo import GeoPoint, Projection, project

MAX_WIND_SPEED = 200.0

# (power of x, power of y) for each coefficient, in published order
PUBLISHED_X_TERMS = (
    (0, 4), (0, 3), (0, 2), (0, 1), (0, 0),
    (4, 0), (3, 0), (2, 0), (1, 0), (0, 0),
    (1, 3), (2, 2), (3, 1),
)
PUBLISHED_Y_TERMS = PUBLISHED_X_TERMS[:10]

PUBLISHED_A = (
    5.404e-12, -7.525e-9, -1.010e-5, 1.8023e-3, 3.054e-1,
    1.071e-12, 8.131e-9, 1.957e-5, 1.360e-2, 3.054e-1,
    -4.493e-13, 1.372e-12, -1.971e-12,
)
# b3 and b4 are typeset ambiguously in the source table; read as negative
PUBLISHED_B = (
    6.505e-12, -2.358e-10, -2.009e-6, -8.207e-6, 6.216,
    -2.184e-12, -1.574e-8, -1.790e-5, 3.587e-2, 6.216,
)


def monomial_terms(degree: int):
    """Full bivariate monomial basis of total degree ``<= degree``."""
    if degree < 0:
        raise ValueError("degree must be non-negative")
    return tuple((i, t - i) for t in range(degree, -1, -1) for i in range(t, -1, -1))


def _design(x, y, terms):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.stack([x**px * y**py for px, py in terms], axis=-1)


def _design_dx(x, y, terms):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.stack([px * x ** max(px - 1, 0) * y**py for px, py in terms], axis=-1)


def _design_dy(x, y, terms):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.stack([py * x**px * y ** max(py - 1, 0) for px, py in terms], axis=-1)


@dataclass(frozen=True)
class PolynomialWindField:
    """Analytic wind field ``(w_x, w_y) = (sum a_i X_i(x, y), sum b_j Y_j(x, y))``."""

    a: np.ndarray = field(default_factory=lambda: np.array(PUBLISHED_A))
    b: np.ndarray = field(default_factory=lambda: np.array(PUBLISHED_B))
    x_terms: tuple = PUBLISHED_X_TERMS
    y_terms: tuple = PUBLISHED_Y_TERMS

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float)
        x_terms = tuple(tuple(int(p) for p in t) for t in self.x_terms)
        y_terms = tuple(tuple(int(p) for p in t) for t in self.y_terms)
        if a.shape != (len(x_terms),) or b.shape != (len(y_terms),):
            raise ValueError(
                f"coefficient counts ({a.size}, {b.size}) do not match basis "
                f"sizes ({len(x_terms)}, {len(y_terms)})"
            )
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("wind coefficients must be finite")
        a.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "x_terms", x_terms)
        object.__setattr__(self, "y_terms", y_terms)

    @classmethod
    def published(cls):
        return cls()

    @classmethod
    def zero(cls, x_terms=PUBLISHED_X_TERMS, y_terms=PUBLISHED_Y_TERMS):
        return cls(np.zeros(len(x_terms)), np.zeros(len(y_terms)), x_terms, y_terms)

    def __call__(self, x, y):
        return evaluate(self, (x, y))

    def __add__(self, other):
        if (self.x_terms, self.y_terms) != (other.x_terms, other.y_terms):
            return NotImplemented
        return replace(self, a=self.a + other.a, b=self.b + other.b)

    @property
    def degree(self) -> int:
        return max(px + py for px, py in self.x_terms + self.y_terms)

    def to_dict(self) -> dict:
        return {
            "kind": "coefficients",
            "a": [float(c) for c in self.a],
            "b": [float(c) for c in self.b],
            "x_terms": [list(t) for t in self.x_terms],
            "y_terms": [list(t) for t in self.y_terms],
        }

    @classmethod
    def from_dict(cls, d: dict):
        return cls(
            d["a"],
            d["b"],
            tuple(map(tuple, d.get("x_terms", PUBLISHED_X_TERMS))),
            tuple(map(tuple, d.get("y_terms", PUBLISHED_Y_TERMS))),
        )


def evaluate(wind: PolynomialWindField, p):
    """Wind ``(w_x, w_y)`` in m/s at planar point(s) ``p = (x, y)`` in km."""
    x, y = p
    wx = _design(x, y, wind.x_terms) @ wind.a
    wy = _design(x, y, wind.y_terms) @ wind.b
    if np.ndim(wx) == 0:
        return float(wx), float(wy)
    return wx, wy


def jacobian(wind: PolynomialWindField, p) -> np.ndarray:
    """Spatial Jacobian ``[[dwx/dx, dwx/dy], [dwy/dx, dwy/dy]]`` in (m/s)/km.

    For array input of shape ``S`` the result has shape ``S + (2, 2)``.
    """
    x, y = p
    jac = np.empty(np.shape(x) + (2, 2))
    jac[..., 0, 0] = _design_dx(x, y, wind.x_terms) @ wind.a
    jac[..., 0, 1] = _design_dy(x, y, wind.x_terms) @ wind.a
    jac[..., 1, 0] = _design_dx(x, y, wind.y_terms) @ wind.b
    jac[..., 1, 1] = _design_dy(x, y, wind.y_terms) @ wind.b
    return jac


def _design_d2(x, y, terms, nx, ny):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    cols = []
    for px, py in terms:
        cx = math.perm(px, nx) if px >= nx else 0
        cy = math.perm(py, ny) if py >= ny else 0
        cols.append(cx * cy * x ** max(px - nx, 0) * y ** max(py - ny, 0))
    return np.stack(cols, axis=-1)


def hessian(wind: PolynomialWindField, p) -> np.ndarray:
    """Second spatial derivatives, shape ``S + (2, 2, 2)`` indexed
    ``[component, d1, d2]`` in (m/s)/km^2."""
    x, y = p
    out = np.empty(np.shape(x) + (2, 2, 2))
    for c, (terms, coef) in enumerate(((wind.x_terms, wind.a), (wind.y_terms, wind.b))):
        out[..., c, 0, 0] = _design_d2(x, y, terms, 2, 0) @ coef
        out[..., c, 1, 1] = _design_d2(x, y, terms, 0, 2) @ coef
        out[..., c, 0, 1] = out[..., c, 1, 0] = _design_d2(x, y, terms, 1, 1) @ coef
    return out


@dataclass(frozen=True)
class WindSample:
    """Gridded wind observation at a projected position."""

    x: float
    y: float
    u: float
    v: float
    slot: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DomainError(f"wind sample position must be finite, got ({self.x}, {self.y})")
        if not (abs(self.u) < MAX_WIND_SPEED and abs(self.v) < MAX_WIND_SPEED):
            raise DomainError(
                f"wind components ({self.u}, {self.v}) exceed the {MAX_WIND_SPEED} m/s sanity bound"
            )
        if self.slot < 0:
            raise DomainError(f"slot index must be >= 0, got {self.slot}")

    @property
    def pos(self):
        return (self.x, self.y)


def average_slots(samples: Sequence[WindSample]) -> list[WindSample]:
    """Collapse samples sharing a position into their mean over time slots.

    Output order follows the first appearance of each position.
    """
    if not samples:
        raise ValueError("average_slots needs at least one sample")
    groups: dict[tuple, list] = {}
    for s in samples:
        groups.setdefault((s.x, s.y), []).append(s)
    out = []
    for (x, y), group in groups.items():
        u = sum(s.u for s in group) / len(group)
        v = sum(s.v for s in group) / len(group)
        out.append(WindSample(x, y, u, v, 0))
    return out


@dataclass(frozen=True)
class FitReport:
    basis: str
    degree: int
    rss_x: float
    rss_y: float
    condition: float
    n_samples: int

    @property
    def rss(self) -> float:
        return self.rss_x + self.rss_y

    def to_dict(self) -> dict:
        return {
            "basis": self.basis,
            "degree": self.degree,
            "rss_x": self.rss_x,
            "rss_y": self.rss_y,
            "rss": self.rss,
            "condition": self.condition,
            "n_samples": self.n_samples,
        }


def _min_norm_lstsq(A, rhs, rank, max_condition):
    # columns are scaled to unit max-norm; identical columns keep identical
    # scales so the minimum-norm split between duplicates stays symmetric
    scale = np.max(np.abs(A), axis=0)
    scale[scale == 0] = 1.0
    As = A / scale
    U, s, Vt = np.linalg.svd(As, full_matrices=False)
    cond = s[0] / s[rank - 1] if s[rank - 1] > 0 else math.inf
    if not cond < max_condition:
        raise FitError(f"design matrix is rank deficient (condition estimate {cond:.3e})")
    coef = Vt[:rank].T @ ((U[:, :rank].T @ rhs) / s[:rank])
    return coef / scale, cond


def fit(samples: Sequence[WindSample], basis="published", max_condition=1e12):
    """Least-squares fit of both wind components.

    Parameters
    ----------
    samples : sequence of WindSample
        Usually the output of :func:`average_slots`.
    basis : "published" or int
        ``"published"`` uses the published 13/10-term layout; an integer selects
        the full monomial basis of that total degree for both components.
    max_condition : float
        Largest acceptable condition estimate of the identifiable part of the
        (column-scaled) design matrix.

    Returns
    -------
    (PolynomialWindField, FitReport)

    The duplicated constant terms of the published basis make the design matrix
    rank deficient by construction; the minimum-norm solution splits the
    constant evenly between them.
    """
    if basis == "published":
        x_terms, y_terms, label = PUBLISHED_X_TERMS, PUBLISHED_Y_TERMS, "published"
    else:
        degree = int(basis)
        x_terms = y_terms = monomial_terms(degree)
        label = f"monomial-{degree}"
    n_terms = max(len(x_terms), len(y_terms))
    if len(samples) < n_terms:
        raise FitError(f"{len(samples)} samples are too few for a {n_terms}-term basis")

    x = np.array([s.x for s in samples])
    y = np.array([s.y for s in samples])
    u = np.array([s.u for s in samples])
    v = np.array([s.v for s in samples])

    Ax = _design(x, y, x_terms)
    Ay = _design(x, y, y_terms)
    a, cond_x = _min_norm_lstsq(Ax, u, len(set(x_terms)), max_condition)
    b, cond_y = _min_norm_lstsq(Ay, v, len(set(y_terms)), max_condition)
    wind = PolynomialWindField(a, b, x_terms, y_terms)
    report = FitReport(
        basis=label,
        degree=wind.degree,
        rss_x=float(np.sum((Ax @ a - u) ** 2)),
        rss_y=float(np.sum((Ay @ b - v) ** 2)),
        condition=float(max(cond_x, cond_y)),
        n_samples=len(samples),
    )
    return wind, report


def degree_sweep(samples, degrees=range(3, 10), max_condition=1e12):
    """Fit full monomial bases over a range of degrees.

    Degrees whose design matrix is too ill-conditioned are skipped.  Returns
    a list of ``(field, report)`` pairs in the order tried.
    """
    out = []
    for d in degrees:
        try:
            out.append(fit(samples, d, max_condition=max_condition))
        except FitError:
            continue
    return out


class _Row(NamedTuple):
    lineno: int
    values: list


def _data_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [(i, line) for i, line in enumerate(fh, start=1)
                 if line.strip() and not line.lstrip().startswith("#")]
    if not lines:
        raise DataError(f"{path}: file is empty")
    reader = csv.reader(line for _, line in lines)
    rows = [_Row(lineno, vals) for (lineno, _), vals in zip(lines, reader)]
    header = [h.strip() for h in rows[0].values]
    return header, rows[1:]


WIND_COLUMNS = ("lon", "lat", "u", "v", "slot")


def ingest_csv(path, proj: Projection) -> list[WindSample]:
    """Read a ``lon,lat,u,v,slot`` CSV and project each row into the plane."""
    header, rows = _data_rows(path)
    missing = [c for c in WIND_COLUMNS if c not in header]
    if missing:
        raise DataError(f"{path}:{1}: missing column(s) {', '.join(missing)}")
    idx = {c: header.index(c) for c in WIND_COLUMNS}
    if not rows:
        raise DataError(f"{path}: no data rows")

    samples = []
    for row in rows:
        try:
            lon = float(row.values[idx["lon"]])
            lat = float(row.values[idx["lat"]])
            u = float(row.values[idx["u"]])
            v = float(row.values[idx["v"]])
            slot = int(row.values[idx["slot"]])
        except (ValueError, IndexError) as exc:
            raise DataError(f"{path}:{row.lineno}: bad field ({exc})") from None
        try:
            x, y = project(GeoPoint(lon, lat), proj)
            samples.append(WindSample(x, y, u, v, slot))
        except DomainError as exc:
            raise DataError(f"{path}:{row.lineno}: {exc}") from None
    return samples
