"""Result bundles: plot-ready files written atomically and byte-for-byte reproducibly.

A bundle directory holds::

    trajectory.csv      one row per node k = 0..N (controls empty on the last row)
    trajectory.geojson  LineString of (lon, lat)
    metrics.json        status, horizon, weights, residuals, trajectory metrics
    solver.log          outer-iteration table
    scenario.json       the scenario that produced it
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import DataError
from .geo import Projection, unproject

TRAJECTORY_COLUMNS = ("k", "t_s", "x_km", "y_km", "lon", "lat", "v_mps", "m_kg",
                      "theta_rad", "T_N", "phi_radps")


def _num(v) -> str:
    # shortest round-trip repr keeps replay exact and output deterministic
    return repr(float(v))


def write_atomic(path, text: str):
    """Write ``text`` to ``path`` via a temporary file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def trajectory_csv(X, U, dt, proj: Projection) -> str:
    X = np.asarray(X, dtype=float)
    U = np.asarray(U, dtype=float)
    lon, lat = unproject((X[:, 0], X[:, 1]), proj)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_COLUMNS)
    for k in range(len(X)):
        ctrl = [_num(U[k, 0]), _num(U[k, 1])] if k < len(U) else ["", ""]
        w.writerow([k, _num(k * dt), _num(X[k, 0]), _num(X[k, 1]), _num(lon[k]), _num(lat[k]),
                    _num(X[k, 2]), _num(X[k, 3]), _num(X[k, 4]), *ctrl])
    return buf.getvalue()


def trajectory_geojson(X, proj: Projection, properties=None) -> str:
    X = np.asarray(X, dtype=float)
    lon, lat = unproject((X[:, 0], X[:, 1]), proj)
    feature = {
        "type": "Feature",
        "geometry": {"type": "LineString",
                     "coordinates": [[float(a), float(b)] for a, b in zip(lon, lat)]},
        "properties": properties or {},
    }
    return dumps_json({"type": "FeatureCollection", "features": [feature]})


def write_bundle(out_dir, files: dict):
    """Write ``{name: text}`` into ``out_dir``; returns the written paths in order."""
    out_dir = Path(out_dir)
    paths = []
    for name in sorted(files):
        write_atomic(out_dir / name, files[name])
        paths.append(out_dir / name)
    return paths


def read_trajectory(path):
    """Read ``trajectory.csv`` back into ``(X (N+1, 5), U (N, 2), t_s (N+1,))``."""
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"{path}: cannot read ({exc.strerror or exc})") from None
    if not rows or tuple(rows[0]) != TRAJECTORY_COLUMNS:
        raise DataError(f"{path}:1: unexpected header")
    X, U, t = [], [], []
    col = {c: i for i, c in enumerate(TRAJECTORY_COLUMNS)}
    for lineno, row in enumerate(rows[1:], start=2):
        try:
            X.append([float(row[col[c]]) for c in ("x_km", "y_km", "v_mps", "m_kg", "theta_rad")])
            t.append(float(row[col["t_s"]]))
            if row[col["T_N"]] != "":
                U.append([float(row[col["T_N"]]), float(row[col["phi_radps"]])])
        except (ValueError, IndexError) as exc:
            raise DataError(f"{path}:{lineno}: bad field ({exc})") from None
    if len(X) < 2 or len(U) != len(X) - 1:
        raise DataError(f"{path}: expected N+1 states and N controls, got {len(X)} and {len(U)}")
    return np.array(X), np.array(U), np.array(t)
