#!/usr/bin/env python3
"""Optimize through the CLI, then compare the bundle against a recorded track.

The "recorded" track is the optimized path with a lateral offset and GPS-like
noise, written in the track CSV format (acid, t, lon, lat, alt).
"""

import json
import tempfile
from importlib import resources
from pathlib import Path

import numpy as np

from flightopt import cli
from flightopt.bundle import read_trajectory
from flightopt.geo import GeoPoint, Projection, unproject

src = resources.files("flightopt") / "data" / "ord_sfo_nowind.json"
rng = np.random.default_rng(3)

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    scen = json.loads(src.read_text())
    scen["horizon"] = {"n_steps": 35, "hours": 4.0}
    (tmp / "s.json").write_text(json.dumps(scen))
    assert cli.main(["optimize", "--scenario", str(tmp / "s.json"), "--out", str(tmp / "b")]) == 0

    X, _, t = read_trajectory(tmp / "b" / "trajectory.csv")
    proj = Projection(GeoPoint(scen["origin"]["lon"], scen["origin"]["lat"]))
    heading = np.arctan2(X[-1, 1], X[-1, 0])
    offset = 15.0 * np.sin(np.pi * np.linspace(0, 1, len(X)))     # km, zero at both ends
    xy = X[:, :2] + offset[:, None] * [-np.sin(heading), np.cos(heading)]
    xy += rng.normal(0.0, 0.05, xy.shape)
    lon, lat = unproject((xy[:, 0], xy[:, 1]), proj)
    rows = ["acid,t,lon,lat,alt"]
    rows += [f"UAL123,{ti!r},{a!r},{b!r},35000"
             for ti, a, b in zip(t.tolist(), lon.tolist(), lat.tolist())]
    (tmp / "tracks.csv").write_text("\n".join(rows) + "\n")

    code = cli.main(["compare", "--bundle", str(tmp / "b"), "--tracks", str(tmp / "tracks.csv"),
                     "--acid", "UAL123", "--out", str(tmp / "b")])
    assert code == 0
    print(json.dumps(json.loads((tmp / "b" / "compare_UAL123.json").read_text()), indent=2))
