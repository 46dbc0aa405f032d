#!/usr/bin/env python3
"""Same route and horizon, two objectives: track the destination, or save fuel."""

from importlib import resources

import numpy as np

from flightopt.scenario import Scenario, load
from flightopt.solver import solve
from flightopt.transcription import build

base = load(resources.files("flightopt") / "data" / "ord_sfo_wind.json").to_dict()

for mode in ("time", "fuel"):
    sc = Scenario.from_dict({**base, "horizon": {"n_steps": 35, "hours": 4.0},
                             "weights": {"objective_mode": mode}})
    wind, params = sc.load_wind(), sc.aircraft_params()
    inst = build(sc.problem(), wind, params)
    res = solve(inst, inst.initial_guess(), sc.solver_options())
    X, U = inst.split(res.z)
    print(f"{mode:>4}: {res.status}, fuel {X[0, 3] - X[-1, 3]:7.1f} kg, "
          f"speed {X[:, 2].min():.0f}..{X[:, 2].max():.0f} m/s, "
          f"mean thrust {U[:, 0].mean() / 1e3:.1f} kN")
