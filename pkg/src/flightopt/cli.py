"""``flightopt`` command line: fit-wind, optimize, compare, replay.

Exit codes: 0 success (converged), 1 usage or configuration error,
2 infeasible or not converged, 3 internal error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import traceback
from pathlib import Path

import numpy as np

from . import bundle, scenario as scenario_mod
from .dynamics import simulate
from .errors import ConfigError, DataError, DomainError, FitError, InfeasibleError
from .geo import GeoPoint, Projection
from .sim import load_tracks, metrics
from .solver import format_log, solve, solve_min_time
from .transcription import STATE_SCALE, build
from .wind import average_slots, fit, ingest_csv

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_INTERNAL = 0, 1, 2, 3
ENV_OUT = "FLIGHTOPT_OUT"
DEFAULT_OUT = "flightopt-out"

log = logging.getLogger("flightopt")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _out_dir(args, fallback=None) -> Path:
    if args.out:
        return Path(args.out)
    if os.environ.get(ENV_OUT):
        return Path(os.environ[ENV_OUT])
    return Path(fallback or DEFAULT_OUT)


def _say(msg):
    print(msg, flush=True)


# -- fit-wind ---------------------------------------------------------------

def _parse_origin(text) -> GeoPoint:
    try:
        lon, lat = (float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"--origin must be 'lon,lat', got {text!r}") from None
    return GeoPoint(lon, lat)


def _parse_basis(text):
    if text == "published":
        return "published"
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"--basis must be 'published' or an integer degree, got {text!r}") from None


def cmd_fit_wind(args) -> int:
    if args.origin:
        origin = _parse_origin(args.origin)
    elif args.scenario:
        sc = scenario_mod.load(args.scenario)
        origin = GeoPoint(sc.origin.lon, sc.origin.lat)
    else:
        raise ConfigError("fit-wind needs --origin or --scenario to fix the projection origin")
    wind_path = Path(args.wind)
    if not wind_path.is_file():
        raise ConfigError(f"{wind_path}: wind file not found")
    proj = Projection(origin)
    samples = average_slots(ingest_csv(wind_path, proj))
    field, report = fit(samples, _parse_basis(args.basis))
    out = _out_dir(args)
    bundle.write_bundle(out, {
        "wind_field.json": bundle.dumps_json(field.to_dict()),
        "fit_report.json": bundle.dumps_json({**report.to_dict(), "origin": list(origin),
                                              "source": wind_path.name}),
    })
    _say(f"fit {report.basis}: {report.n_samples} averaged samples, rss {report.rss:.6g}, "
         f"condition {report.condition:.3e}")
    _say(f"wrote {out / 'wind_field.json'}")
    return EXIT_OK


# -- optimize -------------------------------------------------------------

def _weights_block(problem):
    return {
        "objective_mode": problem.objective_mode,
        "q_diag": [float(v) for v in np.diag(problem.Q)],
        "r_diag": [float(v) for v in np.diag(problem.R)],
        "w_fuel": float(problem.w_fuel),
    }


def _trial_rows(trials):
    return [{"hours": h, "status": r.status, "feas_norm": r.feas_norm,
             "outer_iters": r.outer_iters} for h, r in sorted(trials, key=lambda t: t[0])]


def _frozen_scenario(sc, wind, hours) -> dict:
    """Scenario copy for the bundle: fixed horizon and inline wind coefficients."""
    d = sc.to_dict()
    d["horizon"] = {"n_steps": sc.horizon.n_steps, "hours": float(hours), "step": sc.horizon.step}
    if wind is not None:
        d["wind"] = wind.to_dict()
    d.pop("output_dir", None)
    return d


def cmd_optimize(args) -> int:
    if not args.scenario:
        raise ConfigError("optimize needs --scenario")
    path = Path(args.scenario)
    sc = scenario_mod.load(path)
    wind = sc.load_wind(path.parent)
    params = sc.aircraft_params()
    opts = sc.solver_options()
    out = _out_dir(args, sc.output_dir)
    trials = []

    if sc.horizon.is_search:
        _say(f"searching horizon in [{sc.horizon.t_range[0]:g}, {sc.horizon.t_range[1]:g}] h, "
             f"step {sc.horizon.step:g} h, N = {sc.horizon.n_steps}")
        try:
            hours, result = solve_min_time(sc.problem(), wind, params, sc.horizon.t_range,
                                           sc.horizon.step, opts, jobs=args.jobs, trials=trials)
        except InfeasibleError as exc:
            best = exc.result
            bundle.write_bundle(out, {
                "metrics.json": bundle.dumps_json({
                    "scenario": sc.name, "status": "infeasible", "message": str(exc),
                    "search": {"t_range": list(sc.horizon.t_range), "step": sc.horizon.step,
                               "trials": _trial_rows(trials)},
                }),
                "solver.log": format_log(best.history if best is not None else []),
            })
            _say(f"infeasible: {exc}")
            return EXIT_INFEASIBLE
    else:
        hours = sc.horizon.hours
        inst = build(sc.problem(hours), wind, params)
        result = solve(inst, inst.initial_guess(), opts)

    problem = sc.problem(hours)
    inst = build(problem, wind, params)
    X, U = inst.split(result.z)
    proj = sc.projection()
    traj = simulate(problem.x0, U, wind, problem.dt, params)
    gap = float(np.max(np.abs(traj - X) / STATE_SCALE))
    m = metrics(X, None, problem.dt)
    summary = {
        "scenario": sc.name,
        "status": result.status,
        "horizon_hours": float(hours),
        "n_steps": problem.n_steps,
        "dt_s": problem.dt,
        "weights": _weights_block(problem),
        "objective": result.objective,
        "feas_norm": result.feas_norm,
        "stat_norm": result.stat_norm,
        "compl_norm": result.compl_norm,
        "outer_iters": result.outer_iters,
        "inner_iters": result.inner_iters,
        "penalty": result.penalty,
        "replay_gap_scaled": gap,
        "replay_gap_bound": 10 * opts.tol_feas * problem.n_steps,
        "mass_monotone": bool(np.all(np.diff(X[:, 3]) <= 0)),
        "arrival_miss_km": float(np.hypot(X[-1, 0] - problem.xf.x, X[-1, 1] - problem.xf.y)),
        "wind": "none" if wind is None else "polynomial",
        "metrics": m.to_dict(),
    }
    if sc.horizon.is_search:
        summary["search"] = {"t_range": list(sc.horizon.t_range), "step": sc.horizon.step,
                             "trials": _trial_rows(trials)}
    bundle.write_bundle(out, {
        "trajectory.csv": bundle.trajectory_csv(X, U, problem.dt, proj),
        "trajectory.geojson": bundle.trajectory_geojson(
            X, proj, {"scenario": sc.name, "status": result.status, "horizon_hours": float(hours)}),
        "metrics.json": bundle.dumps_json(summary),
        "solver.log": format_log(result.history),
        "scenario.json": bundle.dumps_json(_frozen_scenario(sc, wind, hours)),
    })
    _say(f"{result.status} at T = {hours:g} h: fuel {m.fuel_burned_kg:.1f} kg, "
         f"path {m.path_length_km:.1f} km, feas {result.feas_norm:.2e}")
    _say(f"wrote bundle to {out}")
    return EXIT_OK if result.converged else EXIT_INFEASIBLE


# -- compare / replay -----------------------------------------------------

def _load_bundle(bundle_dir, scenario_path=None):
    bundle_dir = Path(bundle_dir)
    if not bundle_dir.is_dir():
        raise ConfigError(f"{bundle_dir}: bundle directory not found")
    sc_path = Path(scenario_path) if scenario_path else bundle_dir / "scenario.json"
    sc = scenario_mod.load(sc_path)
    X, U, t = bundle.read_trajectory(bundle_dir / "trajectory.csv")
    return sc, sc_path, X, U, t


def cmd_compare(args) -> int:
    sc, _, X, U, t = _load_bundle(args.bundle, args.scenario)
    proj = sc.projection()
    tracks_path = Path(args.tracks)
    if not tracks_path.is_file():
        raise ConfigError(f"{tracks_path}: track file not found")
    tracks = load_tracks(tracks_path, proj)
    if args.acid not in tracks:
        raise ConfigError(f"unknown acid {args.acid!r}; available: {', '.join(sorted(tracks))}")
    dt = float(t[1] - t[0])
    m = metrics(X, tracks[args.acid], dt, proj)
    rows = [("travel_time_h", m.travel_time_h), ("fuel_burned_kg", m.fuel_burned_kg),
            ("path_length_km", m.path_length_km), ("max_cross_track_km", m.max_cross_track_km),
            ("mean_cross_track_km", m.mean_cross_track_km)]
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        _say(f"{k:<{width}}  {v:14.4f}")
    out = _out_dir(args, args.bundle)
    bundle.write_bundle(out, {f"compare_{args.acid}.json": bundle.dumps_json(
        {"acid": args.acid, "tracks": tracks_path.name, **m.to_dict()})})
    return EXIT_OK


def cmd_replay(args) -> int:
    sc, sc_path, X, U, t = _load_bundle(args.bundle, args.scenario)
    wind = sc.load_wind(sc_path.parent)
    problem = sc.problem(float(t[-1]) / 3600.0)
    if problem.n_steps != len(U):
        raise ConfigError(f"scenario has N = {problem.n_steps} but the trajectory has {len(U)} steps")
    traj = simulate(problem.x0, U, wind, problem.dt, sc.aircraft_params())
    component = np.max(np.abs(traj - X), axis=0)
    gap = float(np.max(component / STATE_SCALE))
    bound = 10 * sc.solver.tol_feas * problem.n_steps
    out = _out_dir(args, args.bundle)
    bundle.write_bundle(out, {"replay.json": bundle.dumps_json({
        "max_gap_scaled": gap,
        "gap_bound": bound,
        "within_bound": gap <= bound,
        "component_gap": dict(zip(("x_km", "y_km", "v_mps", "m_kg", "theta_rad"),
                                  (float(v) for v in component))),
    })})
    _say(f"replay gap {gap:.3e} (bound {bound:.1e})")
    return EXIT_OK


# -- entry point ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="flightopt", description="Wind-aware minimum-time / minimum-fuel flight paths.")
    p.add_argument("--log", help="append a detailed run log to this file")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, scenario_required=False):
        sp.add_argument("--scenario", required=scenario_required, help="scenario JSON file")
        sp.add_argument("--out", help=f"output directory (default: ${ENV_OUT})")
        sp.add_argument("--log", default=argparse.SUPPRESS, help="run log file")

    sp = sub.add_parser("fit-wind", help="fit a polynomial wind field to CSV samples")
    common(sp)
    sp.add_argument("--wind", required=True, help="CSV with lon,lat,u,v,slot")
    sp.add_argument("--origin", help="projection origin as 'lon,lat'")
    sp.add_argument("--basis", default="published", help="'published' or a total degree")
    sp.set_defaults(func=cmd_fit_wind)

    sp = sub.add_parser("optimize", help="solve a scenario and write a result bundle")
    common(sp, scenario_required=True)
    sp.add_argument("--jobs", type=int, default=1, help="parallel solves during horizon search")
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("compare", help="compare a bundle with a recorded track")
    common(sp)
    sp.add_argument("--bundle", required=True)
    sp.add_argument("--tracks", required=True, help="CSV with acid,t,lon,lat,alt")
    sp.add_argument("--acid", required=True, help="flight id within the track file")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("replay", help="re-simulate a bundle's controls and report the gap")
    common(sp)
    sp.add_argument("--bundle", required=True)
    sp.set_defaults(func=cmd_replay)
    return p


def _setup_logging(path):
    if not path:
        return None
    handler = logging.FileHandler(path, encoding="utf-8")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("flightopt")
    root.addHandler(handler)
    root.setLevel(logging.INFO)
    return handler


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        print("flightopt: error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    handler = _setup_logging(getattr(args, "log", None))
    try:
        return args.func(args)
    except (ConfigError, DataError, FitError, DomainError) as exc:
        print(f"flightopt: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"flightopt: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except Exception:
        traceback.print_exc()
        print("flightopt: internal error", file=sys.stderr)
        return EXIT_INTERNAL
    finally:
        if handler is not None:
            logging.getLogger("flightopt").removeHandler(handler)
            handler.close()


if __name__ == "__main__":
    sys.exit(main())
