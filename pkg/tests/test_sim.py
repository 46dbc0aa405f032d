import numpy as np
import pytest

from conftest import small_problem
from flightopt.dynamics import AircraftParams, State, simulate
from flightopt.errors import DataError, DomainError
from flightopt.geo import GeoPoint, Projection, project
from flightopt.sim import TrackPoint, cross_track, load_tracks, metrics, replay
from flightopt.solver import solve
from flightopt.transcription import DecisionLayout, build


@pytest.fixture(scope="module")
def solved():
    params = AircraftParams()
    from flightopt.wind import PolynomialWindField
    wind = PolynomialWindField.published()
    p = small_problem()
    inst = build(p, wind, params)
    return p, wind, params, solve(inst, inst.initial_guess())


def test_replay_converged_gap(solved):
    p, wind, params, r = solved
    assert r.converged
    rep = replay(r, p, wind, params)
    assert rep.max_gap <= 10 * 1e-6 * p.n_steps
    assert rep.trajectory.shape == (p.n_steps + 1, 5)


def test_replay_exact_for_simulated_z(params, published_wind, rng):
    p = small_problem()
    U = np.column_stack([rng.uniform(0, 8e4, p.n_steps), rng.uniform(-1e-3, 1e-3, p.n_steps)])
    X = simulate(p.x0, U, published_wind, p.dt, params)
    z = DecisionLayout(p.n_steps).pack(X, U)
    assert replay(z, p, published_wind, params).max_gap < 1e-9


def test_replay_control_perturbation_grows_gap(solved):
    p, wind, params, r = solved
    base = replay(r, p, wind, params).max_gap
    lay = DecisionLayout(p.n_steps)
    X, U = lay.split(r.z)
    U = U.copy()
    U[2, 0] *= 1.1
    assert replay(lay.pack(X, U), p, wind, params).max_gap > base


def test_path_length_straight():
    traj = np.array([[0, 0, 230, 70000, 0], [100, 0, 230, 69000, 0]], float)
    m = metrics(traj, None, 60.0)
    assert m.path_length_km == 100.0
    assert m.fuel_burned_kg == 1000.0
    assert m.travel_time_h == pytest.approx(60 / 3600)
    assert m.max_cross_track_km is None


def test_identical_reference_zero_cross_track(rng):
    traj = np.column_stack([np.cumsum(rng.uniform(0, 10, 20)), rng.normal(size=20),
                            np.full(20, 230.0), np.linspace(70000, 69000, 20), np.zeros(20)])
    m = metrics(traj, traj[:, :2], 60.0)
    assert m.max_cross_track_km < 1e-12 and m.mean_cross_track_km < 1e-12


def test_fuel_equals_closed_form(params):
    T, N, dt = 5e4, 12, 120.0
    traj = simulate(State(0, 0, 230, 70000, 0), np.tile([T, 0.0], (N, 1)), None, dt, params)
    m = metrics(traj, None, dt)
    assert m.fuel_burned_kg == pytest.approx(params.eta * T * N * dt, rel=1e-12)


def test_fuel_identity_varying_thrust(params, rng):
    U = np.column_stack([rng.uniform(0, 1e5, 30), np.zeros(30)])
    traj = simulate(State(0, 0, 230, 70000, 0), U, None, 60.0, params)
    assert metrics(traj, None, 60.0).fuel_burned_kg == pytest.approx(params.eta * U[:, 0].sum() * 60, rel=1e-12)


def test_cross_track_symmetric_under_reversal(rng):
    ref = np.cumsum(rng.normal(size=(15, 2)) * 30, axis=0)
    pts = rng.normal(size=(40, 2)) * 100
    assert cross_track(pts, ref) == pytest.approx(cross_track(pts, ref[::-1]), abs=1e-12)


def test_cross_track_known_distance():
    ref = np.array([[0.0, 0.0], [10.0, 0.0]])
    pts = np.array([[5.0, 3.0], [12.0, 0.0], [-1.0, 0.0]])
    mx, mean = cross_track(pts, ref)
    assert mx == pytest.approx(3.0) and mean == pytest.approx(2.0)


def test_path_at_least_chord(rng):
    xy = np.cumsum(rng.normal(size=(30, 2)) * 5, axis=0)
    traj = np.column_stack([xy, np.full((30, 3), 1.0)])
    m = metrics(traj, None, 1.0)
    assert m.path_length_km >= np.linalg.norm(xy[-1] - xy[0])


def test_metrics_errors():
    with pytest.raises(DomainError):
        metrics(np.zeros((1, 5)), None, 1.0)
    with pytest.raises(DomainError):
        metrics(np.zeros((3, 5)), np.zeros((1, 2)), 1.0)


def test_geographic_reference():
    proj = Projection(GeoPoint(-87.9, 41.98))
    lon = np.array([-87.9, -90.0, -95.0])
    lat = np.array([41.98, 41.5, 40.0])
    x, y = project((lon, lat), proj)
    traj = np.column_stack([x, y, np.full((3, 3), 1.0)])
    ref = [TrackPoint(60.0 * k, a, b) for k, (a, b) in enumerate(zip(lon, lat))]
    m = metrics(traj, ref, 60.0, proj)
    assert m.max_cross_track_km == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(ValueError):
        metrics(traj, ref, 60.0)


def _write(tmp_path, text):
    p = tmp_path / "tracks.csv"
    p.write_text(text)
    return p


def test_single_flight(tmp_path):
    p = _write(tmp_path, "acid,t,lon,lat,alt\nAAL1,0,-87.9,41.9,35000\nAAL1,60,-88,41.9,\nAAL1,120,-88.1,41.8,35000\n")
    tracks = load_tracks(p)
    assert list(tracks) == ["AAL1"] and len(tracks["AAL1"]) == 3
    assert tracks["AAL1"][1].alt is None and tracks["AAL1"][0].alt == 35000


def test_sorted_by_time(tmp_path):
    p = _write(tmp_path, "acid,t,lon,lat,alt\nX,120,-3,1,\nX,0,-1,1,\nX,60,-2,1,\n")
    assert [q.t for q in load_tracks(p)["X"]] == [0, 60, 120]


def test_interleaved_partition(tmp_path, rng):
    ids = rng.choice(["A1", "B2"], 40)
    rows = [f"{a},{k},{-90 + k * 0.1},{40},\n" for k, a in enumerate(ids)]
    p = _write(tmp_path, "acid,t,lon,lat,alt\n" + "".join(rows))
    tracks = load_tracks(p)
    for acid in ("A1", "B2"):
        assert [q.t for q in tracks[acid]] == [float(k) for k, a in enumerate(ids) if a == acid]


def test_alt_column_optional(tmp_path):
    p = _write(tmp_path, "acid,t,lon,lat\nX,0,-1,1\n")
    assert load_tracks(p)["X"][0].alt is None


@pytest.mark.parametrize("body, match", [
    ("acid,t,lon,lat,alt\n", "no track rows"),
    ("acid,t,lon\nX,0,1\n", "missing column"),
    ("acid,t,lon,lat,alt\nX,zero,-1,1,\n", ":2:"),
    ("acid,t,lon,lat,alt\nX,0,-1,1,\n,5,-1,1,\n", ":3:"),
    ("acid,t,lon,lat,alt\nX,0,-1,88,\n", ":2:"),
])
def test_track_errors(tmp_path, body, match):
    with pytest.raises(DataError, match=match):
        load_tracks(_write(tmp_path, body), Projection())
