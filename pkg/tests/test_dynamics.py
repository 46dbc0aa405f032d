import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_controls, random_states
from flightopt.dynamics import (AircraftParams, Control, State, bank_angle, continuous_dynamics,
                                euler_step, jacobians, rhs, rk4_step, simulate, trim_thrust,
                                weighted_hessian)
from flightopt.errors import DomainError
from flightopt.wind import PolynomialWindField


def eq_thrust(v, p):
    return 0.5 * p.cd * p.rho * p.area * v * v


def test_equilibrium(params):
    d = continuous_dynamics(State(0, 0, 200, 70000, 0), Control(eq_thrust(200, params), 0), (0, 0), params)
    assert d.dv == pytest.approx(0.0, abs=1e-12)
    assert d.dx == pytest.approx(0.2) and d.dy == pytest.approx(0.0, abs=1e-15)


def test_zero_thrust_no_burn(params):
    d = continuous_dynamics(State(0, 0, 200, 70000, 0), Control(0, 0), (0, 0), params)
    assert d.dm == 0.0


def test_fuel_rate_hand_value():
    p = AircraftParams(eta=1e-5)
    d = continuous_dynamics(State(0, 0, 200, 70000, 0), Control(1e5, 0), (0, 0), p)
    assert d.dm == pytest.approx(-1.0)


def test_rhs_formula(params, rng):
    X, U = random_states(rng, 20), random_controls(rng, 20)
    W = rng.normal(size=(20, 2)) * 20
    for x, u, w in zip(X, U, W):
        d = continuous_dynamics(x, u, w, params)
        v, m, th = x[2], x[3], x[4]
        k = params.cd * params.rho * params.area
        want = [(v * math.cos(th) + w[0]) / 1000, (v * math.sin(th) + w[1]) / 1000,
                (2 * u[0] - k * v * v) / (2 * m), -params.eta * u[0], u[1]]
        np.testing.assert_allclose(d, want, rtol=1e-13, atol=1e-16)


def test_nonpositive_mass(params):
    with pytest.raises(DomainError, match="mass"):
        continuous_dynamics(State(0, 0, 200, 0.0, 0), Control(0, 0), (0, 0), params)


def test_euler_distance(params):
    s = euler_step(State(0, 0, 200, 70000, 0), Control(eq_thrust(200, params), 0), None, 360, params)
    assert s.x == pytest.approx(72.0, abs=1e-12)


def test_euler_mass():
    p = AircraftParams(eta=1e-5)
    s = euler_step(State(0, 0, 200, 70000, 0), Control(1e5, 0), None, 360, p)
    assert s.m == pytest.approx(69640.0)


def test_euler_linear_in_dt(params, published_wind):
    s = State(-500, -200, 230, 68000, 2.9)
    u = Control(5e4, 1e-3)
    d1 = np.subtract(euler_step(s, u, published_wind, 10.0, params), s)
    d2 = np.subtract(euler_step(s, u, published_wind, 20.0, params), s)
    np.testing.assert_allclose(d2, 2 * d1, rtol=1e-2)


def test_dry_mass_flagged():
    p = AircraftParams(m_dry=69999.0)
    with pytest.raises(DomainError, match="dry"):
        euler_step(State(0, 0, 200, 70000, 0), Control(1e5, 0), None, 360, p)
    with pytest.raises(DomainError):
        rk4_step(State(0, 0, 200, 70000, 0), Control(1e5, 0), None, 360, p)


def test_step_rejects_bad_dt(params):
    with pytest.raises(DomainError):
        euler_step(State(0, 0, 200, 70000, 0), Control(0, 0), None, 0.0, params)


def test_rk4_equals_euler_for_constant_derivative(params):
    wind = PolynomialWindField.zero()
    a = np.zeros(13)
    a[4] = 3.0
    b = np.zeros(10)
    b[4] = -2.0
    const = PolynomialWindField(a, b)
    s = State(10, 20, 220, 70000, 0.4)
    u = Control(eq_thrust(220, params), 0.0)
    e = euler_step(s, u, const, 300, params)
    r = rk4_step(s, u, const, 300, params)
    assert e.x == pytest.approx(r.x, abs=1e-12) and e.y == pytest.approx(r.y, abs=1e-12)
    assert euler_step(s, u, wind, 300, params).theta == s.theta


def test_euler_rk4_gap_is_second_order(params, published_wind, rng):
    for x, u in zip(random_states(rng, 50), random_controls(rng, 50)):
        gaps = []
        for dt in (20.0, 10.0):
            e = np.asarray(euler_step(x, u, published_wind, dt, params))
            r = np.asarray(rk4_step(x, u, published_wind, dt, params))
            gaps.append(np.max(np.abs(e - r) / [1, 1, 1, 1e3, 1]))
        assert 0.8 * 4 <= gaps[0] / gaps[1] <= 1.2 * 4


def test_simulate_basics(params, published_wind):
    s0 = State(0, 0, 230, 70000, 3.0)
    with pytest.raises(ValueError):
        simulate(s0, np.zeros((0, 2)), None, 60, params)
    u = Control(4e4, 1e-4)
    traj = simulate(s0, [u], published_wind, 60, params)
    np.testing.assert_array_equal(traj[1], euler_step(s0, u, published_wind, 60, params))
    assert traj.shape == (2, 5)


def test_simulate_annotates_step():
    p = AircraftParams(m_dry=69000)
    with pytest.raises(DomainError, match="step 2"):
        simulate(State(0, 0, 230, 70000, 0), [[1e5, 0]] * 5, None, 240, p)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1.2e5), min_size=1, max_size=30))
def test_mass_monotone(thrusts):
    p = AircraftParams(m_dry=1.0)
    U = np.column_stack([thrusts, np.zeros(len(thrusts))])
    traj = simulate(State(0, 0, 230, 70000, 0), U, PolynomialWindField.published(), 60, p)
    assert np.all(np.diff(traj[:, 3]) <= 0)


def test_constant_wind_superposition(params, published_wind, rng):
    a = np.zeros(13)
    b = np.zeros(10)
    a[4], b[4] = 7.0, -3.0
    shifted = published_wind + PolynomialWindField(a, b)
    X, U = random_states(rng, 30), random_controls(rng, 30)
    d0 = rhs(X, U, published_wind, params)
    d1 = rhs(X, U, shifted, params)
    np.testing.assert_allclose(d1[:, 0] - d0[:, 0], 7.0 / 1000, rtol=1e-9)
    np.testing.assert_allclose(d1[:, 1] - d0[:, 1], -3.0 / 1000, rtol=1e-9)
    np.testing.assert_array_equal(d1[:, 2:], d0[:, 2:])


def test_rotation_equivariance(params, rng):
    for _ in range(10):
        alpha = rng.uniform(-np.pi, np.pi)
        th0 = rng.uniform(-np.pi, np.pi)
        U = random_controls(rng, 12) * [0.5, 1]
        a = simulate(State(0, 0, 230, 70000, th0), U, None, 60, params)
        b = simulate(State(0, 0, 230, 70000, th0 + alpha), U, None, 60, params)
        c, s = np.cos(alpha), np.sin(alpha)
        rot = a[:, :2] @ np.array([[c, s], [-s, c]])
        np.testing.assert_allclose(b[:, :2], rot, atol=1e-9)


def _fd(fun, x, h):
    cols = []
    for j in range(len(x)):
        e = np.zeros(len(x))
        e[j] = h[j]
        cols.append((fun(x + e) - fun(x - e)) / (2 * h[j]))
    return np.stack(cols, axis=-1)


def test_jacobians_fd(params, published_wind, rng):
    hx = np.array([1e-3, 1e-3, 1e-4, 1e-2, 1e-7])
    hu = np.array([1e-1, 1e-8])
    for x, u in zip(random_states(rng, 100), random_controls(rng, 100)):
        A, B = jacobians(x, u, published_wind, params)
        fa = _fd(lambda s: rhs(s, u, published_wind, params), x, hx)
        fb = _fd(lambda c: rhs(x, c, published_wind, params), u, hu)
        scale_a = np.maximum(np.abs(fa), 1e-9)
        assert np.max(np.abs(A - fa) / np.maximum(scale_a, np.max(np.abs(fa)) * 1e-6)) < 1e-6
        np.testing.assert_allclose(B, fb, rtol=1e-6, atol=1e-12)


def test_jacobian_simple_entries(params):
    A, B = jacobians(State(0, 0, 200, 60000, 0.7), Control(1e4, 0), None, params)
    assert B[3, 0] == -params.eta
    assert A[0, 2] == pytest.approx(math.cos(0.7) / 1000)


def test_weighted_hessian_fd(params, published_wind, rng):
    h = np.array([1e-3, 1e-3, 1e-4, 1e-2, 1e-7, 1e-1, 1e-8])
    for x, u in zip(random_states(rng, 20), random_controls(rng, 20)):
        w = rng.normal(size=5)
        H = weighted_hessian(x, u, published_wind, params, w)

        def grad(z):
            A, B = jacobians(z[:5], z[5:], published_wind, params)
            return w @ np.hstack([A, B])

        fd = _fd(grad, np.concatenate([x, u]), h)
        np.testing.assert_allclose(H, fd, rtol=1e-5, atol=1e-10 * np.max(np.abs(fd)))


def test_bank_angle(params):
    assert bank_angle(230, 0.0, params) == 0.0
    assert bank_angle(params.g, 1.0, params) == pytest.approx(math.pi / 4)
    assert bank_angle(230, 0.001, params) == pytest.approx(math.atan(0.023445), abs=1e-6)
    with pytest.raises(DomainError):
        bank_angle(0.0, 0.001, params)


def test_trim_thrust(params):
    d = continuous_dynamics(State(0, 0, 250, 65000, 0), Control(trim_thrust(250, params), 0), (0, 0), params)
    assert d.dv == pytest.approx(0.0, abs=1e-12)


def test_params_validation():
    with pytest.raises(DomainError):
        AircraftParams(cd=0.0)
    with pytest.raises(DomainError):
        AircraftParams(m_dry=-1.0)
