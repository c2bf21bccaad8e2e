"""Propagation against an independent Runge-Kutta oracle plus exact invariants."""

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from cwhfmt import dynamics as dyn
from cwhfmt.dynamics import BurnSchedule, Impulse, OrbitModel

from conftest import random_states


def rk_propagate(model, x0, T, rtol=1e-11):
    """Independent oracle: adaptive RK integration of xdot = A x."""
    a = dyn.cwh_a_matrix(model.omega)
    sol = solve_ivp(
        lambda t, x: a @ x, (0.0, T), x0, method="RK45", rtol=rtol, atol=1e-12
    )
    return sol.y[:, -1]


def test_stm_zero_is_identity(model):
    assert np.array_equal(dyn.stm(model, 0.0), np.eye(6))


def test_in_track_offset_is_equilibrium(model):
    x0 = dyn.make_state([0.0, 1234.5, 0.0], [0.0, 0.0, 0.0])
    for T in [0.0, 17.3, model.period, 3.7 * model.period]:
        assert np.allclose(dyn.propagate_coast(model, x0, T), x0, atol=1e-9)


def test_matches_rk45_oracle(model, rng):
    xs = random_states(rng, 40)
    Ts = rng.uniform(1.0, model.period, size=40)
    for x0, T in zip(xs, Ts):
        ours = dyn.propagate_coast(model, x0, T)
        ref = rk_propagate(model, x0, T)
        err = np.linalg.norm(ours - ref) / max(np.linalg.norm(ref), 1.0)
        assert err < 1e-9


def test_group_property_forward_backward(model, rng):
    for x0 in random_states(rng, 20):
        for T in [3.0, 600.0, 0.4 * model.period]:
            back = dyn.propagate_coast(model, dyn.propagate_coast(model, x0, T), -T)
            assert np.linalg.norm(back - x0) / np.linalg.norm(x0) < 1e-10


def test_semigroup(model, rng):
    for _ in range(50):
        t1, t2 = rng.uniform(0.0, model.period, size=2)
        lhs = dyn.stm(model, t1 + t2)
        rhs = dyn.stm(model, t1) @ dyn.stm(model, t2)
        assert np.linalg.norm(lhs - rhs) < 1e-10 * np.linalg.norm(lhs)


def test_radial_offset_period_drift(model):
    # Closed form at theta = 2*pi: dy drifts by -12*pi*dx0 - (6*pi/omega)*vy0,
    # every other component returns to its initial value.
    dx0 = 37.0
    x0 = dyn.make_state([dx0, 0.0, 0.0], [0.0, 0.0, 0.0])
    xT = dyn.propagate_coast(model, x0, model.period)
    assert abs(xT[1] - (-12.0 * np.pi * dx0)) < 1e-8
    assert np.allclose(np.delete(xT, 1), np.delete(x0, 1), atol=1e-9)

    vy0 = 0.04
    x0 = dyn.make_state([dx0, -5.0, 0.0], [0.0, vy0, 0.0])
    xT = dyn.propagate_coast(model, x0, model.period)
    drift = -12.0 * np.pi * dx0 - (6.0 * np.pi / model.omega) * vy0
    assert abs((xT[1] - x0[1]) - drift) < 1e-7


def test_planarity_preserved_exactly(model, rng):
    xs = random_states(rng, 10, planar=True)
    sched = BurnSchedule(np.array([0.0, 200.0]), np.array([[0.1, -0.05, 0.0], [0.0, 0.02, 0.0]]))
    for x0 in xs:
        for t in [0.0, 150.0, 450.0, 2000.0]:
            xt = dyn.propagate_schedule(model, x0, sched, t)
            assert xt[2] == 0.0 and xt[5] == 0.0


def test_empty_schedule_equals_coast(model, rng):
    x0 = random_states(rng, 1)[0]
    for t in [0.0, 123.4, 4000.0]:
        a = dyn.propagate_schedule(model, x0, BurnSchedule(), t)
        b = dyn.propagate_coast(model, x0, t)
        assert np.array_equal(a, b)


def test_single_impulse_at_query_time(model, rng):
    x0 = random_states(rng, 1)[0]
    dv = np.array([0.03, -0.01, 0.02])
    sched = BurnSchedule(np.array([55.0]), dv[None, :])
    pre = dyn.propagate_coast(model, x0, 55.0)
    post = dyn.propagate_schedule(model, x0, sched, 55.0)
    assert np.allclose(post[0:3], pre[0:3], atol=1e-12)
    assert np.allclose(post[3:6], pre[3:6] + dv, atol=1e-12)


def test_schedule_grid_matches_pointwise(model, rng):
    x0 = random_states(rng, 1)[0]
    sched = BurnSchedule(
        np.array([0.0, 300.0, 900.0]),
        np.array([[0.05, 0.0, 0.01], [-0.02, 0.03, 0.0], [0.0, -0.04, 0.02]]),
    )
    ts = np.linspace(0.0, 1500.0, 97)
    grid = dyn.propagate_schedule_grid(model, x0, sched, ts)
    for k in [0, 13, 50, 96]:
        assert np.array_equal(grid[k], dyn.propagate_schedule(model, x0, sched, ts[k]))


def test_impulse_matrix_structure(model):
    b = dyn.CWH_B
    m0 = dyn.impulse_matrix(model, 0.0)
    assert np.array_equal(m0, np.hstack([b, b]))
    assert np.linalg.matrix_rank(m0) == 3

    m = dyn.impulse_matrix(model, 0.05 * model.period)
    assert np.isfinite(np.linalg.cond(m))
    assert np.linalg.matrix_rank(m) == 6

    m_per = dyn.impulse_matrix(model, model.period)
    scale = np.abs(m_per).max() ** 6
    assert abs(np.linalg.det(m_per)) < 1e-12 * max(scale, 1.0)


def test_schedule_validation():
    with pytest.raises(ValueError):
        BurnSchedule(np.array([1.0, 0.5]), np.zeros((2, 3)))
    s = BurnSchedule.from_impulses([Impulse([0.0, 0.1, 0.0], 5.0), Impulse([0.1, 0.0, 0.0], 1.0)])
    assert s.taus[0] == 1.0 and s.taus[1] == 5.0


def test_merged_schedule_sums_coincident(model):
    s = BurnSchedule(
        np.array([0.0, 100.0, 100.0, 200.0]),
        np.array([[0.1, 0.0, 0.0], [0.0, 0.1, 0.0], [0.0, -0.1, 0.0], [0.0, 0.0, 0.1]]),
    )
    m = s.merged()
    assert len(m) == 2  # the two opposing burns at t=100 cancel exactly
    assert m.cost_2norm() <= s.cost_2norm()


def test_orbit_model_invariants():
    m = OrbitModel(1.0592e-3)
    assert abs(m.period * m.omega - 2.0 * np.pi) < 1e-15 * 2.0 * np.pi
    with pytest.raises(ValueError):
        OrbitModel(-1.0)
