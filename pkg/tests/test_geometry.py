"""Obstacle primitives: exact predicates vs sampling oracles and pruning soundness."""

import math

import numpy as np
import pytest

from cwhfmt import geometry as geo
from cwhfmt.dynamics import BurnSchedule, make_state

from conftest import random_states


@pytest.fixture(scope="module")
def env():
    box = geo.StateSpaceBox(
        lower=np.array([-500.0, -3500.0, -100.0, -5.0, -5.0, -5.0]),
        upper=np.array([400.0, 3500.0, 100.0, 5.0, 5.0, 5.0]),
    )
    koz = geo.EllipsoidKoz(np.array([35.0, 50.0, 15.0]))
    cone = geo.ConeObstacle(
        apex=np.zeros(3), axis=np.array([-1.0, 0.0, 0.0]),
        half_angle=math.radians(30.0), height=75.0,
    )
    return geo.make_environment(
        box, koz, [cone], geo.TargetSphere(7.5), geo.PlumeModel(math.radians(10.0), 16.0), 1.0
    )


def test_origin_infeasible(env):
    assert not geo.point_feasible(np.zeros(6), env)


def test_outside_everything_feasible(env):
    x = make_state([0.0, 120.0, 0.0], [0.0, 0.0, 0.0])
    assert geo.point_feasible(x, env)


def test_koz_boundary_is_collision(env):
    ax = env.koz.semi_axes
    x = make_state([0.0, ax[1], 0.0], [0.0, 0.0, 0.0])  # exactly on the inflated boundary
    assert not geo.point_feasible(x, env)
    assert not geo.point_feasible_unpruned(x, env)


def test_koz_membership_position_only(env):
    pos = [0.0, 0.9 * env.koz.semi_axes[1], 0.0]
    for v in ([0.0, 0.0, 0.0], [3.0, -2.0, 1.0]):
        assert not geo.point_feasible(make_state(pos, v), env)


def test_cone_membership(env):
    # Below the target, inside the antenna lobe.
    assert not geo.point_feasible(make_state([-60.0, 0.0, 0.0], [0, 0, 0]), env)
    # Same radius but displaced in-track beyond the lobe half-width.
    assert geo.point_feasible(make_state([-60.0, 45.0, 0.0], [0, 0, 0]), env)
    # Beyond the (inflated) lobe height.
    assert geo.point_feasible(make_state([-80.0, 0.0, 0.0], [0, 0, 0]), env)


def test_box_bounds(env):
    assert not geo.point_feasible(make_state([0.0, 3600.0, 0.0], [0, 0, 0]), env)
    assert not geo.point_feasible(make_state([0.0, 120.0, 0.0], [0, 6.0, 0]), env)


def test_pruned_matches_unpruned(env, rng):
    states = random_states(rng, 4000, pos_scale=150.0, vel_scale=4.0)
    fast = geo.feasible_states(states, env)
    slow = np.array([geo.point_feasible_unpruned(x, env) for x in states])
    assert np.array_equal(fast, slow)


def test_inflation_is_conservative(env, rng):
    # Any point within the chaser radius of the raw obstacles must be blocked.
    raw_koz = geo.EllipsoidKoz(np.array([35.0, 50.0, 15.0]))
    for _ in range(3000):
        u = rng.normal(size=3)
        u /= np.linalg.norm(u)
        # point on the raw ellipsoid surface: scale direction until quadratic = 1
        p = u / math.sqrt(float(np.sum((u / raw_koz.semi_axes) ** 2)))
        q = p + u * rng.uniform(0.0, 0.999)  # within the 1 m chaser radius outward
        assert env.koz.contains(q) or float(np.sum((q / raw_koz.semi_axes) ** 2)) <= 1.0


def test_cone_sphere_exact_cases():
    apex = np.array([100.0, 0.0, 0.0])
    away = np.array([1.0, 0.0, 0.0])
    assert not geo.cone_sphere_intersects(apex, away, math.radians(10.0), 16.0, np.zeros(3), 7.5)
    toward = np.array([-1.0, 0.0, 0.0])
    assert geo.cone_sphere_intersects(np.array([10.0, 0, 0]), toward, math.radians(10.0), 16.0, np.zeros(3), 12.0)
    # Tangency: cone along +z from origin, sphere centered off-axis.
    assert geo.cone_sphere_intersects(
        np.zeros(3), np.array([0.0, 0.0, 1.0]), math.radians(45.0), 10.0,
        np.array([0.0, 20.0, 5.0]), 20.0 - 5.0 * math.tan(math.radians(45.0)) + 1e-9,
    )


def test_cone_sphere_against_sampling_oracle(rng):
    # Certified-hit direction: a sampled in-cone point within the sphere
    # implies the exact predicate must agree. Certified-miss direction: when
    # the exact distance is clearly below the radius, sampling must find it.
    n_pts = 5000
    for _ in range(1000):
        apex = rng.uniform(-30, 30, size=3)
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        half = rng.uniform(0.05, 1.0)
        height = rng.uniform(1.0, 40.0)
        center = rng.uniform(-30, 30, size=3)
        radius = rng.uniform(1.0, 15.0)

        exact = geo.cone_sphere_intersects(apex, axis, half, height, center, radius)

        u = rng.random(n_pts)
        s = height * np.cbrt(u)
        rr = s * math.tan(half) * np.sqrt(rng.random(n_pts))
        ang = 2.0 * np.pi * rng.random(n_pts)
        e1 = np.array([axis[1] - axis[2], axis[2] - axis[0], axis[0] - axis[1]])
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(axis, e1)
        pts = apex + np.outer(s, axis) + np.outer(rr * np.cos(ang), e1) + np.outer(rr * np.sin(ang), e2)
        mc_hit = bool((np.linalg.norm(pts - center, axis=1) <= radius).any())

        if mc_hit:
            assert exact
        if exact and not mc_hit:
            # Must be a thin contact: the cone-to-center distance is near the radius.
            rel = center - apex
            sc = float(rel @ axis)
            rho = math.sqrt(max(0.0, float(rel @ rel) - sc * sc))
            d2 = geo._point_triangle_dist2(sc, rho, height, math.tan(half))
            assert math.sqrt(d2) >= radius - 0.35 * radius  # within oracle resolution


def test_trajectory_feasible_coast(env, model):
    x0 = make_state([0.0, 300.0, 0.0], [0.0, 0.0, 0.0])
    assert geo.trajectory_feasible(model, x0, BurnSchedule(), 0.0, model.period, env, 0.0005 * model.period)


def test_trajectory_infeasible_crossing(env, model):
    # Radial offset with circular-matching velocity drifts through the KOZ band.
    dx = -2.0 * env.koz.semi_axes[0]
    x0 = make_state([dx, -200.0, 0.0], [0.0, -1.5 * model.omega * dx, 0.0])
    # This circular orbit drifts in-track at constant dx = -72ish: crosses the
    # antenna cone region below the target.
    assert not geo.trajectory_feasible(model, x0, BurnSchedule(), 0.0, model.period, env, 0.0005 * model.period)


def test_trajectory_monotone_in_dt(env, model, rng):
    dt = 0.0005 * model.period
    cases = []
    for _ in range(30):
        x0 = random_states(rng, 1, pos_scale=200.0, vel_scale=0.1)[0]
        sched = BurnSchedule(np.array([0.0]), rng.normal(size=(1, 3)) * 0.05)
        cases.append((x0, sched))
    for x0, sched in cases:
        coarse = geo.trajectory_feasible(model, x0, sched, 0.0, 2000.0, env, dt)
        fine = geo.trajectory_feasible(model, x0, sched, 0.0, 2000.0, env, dt / 2.0)
        if not coarse:
            assert not fine  # refining the grid can only find more violations
