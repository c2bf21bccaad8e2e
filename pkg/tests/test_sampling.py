"""Halton generation, determinism, and the filtered sampling pipeline."""

import math

import numpy as np
import pytest

from cwhfmt import geometry as geo
from cwhfmt import sampling as sp


def test_halton_radical_inverse_values():
    assert np.allclose(sp.halton(1, 2), [0.5, 1.0 / 3.0])
    assert sp.halton(2, 1)[0] == 0.25
    assert sp.halton(3, 1)[0] == 0.75
    assert np.allclose(sp.halton(4, 2), [0.125, 4.0 / 9.0])


def test_halton_block_matches_scalar():
    blk = sp.halton_block(7, 20, 4)
    for k in range(20):
        assert np.array_equal(blk[k], sp.halton(7 + k, 4))


def test_dispersion_proxy_decreases():
    # sup-min distance to the sample set over a fixed probe grid shrinks with n.
    probes = sp.halton_block(100000, 4000, 4)  # distinct tail of the sequence
    disp = []
    for n in (100, 400, 1600):
        pts = sp.halton_block(1, n, 4)
        d2 = ((probes[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        disp.append(float(np.sqrt(d2.min(axis=1)).max()))
    assert disp[0] > disp[1] > disp[2]


def test_sample_space_scaling_planar():
    space = sp.SampleSpace(
        lower=np.array([-10.0, -20.0, 0.0, -1.0, -2.0, 0.0]),
        upper=np.array([10.0, 20.0, 1.0, 1.0, 2.0, 1.0]),
        planar=True,
    )
    pts = space.scale(np.array([[0.5, 0.5, 0.5, 0.5], [0.0, 1.0, 0.25, 0.75]]))
    assert np.allclose(pts[0], [0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    assert np.allclose(pts[1], [-10.0, 20.0, 0.0, -0.5, 1.0, 0.0])


@pytest.fixture()
def free_env():
    box = geo.StateSpaceBox(
        lower=np.array([-1000.0, -1000.0, -10.0, -5.0, -5.0, -5.0]),
        upper=np.array([1000.0, 1000.0, 10.0, 5.0, 5.0, 5.0]),
    )
    koz = geo.EllipsoidKoz(np.array([35.0, 50.0, 15.0]))
    return geo.make_environment(
        box, koz, [], geo.TargetSphere(7.5), geo.PlumeModel(math.radians(10.0), 16.0), 1.0
    )


def test_obstacle_free_box_accepts_verbatim(free_env):
    space = sp.SampleSpace(
        lower=np.array([200.0, 200.0, 0.0, -0.1, -0.1, 0.0]),
        upper=np.array([400.0, 400.0, 1.0, 0.1, 0.1, 1.0]),
        planar=True,
    )
    accept = lambda states: np.ones(states.shape[0], dtype=bool)
    got = sp.sample_free(space, 50, accept)
    raw = space.scale(sp.halton_block(1, 50, 4))
    assert np.array_equal(got.states, raw)
    assert got.n == 50 and got.n_goal == 0


def test_sampling_is_deterministic(free_env):
    space = sp.SampleSpace(
        lower=np.array([-200.0, -200.0, 0.0, -0.2, -0.2, 0.0]),
        upper=np.array([200.0, 200.0, 1.0, 0.2, 0.2, 1.0]),
        planar=True,
    )
    accept = lambda states: geo.feasible_states(states, free_env)
    goal = sp.GoalRegion(np.array([100.0, 0.0, 0.0, 0.0, 0.0, 0.0]), 8.0, 0.5)
    a = sp.sample_free(space, 120, accept, goal, 16)
    b = sp.sample_free(space, 120, accept, goal, 16)
    assert np.array_equal(a.states, b.states)
    assert a.states.tobytes() == b.states.tobytes()


def test_block_size_does_not_change_stream(free_env):
    space = sp.SampleSpace(
        lower=np.array([-200.0, -200.0, 0.0, -0.2, -0.2, 0.0]),
        upper=np.array([200.0, 200.0, 1.0, 0.2, 0.2, 1.0]),
        planar=True,
    )
    accept = lambda states: geo.feasible_states(states, free_env)
    goal = sp.GoalRegion(np.array([100.0, 0.0, 0.0, 0.0, 0.0, 0.0]), 8.0, 0.5)
    a = sp.sample_free(space, 75, accept, goal, 9, block=512)
    b = sp.sample_free(space, 75, accept, goal, 9, block=17)
    assert np.array_equal(a.states, b.states)


def test_all_samples_pass_filter(free_env):
    space = sp.SampleSpace(
        lower=np.array([-120.0, -120.0, 0.0, -0.2, -0.2, 0.0]),
        upper=np.array([120.0, 120.0, 1.0, 0.2, 0.2, 1.0]),
        planar=True,
    )
    accept = lambda states: geo.feasible_states(states, free_env)
    got = sp.sample_free(space, 200, accept)
    assert np.all(geo.feasible_states(got.states, free_env))
    # the KOZ punches a hole, so some raw candidates must have been rejected
    raw = space.scale(sp.halton_block(1, 200, 4))
    assert not np.array_equal(got.states, raw)


def test_goal_samples_inside_region(free_env):
    space = sp.SampleSpace(
        lower=np.array([-200.0, -200.0, 0.0, -0.2, -0.2, 0.0]),
        upper=np.array([200.0, 200.0, 1.0, 0.2, 0.2, 1.0]),
        planar=True,
    )
    goal = sp.GoalRegion(np.array([150.0, 0.0, 0.0, 0.0, 0.0, 0.0]), 5.0, 0.3)
    accept = lambda states: geo.feasible_states(states, free_env)
    got = sp.sample_free(space, 40, accept, goal, 12)
    assert got.n_goal == 12
    assert np.array_equal(got.states[40], goal.center)  # goal center stored first
    for x in got.states[40:]:
        assert goal.contains(x)
        assert x[2] == 0.0 and x[5] == 0.0


def test_sampling_exhausted_inside_koz(free_env):
    space = sp.SampleSpace(
        lower=np.array([-5.0, -5.0, 0.0, -0.1, -0.1, 0.0]),
        upper=np.array([5.0, 5.0, 1.0, 0.1, 0.1, 1.0]),
        planar=True,
    )
    accept = lambda states: geo.feasible_states(states, free_env)
    with pytest.raises(sp.SamplingExhausted):
        sp.sample_free(space, 10, accept)


def test_halton_validation():
    with pytest.raises(ValueError):
        sp.halton(0, 2)
    with pytest.raises(ValueError):
        sp.halton(1, 7)
