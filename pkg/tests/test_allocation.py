"""Allocation LP against the scipy linprog oracle, plus policy invariants."""

import math

import numpy as np
import pytest
from scipy.optimize import linprog

from cwhfmt import allocation as al


def oracle_fuel(dv_net, config, mask=None):
    """Independent LP oracle (HiGHS)."""
    eta = np.ones(config.count, dtype=bool) if mask is None else mask.eta
    act = np.flatnonzero(eta)
    a_eq = np.vstack([config.directions[act].T, config.torque_arms()[act].T])
    b_eq = np.concatenate([dv_net, np.zeros(3)])
    bounds = [(config.dv_min[j], None if math.isinf(config.dv_max[j]) else config.dv_max[j]) for j in act]
    res = linprog(np.ones(act.size), A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    return res.fun if res.status == 0 else None


@pytest.fixture(scope="module")
def config():
    return al.default_thruster_config()


def test_attitude_policy_constant_orthonormal():
    r1 = al.attitude_policy()
    r2 = al.attitude_policy(np.arange(6.0))
    assert np.array_equal(r1, r2)
    assert np.allclose(r1 @ r1.T, np.eye(3), atol=1e-15)
    assert abs(np.linalg.det(r1) - 1.0) < 1e-12
    # LVLH nadir direction maps onto the body nadir axis (body z).
    assert np.allclose(r1 @ np.array([-1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0]))


def test_zero_command_zero_fuel(config):
    res = al.allocate(np.zeros(3), config)
    assert res.fuel == 0.0
    assert np.array_equal(res.magnitudes, np.zeros(config.count))


def test_centerline_thruster_exact_match():
    # A thruster through the center of mass can take the whole burn alone.
    cfg = al.ThrusterConfig(
        positions=np.array([[0.0, 0.0, 0.0], [0.2, 0.0, 0.0], [0.0, 0.2, 0.0]]),
        directions=np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
        dv_min=np.zeros(3),
        dv_max=np.full(3, np.inf),
    )
    res = al.allocate(np.array([0.37, 0.0, 0.0]), cfg)
    assert abs(res.fuel - 0.37) < 1e-12
    assert abs(res.magnitudes[0] - 0.37) < 1e-12


def test_infeasible_halfspace():
    # Every thruster pushes +x; a -x command cannot be realized.
    cfg = al.ThrusterConfig(
        positions=np.zeros((2, 3)),
        directions=np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]),
        dv_min=np.zeros(2),
        dv_max=np.full(2, np.inf),
    )
    with pytest.raises(al.Infeasible):
        al.allocate(np.array([-0.1, 0.0, 0.0]), cfg)


def test_matches_oracle_random_commands(config, rng):
    for _ in range(100):
        dv = rng.normal(size=3) * 0.2
        res = al.allocate(dv, config)
        ref = oracle_fuel(dv, config)
        assert ref is not None
        assert abs(res.fuel - ref) <= 1e-7 * max(1.0, ref)
        # residuals
        net = config.directions.T @ res.magnitudes
        tor = config.torque_arms().T @ res.magnitudes
        scale = max(1.0, np.linalg.norm(dv))
        assert np.linalg.norm(net - dv) <= 1e-8 * scale
        assert np.linalg.norm(tor) <= 1e-8 * scale
        assert res.fuel >= np.linalg.norm(dv) - 1e-9


def test_matches_oracle_under_failures(config, rng):
    masks = al.enumerate_failure_modes(config.count, 2)
    for _ in range(40):
        dv = rng.normal(size=3) * 0.1
        mask = masks[int(rng.integers(len(masks)))]
        try:
            res = al.allocate(dv, config, mask)
        except al.Infeasible:
            assert oracle_fuel(dv, config, mask) is None
            continue
        ref = oracle_fuel(dv, config, mask)
        assert ref is not None
        assert abs(res.fuel - ref) <= 1e-7 * max(1.0, ref)
        assert np.all(res.magnitudes[~mask.eta] == 0.0)


def test_failure_monotonicity(config, rng):
    # Removing thrusters can only shrink the feasible set.
    for _ in range(20):
        dv = rng.normal(size=3) * 0.15
        base = al.allocate(dv, config).fuel
        eta = np.ones(config.count, dtype=bool)
        eta[rng.choice(config.count, size=2, replace=False)] = False
        try:
            failed = al.allocate(dv, config, al.FailureMask(eta)).fuel
        except al.Infeasible:
            continue
        assert failed >= base - 1e-9


def test_scale_equivariance(config, rng):
    dv = rng.normal(size=3) * 0.1
    r1 = al.allocate(dv, config)
    r3 = al.allocate(3.0 * dv, config)
    assert abs(r3.fuel - 3.0 * r1.fuel) <= 1e-8 * max(1.0, r1.fuel)


def test_dv_max_binding(config):
    capped = al.ThrusterConfig(
        config.positions, config.directions, config.dv_min, np.full(config.count, 0.01)
    )
    dv = np.array([0.018, 0.0, 0.0])  # above any single thruster's cap
    res = al.allocate(dv, capped)  # must spread across thrusters
    assert np.all(res.magnitudes <= 0.01 + 1e-9)
    ref = oracle_fuel(dv, capped)
    assert abs(res.fuel - ref) <= 1e-7 * max(1.0, ref)
    with pytest.raises(al.Infeasible):
        al.allocate(np.array([0.05, 0.0, 0.0]), capped)  # beyond torque-free capacity
    assert oracle_fuel(np.array([0.05, 0.0, 0.0]), capped) is None


def test_enumerate_failure_modes_counts():
    assert len(al.enumerate_failure_modes(8, 0)) == 1
    masks = al.enumerate_failure_modes(8, 2)
    assert len(masks) == 1 + 8 + 28
    uniq = {tuple(m.eta.tolist()) for m in masks}
    assert len(uniq) == len(masks)
    assert len(al.enumerate_failure_modes(16, 2)) == 1 + 16 + 120


def test_abort_relaxation(config):
    all_on = al.FailureMask(np.ones(config.count, dtype=bool))
    assert al.abort_burn_feasible(np.array([0.1, 0.2, 0.0]), config, all_on)
    assert al.abort_burn_feasible(np.zeros(3), config, al.FailureMask(np.zeros(config.count, dtype=bool)))
    # capacity-limited: only two thrusters can take a large burn
    hi = np.full(config.count, 0.05)
    hi[3] = hi[11] = 1.0
    capped = al.ThrusterConfig(config.positions, config.directions, config.dv_min, hi)
    eta = np.ones(config.count, dtype=bool)
    burn = np.array([0.0, 0.3, 0.0])
    assert al.abort_burn_feasible(burn, capped, al.FailureMask(eta))
    eta[3] = eta[11] = False
    assert not al.abort_burn_feasible(burn, capped, al.FailureMask(eta))
