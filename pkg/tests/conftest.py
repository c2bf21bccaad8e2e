import numpy as np
import pytest

from cwhfmt.allocation import default_thruster_config
from cwhfmt.dynamics import OrbitModel

# Mean motion of a ~705 km LEO reference orbit, used throughout the tests.
OMEGA = 1.0592e-3


@pytest.fixture(scope="session")
def model():
    return OrbitModel(OMEGA)


def thruster_doc():
    cfg = default_thruster_config()
    return [
        {
            "position_m": cfg.positions[k].tolist(),
            "direction": cfg.directions[k].tolist(),
            "dv_min_mps": 0.0,
            "dv_max_mps": None,
        }
        for k in range(cfg.count)
    ]


def circular_velocity(dx):
    return [0.0, -1.5 * OMEGA * dx, 0.0]


def toy_scenario_doc(n=60, j_bar=0.3, waypoints=None, initial=None, **planner_overrides):
    """Small two-leg planar scenario used across the planner/CLI tests."""
    if initial is None:
        initial = {"position_m": [150.0, 400.0, 0.0], "velocity_mps": circular_velocity(150.0)}
    if waypoints is None:
        waypoints = [
            {
                "position_m": [150.0, 150.0, 0.0],
                "velocity_mps": circular_velocity(150.0),
                "eps_r_m": 8.0,
                "eps_v_mps": 0.5,
            },
            {
                "position_m": [100.0, 0.0, 0.0],
                "velocity_mps": [0.0, 0.0, 0.0],
                "eps_r_m": 5.0,
                "eps_v_mps": 0.3,
            },
        ]
    planner = {
        "samples_per_leg": n,
        "j_bar_mps": j_bar,
        "t_max_frac": 0.1,
        "dt_frac": 0.0005,
        "goal_fraction": 0.04,
        "merge_mode": True,
        "strict_safety": False,
        "planar": True,
        "exact_convergence": False,
        "sample_position_padding_m": 60.0,
    }
    planner.update(planner_overrides)
    return {
        "schema_version": 1,
        "orbit": {"omega_rad_per_s": OMEGA},
        "state_space_box": {
            "lower": [-600.0, -4000.0, -100.0, -5.0, -5.0, -5.0],
            "upper": [500.0, 4000.0, 100.0, 5.0, 5.0, 5.0],
        },
        "koz": {"semi_axes_m": [35.0, 50.0, 15.0]},
        "antenna_cones": [
            {"apex_m": [0.0, 0.0, 0.0], "axis": [-1.0, 0.0, 0.0], "half_angle_deg": 30.0, "height_m": 75.0}
        ],
        "target_sphere_radius_m": 7.5,
        "chaser": {
            "circumscribing_radius_m": 1.0,
            "plume": {"half_angle_deg": 10.0, "height_m": 16.0},
            "thrusters": thruster_doc(),
        },
        "fault_tolerance": 2,
        "initial_state": initial,
        "waypoints": waypoints,
        "smoothing": {"enabled": True, "alpha_tol": 0.015625},
        "planner": planner,
    }


@pytest.fixture()
def rng():
    return np.random.default_rng(20250810)


def random_states(rng, n, pos_scale=1000.0, vel_scale=1.0, planar=False):
    """States in a +-pos_scale box with +-vel_scale velocities."""
    x = np.empty((n, 6))
    x[:, 0:3] = rng.uniform(-pos_scale, pos_scale, size=(n, 3))
    x[:, 3:6] = rng.uniform(-vel_scale, vel_scale, size=(n, 3))
    if planar:
        x[:, 2] = 0.0
        x[:, 5] = 0.0
    return x
