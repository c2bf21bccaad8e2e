#!/usr/bin/env python3
"""Regenerate scenarios/default_planar.json.

The orbit rate, keep-out zone, antenna lobe, plume geometry, fault tolerance,
timestep and steering-duration fractions, goal fraction, and sample counts
follow the reference mission parameter set.  Waypoint coordinates and the
chaser thruster layout are repository-defined assets: a five-leg planar tour
climbing from a lower circular orbit, crossing beneath the antenna lobe, and
finishing radially above the target at (100 m, 0) with zero relative
velocity.
"""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from cwhfmt.allocation import default_thruster_config  # noqa: E402

OMEGA = 1.0592e-3  # rad/s, ~705 km LEO reference orbit


def circ(dx):
    return [0.0, -1.5 * OMEGA * dx, 0.0]


def waypoint(pos, vel, eps_r, eps_v):
    return {
        "position_m": [float(p) for p in pos],
        "velocity_mps": [float(v) for v in vel],
        "eps_r_m": eps_r,
        "eps_v_mps": eps_v,
    }


def build():
    cfg = default_thruster_config()
    thrusters = [
        {
            "position_m": cfg.positions[k].tolist(),
            "direction": cfg.directions[k].tolist(),
            "dv_min_mps": 0.0,
            "dv_max_mps": None,
        }
        for k in range(cfg.count)
    ]
    return {
        "schema_version": 1,
        "orbit": {"omega_rad_per_s": OMEGA},
        "state_space_box": {
            "lower": [-900.0, -6000.0, -150.0, -8.0, -8.0, -8.0],
            "upper": [900.0, 6000.0, 150.0, 8.0, 8.0, 8.0],
        },
        "koz": {"semi_axes_m": [35.0, 50.0, 15.0]},
        "antenna_cones": [
            {
                "apex_m": [0.0, 0.0, 0.0],
                "axis": [-1.0, 0.0, 0.0],
                "half_angle_deg": 30.0,
                "height_m": 75.0,
            }
        ],
        "target_sphere_radius_m": 7.5,
        "chaser": {
            "circumscribing_radius_m": 1.0,
            "plume": {"half_angle_deg": 10.0, "height_m": 16.0},
            "thrusters": thrusters,
        },
        "fault_tolerance": 2,
        "initial_state": {
            "position_m": [-480.0, -1300.0, 0.0],
            "velocity_mps": circ(-480.0),
        },
        "waypoints": [
            waypoint([-340.0, -850.0, 0.0], circ(-340.0), 6.0, 0.2),
            waypoint([-260.0, -420.0, 0.0], circ(-260.0), 6.0, 0.2),
            waypoint([-220.0, 40.0, 0.0], circ(-220.0), 5.0, 0.15),
            waypoint([120.0, 480.0, 0.0], circ(120.0), 4.0, 0.15),
            waypoint([100.0, 0.0, 0.0], [0.0, 0.0, 0.0], 3.0, 0.1),
        ],
        "planner": {
            "samples_per_leg": 400,
            "j_bar_mps": 0.3,
            "t_max_frac": 0.1,
            "dt_frac": 0.0005,
            "goal_fraction": 0.04,
            "merge_mode": True,
            "strict_safety": False,
            "planar": True,
            "exact_convergence": False,
            "sample_position_padding_m": 80.0,
        },
        "smoothing": {"enabled": True, "alpha_tol": 0.015625, "mode": "per_leg"},
    }


if __name__ == "__main__":
    out = Path(__file__).resolve().parents[1] / "scenarios" / "default_planar.json"
    out.parent.mkdir(exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(build(), fh, indent=1)
        fh.write("\n")
    print(f"wrote {out}")
