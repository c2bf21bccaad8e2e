"""Scenario files: schema, fail-closed parsing, and derived objects.

A scenario is a versioned JSON document holding every physical and planner
parameter of a mission: orbit rate, obstacle geometry, chaser thruster layout,
fault tolerance, the waypoint sequence, and the planner/smoothing knobs.
Unknown fields are rejected and every validation error names the offending
field path, so typos fail loudly instead of silently changing a run.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .allocation import ThrusterConfig
from .dynamics import OrbitModel, make_state
from .geometry import (
    ConeObstacle,
    EllipsoidKoz,
    PlumeModel,
    StateSpaceBox,
    TargetSphere,
    make_environment,
)
from .sampling import GoalRegion, SampleSpace

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    """Validation failure; the message starts with the field path."""


def _fail(path, msg):
    raise ScenarioError(f"{path}: {msg}")


def _expect_mapping(v, path):
    if not isinstance(v, dict):
        _fail(path, "expected an object")
    return v


def _take(d, key, path, required=True, default=None):
    if key not in d:
        if required:
            _fail(f"{path}.{key}" if path else key, "missing required field")
        return default
    return d.pop(key)


def _no_extras(d, path):
    if d:
        _fail(f"{path}.{sorted(d)[0]}" if path else sorted(d)[0], "unknown field")


def _number(v, path, positive=False, nonneg=False):
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
        _fail(path, "expected a finite number")
    if positive and not v > 0:
        _fail(path, "must be positive")
    if nonneg and v < 0:
        _fail(path, "must be non-negative")
    return float(v)


def _boolean(v, path):
    if not isinstance(v, bool):
        _fail(path, "expected a boolean")
    return v


def _vector(v, path, size):
    if not isinstance(v, list) or len(v) != size:
        _fail(path, f"expected a list of {size} numbers")
    return np.array([_number(e, f"{path}[{i}]") for i, e in enumerate(v)])


@dataclass(frozen=True)
class Waypoint:
    position: np.ndarray
    velocity: np.ndarray
    eps_r: float
    eps_v: float

    @property
    def state(self) -> np.ndarray:
        return make_state(self.position, self.velocity)

    def goal_region(self) -> GoalRegion:
        return GoalRegion(self.state, self.eps_r, self.eps_v)


@dataclass(frozen=True)
class PlannerParams:
    samples_per_leg: int
    j_bar: float
    t_max_frac: float
    dt_frac: float
    goal_fraction: float
    merge_mode: bool
    strict_safety: bool
    planar: bool
    exact_convergence: bool
    sample_position_padding_m: float
    velocity_margin_mps: float | None


@dataclass(frozen=True)
class SmoothingParams:
    enabled: bool
    alpha_tol: float
    # "per_leg" keeps each subplan's endpoints fixed (junction burns still
    # merge); "whole" relaxes waypoint pass-through across the entire plan.
    mode: str = "per_leg"


@dataclass(frozen=True)
class Scenario:
    omega: float
    state_space_box: StateSpaceBox
    koz: EllipsoidKoz
    antenna_cones: tuple
    target_sphere: TargetSphere
    chaser_radius: float
    plume: PlumeModel
    thrusters: ThrusterConfig
    fault_tolerance: int
    initial_state: np.ndarray
    waypoints: tuple
    planner: PlannerParams
    smoothing: SmoothingParams
    raw: dict = field(repr=False, compare=False, default_factory=dict)

    @property
    def model(self) -> OrbitModel:
        return OrbitModel(self.omega)

    @property
    def dt(self) -> float:
        return self.planner.dt_frac * self.model.period

    @property
    def t_max(self) -> float:
        return self.planner.t_max_frac * self.model.period

    @property
    def n_goal(self) -> int:
        return max(1, round(self.planner.goal_fraction * self.planner.samples_per_leg))

    def environment(self):
        return make_environment(
            self.state_space_box, self.koz, self.antenna_cones,
            self.target_sphere, self.plume, self.chaser_radius,
        )

    def leg_endpoints(self, k: int):
        """(start state, goal waypoint) of leg k."""
        start = self.initial_state if k == 0 else self.waypoints[k - 1].state
        return start, self.waypoints[k]

    def leg_sample_space(self, k: int) -> SampleSpace:
        """Per-subplan box around the leg endpoints, clipped to the mission box.

        The velocity window brackets the circular-orbit in-track profile over
        the leg's radial range, widened by the cost threshold (states with
        velocities far outside cannot be cheap neighbors anyway), and always
        covers both endpoint velocities.
        """
        p = self.planner
        start, wp = self.leg_endpoints(k)
        goal = wp.state
        pad = p.sample_position_padding_m
        margin = p.velocity_margin_mps if p.velocity_margin_mps is not None else p.j_bar

        lo = np.empty(6)
        hi = np.empty(6)
        for ax in range(3):
            lo[ax] = min(start[ax], goal[ax]) - pad
            hi[ax] = max(start[ax], goal[ax]) + pad
        lo[0:3] = np.maximum(lo[0:3], self.state_space_box.lower[0:3])
        hi[0:3] = np.minimum(hi[0:3], self.state_space_box.upper[0:3])

        w = self.omega
        vy_circ = [-1.5 * w * hi[0], -1.5 * w * lo[0]]
        lo[3], hi[3] = -margin, margin
        lo[4], hi[4] = min(vy_circ) - margin, max(vy_circ) + margin
        lo[5], hi[5] = -margin, margin
        for vax in range(3, 6):
            lo[vax] = min(lo[vax], start[vax] - 0.1 * margin, goal[vax] - 0.1 * margin)
            hi[vax] = max(hi[vax], start[vax] + 0.1 * margin, goal[vax] + 0.1 * margin)
        return SampleSpace(lower=lo, upper=hi, planar=p.planar)

    def fingerprint(self) -> str:
        """Hash of every field the offline product depends on.

        Online-only switches (merge mode, strict safety, smoothing) are
        excluded so replanning flags do not invalidate stored graphs.
        """
        d = json.loads(json.dumps(self.raw, sort_keys=True))
        planner = d.get("planner", {})
        for key in ("merge_mode", "strict_safety"):
            planner.pop(key, None)
        d.pop("smoothing", None)
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def parse_scenario(doc: dict) -> Scenario:
    """Validate a parsed JSON document into a Scenario (fail-closed)."""
    raw = json.loads(json.dumps(doc))  # defensive copy, also rejects non-JSON types
    d = _expect_mapping(dict(doc), "")
    version = _take(d, "schema_version", "")
    if version != SCHEMA_VERSION:
        _fail("schema_version", f"unsupported version {version!r} (expected {SCHEMA_VERSION})")

    orbit = _expect_mapping(_take(d, "orbit", ""), "orbit")
    omega = _number(_take(orbit, "omega_rad_per_s", "orbit"), "orbit.omega_rad_per_s", positive=True)
    _no_extras(orbit, "orbit")

    boxd = _expect_mapping(_take(d, "state_space_box", ""), "state_space_box")
    lower = _vector(_take(boxd, "lower", "state_space_box"), "state_space_box.lower", 6)
    upper = _vector(_take(boxd, "upper", "state_space_box"), "state_space_box.upper", 6)
    _no_extras(boxd, "state_space_box")
    if not np.all(lower < upper):
        _fail("state_space_box", "lower must be strictly below upper")
    box = StateSpaceBox(lower, upper)

    kozd = _expect_mapping(_take(d, "koz", ""), "koz")
    semi = _vector(_take(kozd, "semi_axes_m", "koz"), "koz.semi_axes_m", 3)
    _no_extras(kozd, "koz")
    if not np.all(semi > 0):
        _fail("koz.semi_axes_m", "semi-axes must be positive")
    koz = EllipsoidKoz(semi)

    cones = []
    cone_list = _take(d, "antenna_cones", "")
    if not isinstance(cone_list, list):
        _fail("antenna_cones", "expected a list")
    for i, cd in enumerate(cone_list):
        path = f"antenna_cones[{i}]"
        cd = _expect_mapping(cd, path)
        cones.append(
            ConeObstacle(
                apex=_vector(_take(cd, "apex_m", path), f"{path}.apex_m", 3),
                axis=_vector(_take(cd, "axis", path), f"{path}.axis", 3),
                half_angle=math.radians(
                    _number(_take(cd, "half_angle_deg", path), f"{path}.half_angle_deg", positive=True)
                ),
                height=_number(_take(cd, "height_m", path), f"{path}.height_m", positive=True),
            )
        )
        _no_extras(cd, path)

    sphere = TargetSphere(
        _number(_take(d, "target_sphere_radius_m", ""), "target_sphere_radius_m", positive=True)
    )

    ch = _expect_mapping(_take(d, "chaser", ""), "chaser")
    radius = _number(_take(ch, "circumscribing_radius_m", "chaser"), "chaser.circumscribing_radius_m", nonneg=True)
    pl = _expect_mapping(_take(ch, "plume", "chaser"), "chaser.plume")
    plume = PlumeModel(
        half_angle=math.radians(_number(_take(pl, "half_angle_deg", "chaser.plume"), "chaser.plume.half_angle_deg", positive=True)),
        height=_number(_take(pl, "height_m", "chaser.plume"), "chaser.plume.height_m", positive=True),
    )
    _no_extras(pl, "chaser.plume")
    thr_list = _take(ch, "thrusters", "chaser")
    if not isinstance(thr_list, list) or not thr_list:
        _fail("chaser.thrusters", "expected a non-empty list")
    pos, dirs, lob, hib = [], [], [], []
    for i, td in enumerate(thr_list):
        path = f"chaser.thrusters[{i}]"
        td = _expect_mapping(td, path)
        pos.append(_vector(_take(td, "position_m", path), f"{path}.position_m", 3))
        dirs.append(_vector(_take(td, "direction", path), f"{path}.direction", 3))
        lob.append(_number(_take(td, "dv_min_mps", path, required=False, default=0.0), f"{path}.dv_min_mps", nonneg=True))
        cap = _take(td, "dv_max_mps", path, required=False, default=None)
        hib.append(math.inf if cap is None else _number(cap, f"{path}.dv_max_mps", positive=True))
        _no_extras(td, path)
    try:
        thrusters = ThrusterConfig(np.array(pos), np.array(dirs), np.array(lob), np.array(hib))
    except ValueError as exc:
        _fail("chaser.thrusters", str(exc))
    _no_extras(ch, "chaser")

    ft = _take(d, "fault_tolerance", "")
    if not isinstance(ft, int) or isinstance(ft, bool) or not 0 <= ft <= thrusters.count:
        _fail("fault_tolerance", "expected an integer in [0, thruster count]")

    init = _expect_mapping(_take(d, "initial_state", ""), "initial_state")
    x_init = make_state(
        _vector(_take(init, "position_m", "initial_state"), "initial_state.position_m", 3),
        _vector(_take(init, "velocity_mps", "initial_state"), "initial_state.velocity_mps", 3),
    )
    _no_extras(init, "initial_state")

    wp_list = _take(d, "waypoints", "")
    if not isinstance(wp_list, list) or not wp_list:
        _fail("waypoints", "expected a non-empty list")
    waypoints = []
    for i, wd in enumerate(wp_list):
        path = f"waypoints[{i}]"
        wd = _expect_mapping(wd, path)
        waypoints.append(
            Waypoint(
                position=_vector(_take(wd, "position_m", path), f"{path}.position_m", 3),
                velocity=_vector(_take(wd, "velocity_mps", path), f"{path}.velocity_mps", 3),
                eps_r=_number(_take(wd, "eps_r_m", path), f"{path}.eps_r_m", positive=True),
                eps_v=_number(_take(wd, "eps_v_mps", path), f"{path}.eps_v_mps", positive=True),
            )
        )
        _no_extras(wd, path)

    pd = _expect_mapping(_take(d, "planner", ""), "planner")
    n = _take(pd, "samples_per_leg", "planner")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        _fail("planner.samples_per_leg", "expected a positive integer")
    vel_margin = _take(pd, "velocity_margin_mps", "planner", required=False, default=None)
    planner = PlannerParams(
        samples_per_leg=n,
        j_bar=_number(_take(pd, "j_bar_mps", "planner"), "planner.j_bar_mps", positive=True),
        t_max_frac=_number(_take(pd, "t_max_frac", "planner"), "planner.t_max_frac", positive=True),
        dt_frac=_number(_take(pd, "dt_frac", "planner"), "planner.dt_frac", positive=True),
        goal_fraction=_number(_take(pd, "goal_fraction", "planner"), "planner.goal_fraction", positive=True),
        merge_mode=_boolean(_take(pd, "merge_mode", "planner", required=False, default=True), "planner.merge_mode"),
        strict_safety=_boolean(_take(pd, "strict_safety", "planner", required=False, default=False), "planner.strict_safety"),
        planar=_boolean(_take(pd, "planar", "planner", required=False, default=True), "planner.planar"),
        exact_convergence=_boolean(_take(pd, "exact_convergence", "planner", required=False, default=False), "planner.exact_convergence"),
        sample_position_padding_m=_number(
            _take(pd, "sample_position_padding_m", "planner", required=False, default=60.0),
            "planner.sample_position_padding_m", positive=True),
        velocity_margin_mps=None if vel_margin is None else _number(vel_margin, "planner.velocity_margin_mps", positive=True),
    )
    if planner.t_max_frac >= 1.0:
        _fail("planner.t_max_frac", "must be below one orbital period")
    _no_extras(pd, "planner")

    sd = _expect_mapping(_take(d, "smoothing", ""), "smoothing")
    mode = _take(sd, "mode", "smoothing", required=False, default="per_leg")
    if mode not in ("per_leg", "whole"):
        _fail("smoothing.mode", "must be 'per_leg' or 'whole'")
    smoothing = SmoothingParams(
        enabled=_boolean(_take(sd, "enabled", "smoothing"), "smoothing.enabled"),
        alpha_tol=_number(_take(sd, "alpha_tol", "smoothing", required=False, default=1.0 / 64.0), "smoothing.alpha_tol", positive=True),
        mode=mode,
    )
    if not smoothing.alpha_tol < 1.0:
        _fail("smoothing.alpha_tol", "must be below 1")
    _no_extras(sd, "smoothing")

    _no_extras(d, "")
    if planner.planar:
        for i, wp in enumerate(waypoints):
            if wp.position[2] != 0.0 or wp.velocity[2] != 0.0:
                _fail(f"waypoints[{i}]", "planar scenario requires zero out-of-plane components")
        if x_init[2] != 0.0 or x_init[5] != 0.0:
            _fail("initial_state", "planar scenario requires zero out-of-plane components")

    return Scenario(
        omega=omega,
        state_space_box=box,
        koz=koz,
        antenna_cones=tuple(cones),
        target_sphere=sphere,
        chaser_radius=radius,
        plume=plume,
        thrusters=thrusters,
        fault_tolerance=ft,
        initial_state=x_init,
        waypoints=tuple(waypoints),
        planner=planner,
        smoothing=smoothing,
        raw=raw,
    )


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"(file): not valid JSON: {exc}") from exc
    return parse_scenario(doc)
