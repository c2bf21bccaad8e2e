"""Obstacle primitives, plume impingement, and trajectory feasibility.

The chaser is treated as a point at its center of mass; every obstacle is
inflated once, at environment construction, by the chaser circumscribing
radius.  Obstacles are closed sets: a state exactly on a boundary counts as
a collision.  Trajectory checks evaluate fixed-step grid points plus burn
instants and the terminal time; segments between grid points are not checked
(the inflation budget covers them).

Primitives: an ellipsoidal keep-out zone centered on the target, truncated
right-circular cones (antenna lobes, exhaust plumes), an axis-aligned
state-space box, and the target circumscribing sphere used for plume
impingement tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .backend import get_kernels
from .dynamics import BurnSchedule, OrbitModel, propagate_schedule_grid


@dataclass(frozen=True)
class EllipsoidKoz:
    """Keep-out ellipsoid centered at the origin; membership is position-only."""

    semi_axes: np.ndarray

    def __post_init__(self):
        ax = np.asarray(self.semi_axes, dtype=np.float64)
        if ax.shape != (3,) or not np.all(ax > 0.0):
            raise ValueError("KOZ needs three positive semi-axes")
        object.__setattr__(self, "semi_axes", ax)

    def inflated(self, r: float) -> "EllipsoidKoz":
        """Conservative cover of the Minkowski sum with a ball of radius r.

        Uniform scaling by (1 + r / a_min) dominates the offset surface for
        every support direction; per-axis addition of r would not.
        """
        scale = 1.0 + r / float(self.semi_axes.min())
        return EllipsoidKoz(self.semi_axes * scale)

    def contains(self, pos) -> bool:
        q = float(np.sum((np.asarray(pos) / self.semi_axes) ** 2))
        return q <= 1.0

    @property
    def bounding_radius(self) -> float:
        return float(self.semi_axes.max())


@dataclass(frozen=True)
class ConeObstacle:
    """Truncated solid right-circular cone (closed)."""

    apex: np.ndarray
    axis: np.ndarray
    half_angle: float
    height: float

    def __post_init__(self):
        apex = np.asarray(self.apex, dtype=np.float64)
        axis = np.asarray(self.axis, dtype=np.float64)
        nrm = np.linalg.norm(axis)
        if nrm == 0.0:
            raise ValueError("cone axis must be nonzero")
        object.__setattr__(self, "apex", apex)
        object.__setattr__(self, "axis", axis / nrm)
        if not (0.0 < self.half_angle < np.pi / 2.0):
            raise ValueError("half angle must lie in (0, pi/2)")
        if not self.height > 0.0:
            raise ValueError("height must be positive")

    def inflated(self, r: float) -> "ConeObstacle":
        """Cover of the Minkowski sum with a ball: apex recessed by r/sin(beta),
        height extended so the offset base stays inside."""
        sb = math.sin(self.half_angle)
        back = r / sb
        return ConeObstacle(
            self.apex - self.axis * back,
            self.axis,
            self.half_angle,
            self.height + back + r,
        )

    def contains(self, pos) -> bool:
        rel = np.asarray(pos, dtype=np.float64) - self.apex
        s = float(rel @ self.axis)
        if s < 0.0 or s > self.height:
            return False
        rad2 = float(rel @ rel) - s * s
        return rad2 <= (s * math.tan(self.half_angle)) ** 2

    def bounding_sphere(self):
        half = 0.5 * self.height
        center = self.apex + self.axis * half
        radius = math.hypot(half, self.height * math.tan(self.half_angle))
        return center, radius


@dataclass(frozen=True)
class StateSpaceBox:
    """Axis-aligned bounds on the state; velocity bounds may be infinite."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=np.float64)
        hi = np.asarray(self.upper, dtype=np.float64)
        if lo.shape != (6,) or hi.shape != (6,):
            raise ValueError("box bounds must be 6-vectors")
        if not np.all(lo < hi):
            raise ValueError("box lower bounds must be strictly below upper bounds")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def contains(self, x) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


@dataclass(frozen=True)
class PlumeModel:
    """Exhaust plume cone generated opposite a thruster's impulse direction."""

    half_angle: float
    height: float

    def __post_init__(self):
        if not (0.0 < self.half_angle < np.pi / 2.0) or not self.height > 0.0:
            raise ValueError("invalid plume geometry")


@dataclass(frozen=True)
class TargetSphere:
    radius: float

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValueError("radius must be positive")


def cone_sphere_intersects(apex, axis, half_angle, height, center, radius) -> bool:
    """Exact closed test: does the truncated solid cone meet the solid sphere?

    Works in the (s, rho) half-plane of the cone axis, where the cone is the
    triangle (0,0)-(H, H tan b)-(H, 0); the 3-D distance to the solid of
    revolution equals the 2-D point-triangle distance there.
    """
    apex = np.asarray(apex, dtype=np.float64)
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    rel = np.asarray(center, dtype=np.float64) - apex
    s = float(rel @ axis)
    rho = math.sqrt(max(0.0, float(rel @ rel) - s * s))
    tb = math.tan(half_angle)

    # Inside the triangle?
    if 0.0 <= s <= height and rho <= s * tb:
        return True
    d2 = _point_triangle_dist2(s, rho, height, tb)
    return d2 <= radius * radius


def _point_segment_dist2(px, py, ax, ay, bx, by):
    vx, vy = bx - ax, by - ay
    t = ((px - ax) * vx + (py - ay) * vy) / (vx * vx + vy * vy)
    t = min(1.0, max(0.0, t))
    dx, dy = px - (ax + t * vx), py - (ay + t * vy)
    return dx * dx + dy * dy


def _point_triangle_dist2(s, rho, height, tanb):
    """Distance^2 from (s, rho>=0) to the closed triangle (0,0),(H,H*tanb),(H,0)."""
    d2 = _point_segment_dist2(s, rho, 0.0, 0.0, height, height * tanb)  # slant
    d2 = min(d2, _point_segment_dist2(s, rho, height, height * tanb, height, 0.0))  # base
    d2 = min(d2, _point_segment_dist2(s, rho, 0.0, 0.0, height, 0.0))  # axis edge
    return d2


@dataclass(frozen=True)
class Environment:
    """Immutable obstacle world, pre-inflated by the chaser radius.

    Construct through :func:`make_environment` so inflation happens exactly
    once.
    """

    box: StateSpaceBox
    koz: EllipsoidKoz
    cones: tuple
    target_sphere: TargetSphere
    plume: PlumeModel
    chaser_radius: float
    _arrays: dict = field(default_factory=dict, repr=False, compare=False)

    def as_arrays(self):
        """Flat ndarray view consumed by the feasibility kernels."""
        if not self._arrays:
            cones = list(self.cones)
            c_apex = np.array([c.apex for c in cones]).reshape(-1, 3)
            c_axis = np.array([c.axis for c in cones]).reshape(-1, 3)
            c_tanb = np.array([math.tan(c.half_angle) for c in cones])
            c_h = np.array([c.height for c in cones])
            bcs = [c.bounding_sphere() for c in cones]
            c_bc = np.array([b[0] for b in bcs]).reshape(-1, 3)
            c_br = np.array([b[1] for b in bcs])
            self._arrays.update(
                box_lo=self.box.lower.copy(),
                box_hi=self.box.upper.copy(),
                koz_inv_sq=1.0 / self.koz.semi_axes**2,
                koz_rmax=self.koz.bounding_radius,
                c_apex=c_apex,
                c_axis=c_axis,
                c_tanb=c_tanb,
                c_h=c_h,
                c_bc=c_bc,
                c_br=c_br,
            )
        return self._arrays


def make_environment(box: StateSpaceBox, koz: EllipsoidKoz, cones, target_sphere: TargetSphere,
                     plume: PlumeModel, chaser_radius: float) -> Environment:
    if chaser_radius < 0.0:
        raise ValueError("chaser radius must be non-negative")
    return Environment(
        box=box,
        koz=koz.inflated(chaser_radius),
        cones=tuple(c.inflated(chaser_radius) for c in cones),
        target_sphere=target_sphere,
        plume=plume,
        chaser_radius=chaser_radius,
    )


def feasible_states(states, env: Environment) -> np.ndarray:
    """Vectorized free-space membership for (m, 6) states."""
    a = env.as_arrays()
    states = np.ascontiguousarray(states, dtype=np.float64).reshape(-1, 6)
    return get_kernels().feasible_points(
        states, a["box_lo"], a["box_hi"], a["koz_inv_sq"], a["koz_rmax"],
        a["c_apex"], a["c_axis"], a["c_tanb"], a["c_h"], a["c_bc"], a["c_br"],
    )


def point_feasible(x, env: Environment) -> bool:
    """True iff x is inside the box, outside the KOZ, and outside every cone."""
    return bool(feasible_states(np.asarray(x)[None, :], env)[0])


def point_feasible_unpruned(x, env: Environment) -> bool:
    """Reference predicate without bounding-volume shortcuts (for soundness tests)."""
    x = np.asarray(x, dtype=np.float64)
    if not env.box.contains(x):
        return False
    if env.koz.contains(x[0:3]):
        return False
    return not any(c.contains(x[0:3]) for c in env.cones)


def check_times(t0: float, t1: float, dt: float, burn_times=()) -> np.ndarray:
    """Fixed-step grid from t0 plus burn instants and the terminal time."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    n = int(math.floor((t1 - t0) / dt)) + 1
    ts = t0 + np.arange(n) * dt
    extra = [t for t in burn_times if t0 <= t <= t1]
    ts = np.unique(np.concatenate([ts, np.asarray(extra, dtype=np.float64), [t1]]))
    return ts


def trajectory_feasible(model: OrbitModel, x0, schedule: BurnSchedule, t0: float, t1: float,
                        env: Environment, dt: float) -> bool:
    """Point-wise feasibility of the propagated trajectory on [t0, t1]."""
    ts = check_times(t0, t1, dt, schedule.taus)
    states = propagate_schedule_grid(model, x0, schedule, ts)
    return bool(feasible_states(states, env).all())
