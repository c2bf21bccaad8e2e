"""Active-safety certification: one-burn circularization aborts.

If control degrades at some state, the escape policy is: coast, then fire a
single burn that circularizes the relative orbit at a radius outside the
keep-out zone's radial band.  Circularized orbits with |dx| >= rho_x form a
positively-invariant set -- the planar projection can never re-enter the KOZ
-- so the abort is safe indefinitely once reached.

The circularization time is a one-dimensional optimization in the target's
sweep angle theta, solved analytically: interior stationary points satisfy a
closed-form tan(2 theta) condition, the constraint boundary contributes the
roots of |dx(theta)| = rho_x, and the search window ends at the first KOZ
contact of the coast (or one full orbit).  A state is certified against a
failure tolerance F when the chosen abort is allocatable and plume-clear
under every failure mode with at most F thrusters out, and the abort arcs
respect the box/cone constraints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .allocation import FailureMask, ThrusterConfig, abort_burn_feasible, enumerate_failure_modes
from .backend import get_kernels
from .dynamics import OrbitModel, propagate_coast
from .geometry import Environment, cone_sphere_intersects, feasible_states

_BISECT_ITERS = 60
_INVARIANT_TOL = 1e-9


class UnsafeState(Exception):
    """No feasible collision-avoidance maneuver exists from this state."""


@dataclass(frozen=True)
class InvariantSetSpec:
    """Radial band half-width: circularized orbits with |dx| >= rho_x are safe."""

    rho_x: float

    def __post_init__(self):
        if not self.rho_x > 0.0:
            raise ValueError("rho_x must be positive")


def is_invariant(model: OrbitModel, x, spec: InvariantSetSpec, tol: float = _INVARIANT_TOL) -> bool:
    """Membership in the safe circularized set (tolerances on the velocity rows)."""
    x = np.asarray(x, dtype=np.float64)
    return (
        abs(x[0]) >= spec.rho_x
        and abs(x[3]) <= tol
        and abs(x[4] + 1.5 * model.omega * x[0]) <= tol
    )


def circularization_burn(model: OrbitModel, x) -> np.ndarray:
    """Single burn putting the state on a circularized relative orbit.

    Zeroes the radial and out-of-plane velocity and sets the in-track rate to
    the circular profile -1.5 * omega * dx.
    """
    x = np.asarray(x, dtype=np.float64)
    return np.array([-x[3], -1.5 * model.omega * x[0] - x[4], -x[5]])


def dvcirc_sq_gradient_coeffs(model: OrbitModel, x_fail):
    """(A_s, A_c) with d(|dv_circ|^2)/d(theta) = A_s sin(2 theta) + A_c cos(2 theta)."""
    w = model.omega
    dx, _, dz, vx, vy, vz = np.asarray(x_fail, dtype=np.float64)
    a = 3.0 * w * dx + 2.0 * vy
    a_s = 0.75 * a * a - 0.75 * vx * vx + w * w * dz * dz - vz * vz
    a_c = 1.5 * vx * a - 2.0 * w * vz * dz
    return a_s, a_c


@dataclass(frozen=True)
class CamResult:
    """One abort plan: coast for Th, then circularize."""

    theta_star: float
    Th: float
    dv_circ: np.ndarray
    post_state: np.ndarray
    x_fail: np.ndarray

    @property
    def cost(self) -> float:
        return float(np.linalg.norm(self.dv_circ))

    def coast_states(self, model: OrbitModel, dt: float) -> np.ndarray:
        """Coast arc from the failure state to the burn at dt resolution."""
        ts = _arc_times(0.0, self.Th, dt)
        from .dynamics import BurnSchedule, propagate_schedule_grid

        return propagate_schedule_grid(model, self.x_fail, BurnSchedule(), ts)


def _arc_times(t0, t1, dt):
    n = int(math.floor((t1 - t0) / dt)) + 1
    ts = t0 + np.arange(n) * dt
    if ts[-1] < t1:
        ts = np.append(ts, t1)
    return ts


def _koz_quadratic(koz, model, x_fail, thetas):
    """q(theta) = sum((coast position / semi-axes)^2); q <= 1 is contact."""
    ker = get_kernels()
    st = ker.propagate_grid(model.omega, np.asarray(x_fail, dtype=np.float64),
                            np.empty(0), np.empty((0, 3)), thetas / model.omega)
    inv = 1.0 / koz.semi_axes**2
    return (st[:, 0:3] ** 2 * inv).sum(axis=1), st


def optimal_cam(model: OrbitModel, x_fail, koz, spec: InvariantSetSpec, dt: float) -> CamResult:
    """Minimum-cost feasible circularization along the coast from x_fail.

    Candidates: the window ends {0, theta_max}, the stationary points of the
    squared burn cost (all pi/2-shifted branches inside the window), and the
    radial-band boundary crossings |dx(theta)| = rho_x.  A candidate is
    feasible when the post-burn radius clears the band.  theta_max is the
    first KOZ contact of the coast, capped at one full sweep.

    Raises UnsafeState if x_fail starts inside the KOZ or no candidate is
    feasible.
    """
    x_fail = np.asarray(x_fail, dtype=np.float64)
    if koz.contains(x_fail[0:3]):
        raise UnsafeState("failure state inside the keep-out zone")

    w = model.omega
    dtheta = w * dt
    thetas = np.arange(0.0, 2.0 * np.pi + dtheta, dtheta)
    thetas[-1] = min(thetas[-1], 2.0 * np.pi)
    q, states = _koz_quadratic(koz, model, x_fail, thetas)

    hit = np.flatnonzero(q <= 1.0)
    if hit.size:
        k = int(hit[0])
        # Bisect the contact in [theta_{k-1}, theta_k]; keep the outside end.
        lo, hi = thetas[k - 1], thetas[k]
        for _ in range(_BISECT_ITERS):
            mid = 0.5 * (lo + hi)
            qm, _ = _koz_quadratic(koz, model, x_fail, np.array([mid]))
            if qm[0] > 1.0:
                lo = mid
            else:
                hi = mid
        theta_max = lo
        grid = thetas[:k]
        grid_states = states[:k]
    else:
        theta_max = float(thetas[-1])
        grid = thetas
        grid_states = states

    cands = [0.0, theta_max]

    a_s, a_c = dvcirc_sq_gradient_coeffs(model, x_fail)
    if a_s != 0.0 or a_c != 0.0:
        base = 0.5 * math.atan2(-a_c, a_s)
        k0 = math.ceil((0.0 - base) / (np.pi / 2.0))
        t = base + k0 * np.pi / 2.0
        while t <= theta_max + 1e-15:
            if t >= 0.0:
                cands.append(min(t, theta_max))
            t += np.pi / 2.0

    # Radial-band boundary crossings dx(theta) = +-rho_x on the coast window.
    dxg = grid_states[:, 0]
    for level in (spec.rho_x, -spec.rho_x):
        sgn = np.sign(dxg - level)
        flips = np.flatnonzero(sgn[:-1] * sgn[1:] < 0.0)
        for k in flips:
            lo, hi = grid[k], grid[k + 1]
            flo = _coast_dx(model, x_fail, lo) - level
            for _ in range(_BISECT_ITERS):
                mid = 0.5 * (lo + hi)
                fm = _coast_dx(model, x_fail, mid) - level
                if (fm < 0.0) == (flo < 0.0):
                    lo = mid
                    flo = fm
                else:
                    hi = mid
            cands.append(0.5 * (lo + hi))

    cands = np.unique(np.clip(np.asarray(cands, dtype=np.float64), 0.0, theta_max))
    ker = get_kernels()
    dx_at = np.array([_coast_dx(model, x_fail, t) for t in cands])
    feas = np.abs(dx_at) >= spec.rho_x - _INVARIANT_TOL
    if not feas.any():
        raise UnsafeState("no circularization candidate clears the radial band")
    costs = ker.dvcirc_sq_profile(model.omega, x_fail, cands)
    costs = np.where(feas, costs, np.inf)
    best = float(costs.min())
    # Exact ties (e.g. half-orbit-apart apses) resolve to the earliest burn.
    kbest = int(np.flatnonzero(costs <= best + 1e-12 * max(1.0, best))[0])
    theta_star = float(cands[kbest])

    burn_state = propagate_coast(model, x_fail, theta_star / w)
    dv = circularization_burn(model, burn_state)
    post = burn_state.copy()
    post[3:6] += dv
    return CamResult(theta_star, theta_star / w, dv, post, x_fail)


def _coast_dx(model, x_fail, theta):
    th = theta
    c = math.cos(th)
    s = math.sin(th)
    w = model.omega
    return (
        (4.0 - 3.0 * c) * x_fail[0]
        + (s / w) * x_fail[3]
        + (2.0 * (1.0 - c) / w) * x_fail[4]
    )


@dataclass(frozen=True)
class CamCertificate:
    """Per-failure-mode abort verdicts; overall safe iff every mode is feasible."""

    overall: bool
    mode_feasible: np.ndarray
    reason: str
    cam: CamResult | None

    @property
    def n_modes(self) -> int:
        return int(self.mode_feasible.size)


def plume_clear(model, burn_dv, position, env: Environment) -> bool:
    """No impingement of the burn's exhaust cone on the target sphere.

    The plume emanates opposite the net burn from the firing position.  Zero
    burns produce no plume.
    """
    mag = float(np.linalg.norm(burn_dv))
    if mag == 0.0:
        return True
    axis = -np.asarray(burn_dv, dtype=np.float64) / mag
    return not cone_sphere_intersects(
        np.asarray(position, dtype=np.float64),
        axis,
        env.plume.half_angle,
        env.plume.height,
        np.zeros(3),
        env.target_sphere.radius,
    )


def _mode_matrix(masks):
    return np.array([m.eta for m in masks], dtype=bool)


def abort_feasible_modes(burn_dv, config: ThrusterConfig, mode_eta: np.ndarray) -> np.ndarray:
    """Vectorized turn-burn-turn allocability over a (n_modes, K) mask matrix."""
    mag = float(np.linalg.norm(np.asarray(burn_dv, dtype=np.float64)))
    if mag == 0.0:
        return np.ones(mode_eta.shape[0], dtype=bool)
    can = (config.dv_min <= mag) & (mag <= config.dv_max)
    return (mode_eta & can).any(axis=1)


class SafetyCertifier:
    """Caches the failure-mode enumeration and environment views for batch use."""

    def __init__(self, model: OrbitModel, config: ThrusterConfig, env: Environment,
                 fault_tolerance: int, dt: float):
        self.model = model
        self.config = config
        self.env = env
        self.F = int(fault_tolerance)
        self.dt = float(dt)
        self.masks = enumerate_failure_modes(config.count, self.F)
        self.mode_eta = _mode_matrix(self.masks)
        self.spec = InvariantSetSpec(float(env.koz.semi_axes[0]))

    def certify(self, x, prepend_burn=None) -> CamCertificate:
        """Full certificate for one state (optionally with a junction burn
        prepended to the escape sequence, as required after burn merging)."""
        try:
            cam = optimal_cam(self.model, x, self.env.koz, self.spec, self.dt)
        except UnsafeState as exc:
            return CamCertificate(False, np.zeros(len(self.masks), dtype=bool), str(exc), None)

        if not self._arcs_feasible(cam):
            return CamCertificate(False, np.zeros(len(self.masks), dtype=bool), "abort arc infeasible", cam)

        burn_pos = cam.post_state[0:3]
        if not plume_clear(self.model, cam.dv_circ, burn_pos, self.env):
            return CamCertificate(False, np.zeros(len(self.masks), dtype=bool), "abort plume impingement", cam)
        modes = abort_feasible_modes(cam.dv_circ, self.config, self.mode_eta)
        if prepend_burn is not None:
            x = np.asarray(x, dtype=np.float64)
            if not plume_clear(self.model, prepend_burn, x[0:3], self.env):
                return CamCertificate(False, np.zeros(len(self.masks), dtype=bool),
                                      "junction burn plume impingement", cam)
            modes = modes & abort_feasible_modes(prepend_burn, self.config, self.mode_eta)
        overall = bool(modes.all())
        reason = "" if overall else "abort unallocatable in some failure mode"
        return CamCertificate(overall, modes, reason, cam)

    def certify_batch(self, states) -> tuple[np.ndarray, list]:
        """Overall verdicts and certificates for (m, 6) states."""
        states = np.asarray(states, dtype=np.float64).reshape(-1, 6)
        certs = [self.certify(states[i]) for i in range(states.shape[0])]
        return np.array([c.overall for c in certs], dtype=bool), certs

    def _arcs_feasible(self, cam: CamResult) -> bool:
        ker = get_kernels()
        # Coast arc to the burn: full free-space membership at dt resolution.
        if cam.Th > 0.0:
            ts = _arc_times(0.0, cam.Th, self.dt)
            coast = ker.propagate_grid(self.model.omega, cam.x_fail, np.empty(0), np.empty((0, 3)), ts)
            if not feasible_states(coast, self.env).all():
                return False
        # Post-circularization arc: box/cones over one period (KOZ exclusion
        # follows from |dx| >= rho_x, which is exact and periodic).
        ts = _arc_times(0.0, self.model.period, self.dt)
        post = ker.propagate_grid(self.model.omega, cam.post_state, np.empty(0), np.empty((0, 3)), ts)
        return bool(_box_cone_feasible(post, self.env).all())


def _box_cone_feasible(states, env: Environment) -> np.ndarray:
    a = env.as_arrays()
    ker = get_kernels()
    return ker.feasible_points(
        np.ascontiguousarray(states), a["box_lo"], a["box_hi"],
        np.zeros(3), 0.0,  # KOZ disabled
        a["c_apex"], a["c_axis"], a["c_tanb"], a["c_h"], a["c_bc"], a["c_br"],
    )


def passive_safe(model: OrbitModel, x, env: Environment, dt: float, horizon: float) -> bool:
    """Zero-control safety over a finite horizon: the coast must stay free.

    The CAM policy reduces to this check when forced to zero burns.
    """
    ker = get_kernels()
    ts = _arc_times(0.0, horizon, dt)
    coast = ker.propagate_grid(model.omega, np.asarray(x, dtype=np.float64),
                               np.empty(0), np.empty((0, 3)), ts)
    return bool(feasible_states(coast, env).all())
