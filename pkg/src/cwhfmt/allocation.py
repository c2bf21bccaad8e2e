"""Thruster delta-v allocation and the attitude policy.

Commanded net burns are resolved in the body frame by a constant
nadir-pointing attitude, then distributed over the thruster set by the
minimum-effort linear program:

    minimize    sum_k m_k
    subject to  sum_k  d_k (eta_k m_k)          = dv_net      (3 rows)
                sum_k (rho_k x d_k)(eta_k m_k)  = moment_net  (3 rows)
                dv_min_k <= m_k <= dv_max_k

solved by a dense two-phase simplex with Bland's rule -- the problems are
tiny (K <= ~24 variables, 6 equality rows) and determinism matters more than
speed.  Abort (collision-avoidance) burns use a separate turn-burn-turn
relaxation; see :func:`abort_burn_feasible`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

FEAS_TOL = 1e-9


class Infeasible(Exception):
    """The failure mode cannot realize the commanded burn."""


# Nadir-pointing attitude: body rows in LVLH coordinates. Body x = in-track
# (+dy), body y = -dz (completes the right-handed triad), body z = nadir
# face (-dx). Constant in the LVLH frame, so the policy is state-independent.
_NADIR_ROTATION = np.array(
    [
        [0.0, 1.0, 0.0],
        [0.0, 0.0, -1.0],
        [-1.0, 0.0, 0.0],
    ]
)


def attitude_policy(x=None) -> np.ndarray:
    """Rotation LVLH -> body for the nadir-pointing profile (state-independent)."""
    return _NADIR_ROTATION.copy()


@dataclass(frozen=True)
class ThrusterConfig:
    """Body-frame thruster geometry and impulse bounds."""

    positions: np.ndarray  # (K, 3) lever arms from the center of mass [m]
    directions: np.ndarray  # (K, 3) unit impulse directions
    dv_min: np.ndarray  # (K,) lower bounds [m/s]
    dv_max: np.ndarray  # (K,) upper bounds [m/s], may be inf

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64).reshape(-1, 3)
        dirs = np.asarray(self.directions, dtype=np.float64).reshape(-1, 3)
        k = pos.shape[0]
        if k < 1 or dirs.shape[0] != k:
            raise ValueError("need at least one thruster; positions/directions must align")
        norms = np.linalg.norm(dirs, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("thruster directions must be unit vectors")
        lo = np.asarray(self.dv_min, dtype=np.float64).reshape(k)
        hi = np.asarray(self.dv_max, dtype=np.float64).reshape(k)
        if np.any(lo < 0.0) or np.any(hi < lo):
            raise ValueError("bounds must satisfy 0 <= dv_min <= dv_max")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "dv_min", lo)
        object.__setattr__(self, "dv_max", hi)

    @property
    def count(self) -> int:
        return self.positions.shape[0]

    def torque_arms(self) -> np.ndarray:
        return np.cross(self.positions, self.directions)


@dataclass(frozen=True)
class FailureMask:
    """Per-thruster availability flags (True = operational)."""

    eta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "eta", np.asarray(self.eta, dtype=bool).reshape(-1))

    @property
    def n_failed(self) -> int:
        return int((~self.eta).sum())


def enumerate_failure_modes(k: int, f: int):
    """All masks with at most f thrusters failed, lexicographic in failed-index tuples."""
    if not 0 <= f <= k:
        raise ValueError("need 0 <= F <= K")
    masks = []
    for nf in range(f + 1):
        for failed in itertools.combinations(range(k), nf):
            eta = np.ones(k, dtype=bool)
            eta[list(failed)] = False
            masks.append(FailureMask(eta))
    return masks


@dataclass(frozen=True)
class AllocationResult:
    magnitudes: np.ndarray  # (K,) per-thruster impulse, zero where failed
    fuel: float


def allocate(dv_net_body, config: ThrusterConfig, mask: FailureMask | None = None,
             moment_net=None) -> AllocationResult:
    """Minimum-effort allocation of a body-frame net burn (torque-free by default)."""
    dv_net = np.asarray(dv_net_body, dtype=np.float64).reshape(3)
    moment = np.zeros(3) if moment_net is None else np.asarray(moment_net, dtype=np.float64).reshape(3)
    eta = np.ones(config.count, dtype=bool) if mask is None else mask.eta
    if eta.size != config.count:
        raise ValueError("mask length must match thruster count")
    active = np.flatnonzero(eta)
    if active.size == 0:
        if np.allclose(dv_net, 0.0) and np.allclose(moment, 0.0):
            return AllocationResult(np.zeros(config.count), 0.0)
        raise Infeasible("all thrusters failed")

    a_eq = np.vstack([config.directions[active].T, config.torque_arms()[active].T])
    b_eq = np.concatenate([dv_net, moment])
    lo = config.dv_min[active]
    hi = config.dv_max[active]
    x = _simplex_bounded(np.ones(active.size), a_eq, b_eq, lo, hi)
    mags = np.zeros(config.count)
    mags[active] = x
    return AllocationResult(mags, float(x.sum()))


def allocate_lvlh(dv_net_lvlh, config: ThrusterConfig, mask: FailureMask | None = None) -> AllocationResult:
    """Allocation of an LVLH-frame commanded burn under the nadir attitude."""
    r = attitude_policy()
    return allocate(r @ np.asarray(dv_net_lvlh, dtype=np.float64), config, mask)


def abort_burn_feasible(burn_lvlh, config: ThrusterConfig, mask: FailureMask) -> bool:
    """Turn-burn-turn relaxation used for collision-avoidance maneuvers.

    The spacecraft slews to align one available thruster with the burn, so
    the abort is allocatable iff some operational thruster can supply the
    whole magnitude within its impulse bounds.  (Plume clearance is checked
    separately against the resulting anti-burn cone.)
    """
    mag = float(np.linalg.norm(np.asarray(burn_lvlh, dtype=np.float64)))
    if mag == 0.0:
        return True
    ok = mask.eta & (config.dv_min <= mag) & (mag <= config.dv_max)
    return bool(ok.any())


def default_thruster_config(cube_side: float = 1.0, dv_max: float = math.inf) -> ThrusterConfig:
    """Repository-defined chaser geometry: 16 thrusters, 2 per corner of a cube.

    Thrusters on antipodal corners share a direction, so firing such a pair
    equally yields a torque-free net impulse along it.  The eight pair modes
    {+x, +y, -x, +z, -y, -z, +diag, -diag} positively span R^3, making the
    torque-free allocation feasible for every commanded direction with all
    thrusters healthy.  This is a scenario asset, not a value from any
    reference vehicle.
    """
    h = cube_side / 2.0
    d = np.ones(3) / math.sqrt(3.0)
    pair_specs = [
        ((h, h, h), (np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]))),
        ((h, h, -h), (np.array([-1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0]))),
        ((h, -h, h), (np.array([0.0, -1.0, 0.0]), np.array([0.0, 0.0, -1.0]))),
        ((h, -h, -h), (d.copy(), -d.copy())),
    ]
    positions = []
    directions = []
    for corner, dirs in pair_specs:
        for sign in (1.0, -1.0):
            for u in dirs:
                positions.append(sign * np.asarray(corner))
                directions.append(u)
    k = len(positions)
    return ThrusterConfig(
        np.array(positions),
        np.array(directions),
        np.zeros(k),
        np.full(k, dv_max),
    )


def _simplex_bounded(c, a_eq, b_eq, lo, hi):
    """min c'x s.t. a_eq x = b_eq, lo <= x <= hi, via standard-form simplex.

    Finite upper bounds become explicit slack rows.  Raises Infeasible when
    phase 1 cannot zero the artificial objective.
    """
    n = c.size
    shift = lo.copy()
    b = b_eq - a_eq @ shift
    ub = hi - lo
    fin = np.isfinite(ub)
    n_sl = int(fin.sum())
    m = a_eq.shape[0] + n_sl
    a = np.zeros((m, n + n_sl))
    a[: a_eq.shape[0], :n] = a_eq
    rhs = np.concatenate([b, ub[fin]])
    for row, j in enumerate(np.flatnonzero(fin)):
        a[a_eq.shape[0] + row, j] = 1.0
        a[a_eq.shape[0] + row, n + row] = 1.0
    cost = np.concatenate([c, np.zeros(n_sl)])
    x = _simplex_standard(cost, a, rhs)
    if np.any(x[:n] > ub + 1e-7):
        raise Infeasible("upper bound violated")  # defensive; slacks enforce this
    return x[:n] + shift


def _simplex_standard(c, a, b):
    """Two-phase dense tableau simplex with Bland's rule (deterministic)."""
    m, n = a.shape
    a = a.copy()
    b = b.copy()
    neg = b < 0.0
    a[neg] *= -1.0
    b[neg] *= -1.0

    # Phase 1: artificial basis.
    tab = np.zeros((m + 1, n + m + 1))
    tab[:m, :n] = a
    tab[:m, n : n + m] = np.eye(m)
    tab[:m, -1] = b
    tab[m, n : n + m] = 1.0
    tab[m] -= tab[:m].sum(axis=0)
    basis = list(range(n, n + m))
    _simplex_iterate(tab, basis, n + m)
    if tab[m, -1] < -FEAS_TOL * max(1.0, np.abs(b).max()):
        raise Infeasible("equality system has no feasible point within bounds")

    # Drive remaining artificial variables out of the basis where possible.
    for i in range(m):
        if basis[i] >= n:
            row = tab[i, :n]
            piv = np.flatnonzero(np.abs(row) > 1e-10)
            if piv.size:
                _pivot(tab, basis, i, int(piv[0]))

    # Phase 2 on the original objective, restricted to structural columns.
    keep = [j for j in range(n)] + [n + m]
    rows = [i for i in range(m) if basis[i] < n]
    tab2 = np.zeros((len(rows) + 1, n + 1))
    for r, i in enumerate(rows):
        tab2[r, :n] = tab[i, :n]
        tab2[r, -1] = tab[i, -1]
    basis2 = [basis[i] for i in rows]
    tab2[-1, :n] = c
    for r, j in enumerate(basis2):
        tab2[-1] -= c[j] * tab2[r]
    _simplex_iterate(tab2, basis2, n)
    x = np.zeros(n)
    for r, j in enumerate(basis2):
        x[j] = tab2[r, -1]
    return np.maximum(x, 0.0)


def _simplex_iterate(tab, basis, n_cols):
    m = len(basis)
    while True:
        enter = -1
        for j in range(n_cols):  # Bland: first improving column
            if tab[m, j] < -FEAS_TOL:
                enter = j
                break
        if enter < 0:
            return
        leave = -1
        best = math.inf
        for i in range(m):
            if tab[i, enter] > FEAS_TOL:
                ratio = tab[i, -1] / tab[i, enter]
                if ratio < best - 1e-15 or (
                    abs(ratio - best) <= 1e-15 and (leave < 0 or basis[i] < basis[leave])
                ):
                    best = ratio
                    leave = i
        if leave < 0:
            raise Infeasible("objective unbounded below (malformed problem)")
        _pivot(tab, basis, leave, enter)


def _pivot(tab, basis, row, col):
    tab[row] /= tab[row, col]
    for i in range(tab.shape[0]):
        if i != row and tab[i, col] != 0.0:
            tab[i] -= tab[i, col] * tab[row]
    basis[row] = col
