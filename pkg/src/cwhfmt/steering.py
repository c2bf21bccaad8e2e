"""Minimum-fuel two-impulse steering between relative states.

For a fixed maneuver duration T the transfer is the unique solution of a
6x6 linear system: an intercept burn at departure and a rendezvous burn at
arrival.  The fuel cost is the sum of the two burn 2-norms, and the full
solver minimizes it over T with a coarse grid on (0, t_max] followed by
golden-section refinement inside every bracketed local minimum.  T = 0 is
handled separately: it is feasible only when the endpoints share the same
position, in which case the velocity difference itself is the (single-burn)
solution.

The fixed-T cost always satisfies ``|stacked dv| <= cost <= sqrt(2) |stacked
dv|``, which downstream modules use for reachability bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .backend import get_kernels
from .dynamics import BurnSchedule, OrbitModel

COND_LIMIT = 1e12

# Lower edge of the first-grid-point refinement bracket, as a fraction of the
# grid step. Keeps golden-section evaluations away from the T -> 0 singularity.
_FIRST_BRACKET_FLOOR = 0.125


class SingularDuration(Exception):
    """Maneuver duration too close to 0 or a period multiple (Phi_v ill-conditioned)."""


class NoFeasibleSolution(Exception):
    """Every candidate duration violates the per-burn magnitude cap."""


@dataclass(frozen=True)
class SteeringLimits:
    """Search limits for the duration optimization.

    t_max must stay below one orbital period (singular impulse matrix);
    dv_max caps each burn's magnitude individually.
    """

    t_max: float
    dv_max: float = math.inf
    t_grid: int = 64
    refine_tol: float | None = None

    def __post_init__(self):
        if not (self.t_max > 0.0 and math.isfinite(self.t_max)):
            raise ValueError("t_max must be positive and finite")
        if self.t_grid < 16:
            raise ValueError("t_grid must be at least 16")
        if self.dv_max <= 0.0:
            raise ValueError("dv_max must be positive")
        if self.refine_tol is None:
            object.__setattr__(self, "refine_tol", self.t_max * 1e-4)

    def validate_against(self, model: OrbitModel):
        if self.t_max >= model.period:
            raise ValueError("t_max must be shorter than one orbital period")


@dataclass(frozen=True)
class SteeringSolution:
    """Two-impulse transfer: dv1 at relative time 0, dv2 at time T."""

    dv1: np.ndarray
    dv2: np.ndarray
    T: float
    cost: float

    def schedule(self, t0: float = 0.0) -> BurnSchedule:
        return BurnSchedule(
            np.array([t0, t0 + self.T]), np.vstack([self.dv1, self.dv2])
        )

    @property
    def stacked_norm(self) -> float:
        return float(np.sqrt(np.dot(self.dv1, self.dv1) + np.dot(self.dv2, self.dv2)))


def _solution_from_dv(dv1, dv2, T) -> SteeringSolution:
    dv1 = np.asarray(dv1, dtype=np.float64)
    dv2 = np.asarray(dv2, dtype=np.float64)
    cost = float(np.sqrt((dv1**2).sum()) + np.sqrt((dv2**2).sum()))
    return SteeringSolution(dv1, dv2, float(T), cost)


def steer_fixed_T(model: OrbitModel, x0, xf, T: float, cond_limit: float = COND_LIMIT) -> SteeringSolution:
    """Unique two-impulse transfer achieving xf at elapsed time T.

    Raises
    ------
    SingularDuration
        If the impulse matrix condition number exceeds ``cond_limit`` (T too
        close to 0 or to a period multiple), or T == 0 with unequal positions.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    xf = np.asarray(xf, dtype=np.float64)
    if T == 0.0:
        if np.array_equal(x0[0:3], xf[0:3]):
            return _solution_from_dv(np.zeros(3), xf[3:6] - x0[3:6], 0.0)
        raise SingularDuration("T = 0 requires equal positions")
    ker = get_kernels()
    mat = ker.impulse_matrix(model.omega, float(T))
    if np.linalg.cond(mat) > cond_limit:
        raise SingularDuration(f"impulse matrix ill-conditioned at T = {T}")
    y = xf - ker.stm(model.omega, float(T)) @ x0
    dv = np.linalg.solve(mat, y)
    return _solution_from_dv(dv[0:3], dv[3:6], T)


def duration_grid(limits: SteeringLimits) -> np.ndarray:
    """Uniform coarse grid on (0, t_max]; excludes 0 itself."""
    g = limits.t_grid
    return limits.t_max * np.arange(1, g + 1) / g


def grid_matrices(model: OrbitModel, Ts, cond_limit: float = COND_LIMIT):
    """Per-duration STM, inverse impulse matrix, and validity mask."""
    ker = get_kernels()
    phis = ker.stm_batch(model.omega, np.asarray(Ts, dtype=np.float64))
    mats = np.zeros((len(Ts), 6, 6))
    mats[:, :, 0:3] = phis[:, :, 3:6]
    mats[:, 3:6, 3:6] = np.eye(3)
    conds = np.linalg.cond(mats)
    valid = conds <= cond_limit
    invs = np.zeros_like(mats)
    if valid.any():
        invs[valid] = np.linalg.inv(mats[valid])
    return phis, invs, valid


def _bracket_edges(Ts, k, t_max):
    step = Ts[1] - Ts[0] if len(Ts) > 1 else Ts[0]
    lo = Ts[k - 1] if k > 0 else step * _FIRST_BRACKET_FLOOR
    hi = Ts[k + 1] if k + 1 < len(Ts) else t_max
    return lo, hi


class _PairBatchSolver:
    """Shared machinery: grid profile -> local-minimum refinement -> candidates.

    Used both by :func:`solve_2pbvp` (single pair) and the all-pairs
    precompute, so the two produce identical numbers.
    """

    def __init__(self, model: OrbitModel, limits: SteeringLimits):
        limits.validate_against(model)
        self.model = model
        self.limits = limits
        self.Ts = duration_grid(limits)
        self.phis, self.invs, self.valid = grid_matrices(model, self.Ts)

    def solve(self, X0, XF, refine_mask=None):
        """Arrays of optimal (cost, T, dv1, dv2) for ordered pairs (i, i).

        X0 and XF must have equal first dimensions; pair i is X0[i] -> XF[i].
        refine_mask (optional) skips grid refinement for excluded pairs,
        leaving them at +inf cost (used by the reachability prefilter).
        Positions equal at T = 0 are handled as the single-burn special case.
        """
        ker = get_kernels()
        X0 = np.ascontiguousarray(X0, dtype=np.float64)
        XF = np.ascontiguousarray(XF, dtype=np.float64)
        prof, stack_min = ker.aligned_cost_profiles(X0, XF, self.phis, self.invs, self.valid)
        return self._finish(X0, XF, prof, refine_mask), stack_min

    def solve_cross(self, X0, XF, prune_threshold=None):
        """All ordered cross pairs: returns (n, m) arrays.

        Output dict of arrays with shape (n, m): cost, T; and (n, m, 3):
        dv1, dv2; plus stack_min, the grid minimum of the stacked-burn norm
        (a lower bound on the cost).  When ``prune_threshold`` is given,
        pairs whose stack_min is at or above it are not refined and keep
        +inf cost -- the conservative outer-ellipsoid prefilter.
        """
        ker = get_kernels()
        X0 = np.ascontiguousarray(X0, dtype=np.float64)
        XF = np.ascontiguousarray(XF, dtype=np.float64)
        n, m = X0.shape[0], XF.shape[0]
        out_cost = np.full((n, m), np.inf)
        out_T = np.zeros((n, m))
        out_dv1 = np.zeros((n, m, 3))
        out_dv2 = np.zeros((n, m, 3))
        all_stack = np.full((n, m), np.inf)
        chunk = max(1, int(2e6) // (self.Ts.size * max(m, 1)))
        for lo in range(0, n, chunk):
            hi = min(n, lo + chunk)
            prof, stack_min = ker.pair_cost_profiles(
                X0[lo:hi], XF, self.phis, self.invs, self.valid
            )
            all_stack[lo:hi] = stack_min
            ii, jj = np.meshgrid(np.arange(lo, hi), np.arange(m), indexing="ij")
            ii = ii.ravel()
            jj = jj.ravel()
            rmask = None
            if prune_threshold is not None:
                rmask = (stack_min < prune_threshold).ravel()
            res = self._finish(
                X0[ii], XF[jj], prof.reshape(-1, self.Ts.size), rmask
            )
            out_cost[ii, jj] = res["cost"]
            out_T[ii, jj] = res["T"]
            out_dv1[ii, jj] = res["dv1"]
            out_dv2[ii, jj] = res["dv2"]
        return {"cost": out_cost, "T": out_T, "dv1": out_dv1, "dv2": out_dv2, "stack_min": all_stack}

    def _finish(self, X0, XF, prof, refine_mask):
        ker = get_kernels()
        M = X0.shape[0]
        G = self.Ts.size
        best_cost = np.full(M, np.inf)
        best_T = np.zeros(M)
        best_dv = np.zeros((M, 6))
        if refine_mask is None:
            refine_mask = np.ones(M, dtype=bool)

        # Grid candidates (argmin over the coarse profile).
        kbest = np.argmin(prof, axis=1)
        gvals = prof[np.arange(M), kbest]
        has_grid = np.isfinite(gvals) & refine_mask

        # Local-minimum brackets, refined by golden section.
        padded = np.full((M, G + 2), np.inf)
        padded[:, 1:-1] = prof
        is_lmin = (prof <= padded[:, 0:G]) & (prof <= padded[:, 2 : G + 2]) & np.isfinite(prof)
        is_lmin &= refine_mask[:, None]
        pi, pk = np.nonzero(is_lmin)
        if pi.size:
            step = self.Ts[1] - self.Ts[0] if G > 1 else self.Ts[0]
            lo = np.where(pk > 0, self.Ts[np.maximum(pk - 1, 0)], step * _FIRST_BRACKET_FLOOR)
            hi = np.where(pk + 1 < G, self.Ts[np.minimum(pk + 1, G - 1)], self.limits.t_max)
            rT, rc, rdv1, rdv2 = ker.refine_brackets(
                self.model.omega,
                np.ascontiguousarray(X0[pi]),
                np.ascontiguousarray(XF[pi]),
                lo,
                hi,
                self.limits.refine_tol,
            )
            for idx in range(pi.size):
                i = pi[idx]
                cand_cost = rc[idx]
                if self._cap_ok(rdv1[idx], rdv2[idx]) and cand_cost < best_cost[i]:
                    best_cost[i] = cand_cost
                    best_T[i] = rT[idx]
                    best_dv[i, 0:3] = rdv1[idx]
                    best_dv[i, 3:6] = rdv2[idx]

        # Fall back to the raw grid point when refinement lost to it (should
        # not happen for unimodal brackets, but the grid value is always a
        # valid candidate) or when the refined burns violated the cap.
        need = has_grid & (gvals < best_cost)
        if need.any():
            idxs = np.flatnonzero(need)
            Tg = self.Ts[kbest[idxs]]
            costs, DV = _eval_pairs_at(self.model, X0[idxs], XF[idxs], Tg)
            for r, i in enumerate(idxs):
                if self._cap_ok(DV[r, 0:3], DV[r, 3:6]) and costs[r] < best_cost[i]:
                    best_cost[i] = costs[r]
                    best_T[i] = Tg[r]
                    best_dv[i] = DV[r]

        # T = 0 single-burn candidate when positions coincide exactly.
        same_pos = np.all(X0[:, 0:3] == XF[:, 0:3], axis=1) & refine_mask
        if same_pos.any():
            for i in np.flatnonzero(same_pos):
                dv2 = XF[i, 3:6] - X0[i, 3:6]
                c0 = float(np.linalg.norm(dv2))
                if c0 <= self.limits.dv_max and c0 < best_cost[i]:
                    best_cost[i] = c0
                    best_T[i] = 0.0
                    best_dv[i, 0:3] = 0.0
                    best_dv[i, 3:6] = dv2

        # Canonical cost: recomputed from the stored burns so the invariant
        # cost == |dv1| + |dv2| holds bit-exactly regardless of which batched
        # code path produced the winner.
        fin = np.isfinite(best_cost)
        if fin.any():
            n1 = np.sqrt((best_dv[fin, 0:3] ** 2).sum(axis=1))
            n2 = np.sqrt((best_dv[fin, 3:6] ** 2).sum(axis=1))
            best_cost[fin] = n1 + n2
        return {
            "cost": best_cost,
            "T": best_T,
            "dv1": best_dv[:, 0:3],
            "dv2": best_dv[:, 3:6],
        }

    def _cap_ok(self, dv1, dv2) -> bool:
        cap = self.limits.dv_max
        if not math.isfinite(cap):
            return True
        return np.linalg.norm(dv1) <= cap and np.linalg.norm(dv2) <= cap


def _eval_pairs_at(model: OrbitModel, X0, XF, Ts):
    ker = get_kernels()
    phis = ker.stm_batch(model.omega, np.asarray(Ts, dtype=np.float64))
    mats = np.zeros((len(Ts), 6, 6))
    mats[:, :, 0:3] = phis[:, :, 3:6]
    mats[:, 3:6, 3:6] = np.eye(3)
    Y = XF - np.einsum("kab,kb->ka", phis, X0)
    DV = np.linalg.solve(mats, Y[:, :, None])[:, :, 0]
    costs = np.linalg.norm(DV[:, 0:3], axis=1) + np.linalg.norm(DV[:, 3:6], axis=1)
    return costs, DV


def solve_2pbvp(model: OrbitModel, x0, xf, limits: SteeringLimits) -> SteeringSolution:
    """Minimum-fuel two-impulse transfer, duration optimized over (0, t_max].

    Raises NoFeasibleSolution when every candidate violates the per-burn cap.
    """
    solver = _PairBatchSolver(model, limits)
    res, _ = solver.solve(
        np.asarray(x0, dtype=np.float64)[None, :],
        np.asarray(xf, dtype=np.float64)[None, :],
    )
    if not np.isfinite(res["cost"][0]):
        raise NoFeasibleSolution("no duration satisfies the burn magnitude cap")
    return _solution_from_dv(res["dv1"][0], res["dv2"][0], res["T"][0])


def steering_cost(model: OrbitModel, x0, xf, limits: SteeringLimits) -> float:
    """solve_2pbvp cost with +inf encoding infeasibility."""
    try:
        return solve_2pbvp(model, x0, xf, limits).cost
    except NoFeasibleSolution:
        return math.inf
