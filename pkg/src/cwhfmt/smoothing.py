"""Post-planning cost reduction with fixed burn times.

Keeping the burn count and times of a feasible plan fixed, the minimum-fuel
impulse vector solves a small second-order cone program:

    minimize   sum_i |dv_i|
    subject to [Phi(tf - tau_1) B, ..., B] dv = x_goal - Phi(tf) x_init
               |dv_i| <= dv_max

solved here by ADMM on the cone product (affine projection alternated with a
per-burn shrink-and-clip prox), warm-started from the plan's own burns and
polished onto the equality manifold.  The smoothed trajectory is the convex
combination of the plan and this unconstrained optimum: by superposition the
combination satisfies the boundary conditions for every weight, so a
bisection on the weight keeps the best feasible deformation.  Worst case the
original plan comes back (weight 0): cost never increases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import BurnSchedule, OrbitModel, propagate_schedule, stm
from .geometry import Environment, trajectory_feasible

ADMM_TOL = 1e-12
ADMM_MAX_ITER = 50_000


class InfeasibleSOCP(Exception):
    """Equality system inconsistent with the burn caps; smoothing aborts."""


@dataclass(frozen=True)
class SmoothingProblem:
    x_init: np.ndarray
    x_goal: np.ndarray
    taus: np.ndarray
    dv_max: float = math.inf
    alpha_tol: float = 1.0 / 64.0

    def __post_init__(self):
        taus = np.asarray(self.taus, dtype=np.float64)
        if taus.size < 2:
            raise ValueError("need at least two burn times")
        if np.any(np.diff(taus) < 0.0):
            raise ValueError("burn times must be non-decreasing")
        if not (0.0 < self.alpha_tol < 1.0):
            raise ValueError("alpha_tol must lie in (0, 1)")
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "x_init", np.asarray(self.x_init, dtype=np.float64))
        object.__setattr__(self, "x_goal", np.asarray(self.x_goal, dtype=np.float64))


@dataclass(frozen=True)
class SmoothedPlan:
    alpha_star: float
    schedule: BurnSchedule
    cost: float
    cost_before: float
    iterations: int


def burn_system(model: OrbitModel, problem: SmoothingProblem):
    """A (6 x 3N) and b of the fixed-time equality constraints."""
    taus = problem.taus
    tf = float(taus[-1])
    n = taus.size
    a = np.zeros((6, 3 * n))
    for i, tau in enumerate(taus):
        a[:, 3 * i : 3 * i + 3] = stm(model, tf - tau)[:, 3:6]
    b = problem.x_goal - stm(model, tf) @ problem.x_init
    return a, b


def min_fuel_fixed_times(model: OrbitModel, problem: SmoothingProblem,
                         warm_start=None) -> tuple[np.ndarray, float]:
    """ADMM solution of the SOCP; returns ((N,3) burns, cost).

    Raises InfeasibleSOCP if the residuals fail to converge (the equality
    system cannot be met within the caps).
    """
    a, b = burn_system(model, problem)
    n = problem.taus.size
    cap = problem.dv_max
    a_pinv = np.linalg.pinv(a)

    scale = max(np.linalg.norm(b) / max(np.linalg.norm(a, 2), 1e-30), 1e-12)
    if warm_start is not None:
        v = np.asarray(warm_start, dtype=np.float64).reshape(3 * n).copy()
        scale = max(scale, float(np.abs(v).max()))
    else:
        v = a_pinv @ b

    rho = 1.0
    z = v.copy()
    u = np.zeros(3 * n)
    thresh = 1.0 / rho * scale  # prox threshold in physical units

    def project_affine(w):
        return w - a_pinv @ (a @ w - b)

    converged = False
    it = 0
    for it in range(1, ADMM_MAX_ITER + 1):
        v = project_affine(z - u)
        w = (v + u).reshape(n, 3)
        mags = np.sqrt((w**2).sum(axis=1))
        new_mags = np.minimum(np.maximum(mags - thresh, 0.0), cap)
        fac = np.divide(new_mags, mags, out=np.zeros_like(mags), where=mags > 0.0)
        z_prev = z
        z = (w * fac[:, None]).reshape(3 * n)
        u = u + v - z
        r = np.linalg.norm(v - z)
        s = rho * np.linalg.norm(z - z_prev)
        if r <= ADMM_TOL * max(1.0, scale) * n and s <= ADMM_TOL * max(1.0, scale) * n:
            converged = True
            break

    dv = project_affine(z)
    resid = np.linalg.norm(a @ dv - b)
    if not converged and resid > 1e-8 * max(1.0, np.linalg.norm(b)):
        raise InfeasibleSOCP(f"ADMM stalled after {it} iterations (residual {resid:.3e})")
    dvs = dv.reshape(n, 3)
    mags = np.linalg.norm(dvs, axis=1)
    if np.any(mags > cap * (1.0 + 1e-7)):
        raise InfeasibleSOCP("burn caps violated at the equality-feasible point")
    return dvs, float(mags.sum())


def combine_burns(alpha: float, dvs_plan: np.ndarray, dvs_opt: np.ndarray) -> np.ndarray:
    """(1 - alpha) * plan + alpha * unconstrained optimum."""
    return (1.0 - alpha) * dvs_plan + alpha * dvs_opt


def convex_combination_state(model: OrbitModel, alpha: float, x_init, taus,
                             dvs_plan, dvs_opt, t: float) -> np.ndarray:
    """State of the alpha-weighted schedule at time t (superposition holds)."""
    mixed = BurnSchedule(np.asarray(taus, dtype=np.float64), combine_burns(alpha, dvs_plan, dvs_opt))
    return propagate_schedule(model, np.asarray(x_init, dtype=np.float64), mixed, t)


def smooth_schedule(model: OrbitModel, x_init, schedule: BurnSchedule, env: Environment,
                    dt: float, alpha_tol: float = 1.0 / 64.0, dv_max: float = math.inf,
                    extra_feasible=None) -> SmoothedPlan:
    """Bisection homotopy toward the fixed-time minimum-fuel burns.

    ``extra_feasible(schedule)`` can veto candidates beyond the geometric
    trajectory check (burn allocability, plume clearance, abort safety).
    Feasibility of the returned schedule is an invariant: the input plan is
    the weight-0 fallback.
    """
    x_init = np.asarray(x_init, dtype=np.float64)
    taus = schedule.taus
    t_f = float(taus[-1])
    x_goal = propagate_schedule(model, x_init, schedule, t_f)
    problem = SmoothingProblem(x_init=x_init, x_goal=x_goal, taus=taus,
                               dv_max=dv_max, alpha_tol=alpha_tol)
    cost_before = schedule.cost_2norm()
    try:
        dvs_opt, _ = min_fuel_fixed_times(model, problem, warm_start=schedule.dvs)
    except InfeasibleSOCP:
        return SmoothedPlan(0.0, schedule, cost_before, cost_before, 0)

    def feasible(cand: BurnSchedule) -> bool:
        if not trajectory_feasible(model, x_init, cand, 0.0, t_f, env, dt):
            return False
        return extra_feasible is None or bool(extra_feasible(cand))

    best = schedule
    alpha_best = 0.0
    alpha, a_lo, a_hi = 1.0, 0.0, 1.0
    iters = 0
    while True:
        iters += 1
        cand = BurnSchedule(taus, combine_burns(alpha, schedule.dvs, dvs_opt))
        if feasible(cand):
            a_lo = alpha
            best = cand
            alpha_best = alpha
            if alpha == 1.0:
                break
        else:
            a_hi = alpha
        if a_hi - a_lo <= alpha_tol:
            break
        alpha = 0.5 * (a_lo + a_hi)

    cost_after = best.cost_2norm()
    if cost_after > cost_before:
        best, alpha_best, cost_after = schedule, 0.0, cost_before
    return SmoothedPlan(alpha_best, best, cost_after, cost_before, iters)
