"""Fuel-cost reachability: neighbor sets and ellipsoidal bounding sets.

The forward reachable set from a state is everything attainable below a cost
threshold ``j_bar``.  Neighbor sets are computed *exactly* from the steering
cost; the ellipsoidal bounds derived from the two-impulse Gramian only serve
as (a) numerical property checks and (b) an optional conservative prefilter
that skips duration-grid refinement for hopeless pairs.

For a fixed duration T, the stacked two-burn vector satisfies
``|dv|^2 = y' G(T)^-1 y`` with ``y = xf - Phi(T) x0`` and ``G = Phi_v Phi_v'``.
Combined with the cost bounds ``|dv| <= J <= sqrt(2) |dv|`` this sandwiches
the fixed-T reachable slice between two ellipsoids centered on the coast
point.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .dynamics import OrbitModel, impulse_matrix, propagate_coast
from .steering import (
    SteeringLimits,
    _PairBatchSolver,
    duration_grid,
)

# Exclusion margin for the outer-ellipsoid prefilter: a pair is skipped only
# when its stacked-norm lower bound exceeds margin * j_bar at every grid
# duration, absorbing dips between grid points. Soundness is regression-tested
# against unpruned brute force.
PRUNE_MARGIN = 1.25


class ReachClass(enum.Enum):
    INSIDE_INNER = "inside_inner"
    ANNULUS = "annulus"
    OUTSIDE_OUTER = "outside_outer"


@dataclass(frozen=True)
class ReachSpec:
    j_bar: float
    limits: SteeringLimits

    def __post_init__(self):
        if not self.j_bar > 0.0:
            raise ValueError("j_bar must be positive")


def gramian(model: OrbitModel, T: float) -> np.ndarray:
    """Two-impulse Gramian Phi_v Phi_v' for burns at times {0, T}."""
    pv = impulse_matrix(model, T)
    return pv @ pv.T


def reach_bounds_contains(model: OrbitModel, x0, xf, T: float, j_bar: float) -> ReachClass:
    """Classify xf against the fixed-T inner/outer reachability ellipsoids.

    Inside the inner ellipsoid (|dv| <= j_bar / sqrt(2)) the steering cost is
    surely below j_bar; outside the outer one (|dv| > j_bar) it surely is not
    for this T.  In between nothing is decided.
    """
    pv = impulse_matrix(model, float(T))
    y = np.asarray(xf, dtype=np.float64) - propagate_coast(model, x0, T)
    dv = np.linalg.solve(pv, y)
    q = float(dv @ dv)
    if q <= j_bar**2 / 2.0:
        return ReachClass.INSIDE_INNER
    if q <= j_bar**2:
        return ReachClass.ANNULUS
    return ReachClass.OUTSIDE_OUTER


def gramian_eig_constants(model: OrbitModel, t_max: float, n_grid: int = 256):
    """Numerically fitted (M_min, M_max) with lmin(G) >= M_min T^2 on (0, t_max].

    The lemma guarantees existence; the constants themselves are fitted per
    mean motion by scanning the grid.
    """
    Ts = t_max * np.arange(1, n_grid + 1) / n_grid
    ratios = np.empty(n_grid)
    lmaxs = np.empty(n_grid)
    for i, T in enumerate(Ts):
        w = np.linalg.eigvalsh(gramian(model, T))
        ratios[i] = w[0] / T**2
        lmaxs[i] = w[-1]
    m_min = float(ratios.min()) * 0.999
    m_max = float(lmaxs.max()) * 1.001
    return m_min, m_max


@dataclass
class NeighborSets:
    """Directional cost-threshold neighbor lists over a sample set.

    ``fwd[i]`` holds j reachable *from* i with cost < j_bar; ``bwd[j]`` holds
    the i that reach j.  ``pairs`` maps (i, j) -> row into the flat solution
    arrays (cost, T, dv1, dv2).
    """

    n: int
    j_bar: float
    fwd: list = field(default_factory=list)
    bwd: list = field(default_factory=list)
    pair_i: np.ndarray = None
    pair_j: np.ndarray = None
    cost: np.ndarray = None
    T: np.ndarray = None
    dv1: np.ndarray = None
    dv2: np.ndarray = None

    def pair_index(self):
        return {(int(a), int(b)): k for k, (a, b) in enumerate(zip(self.pair_i, self.pair_j))}


def build_neighbor_sets(model: OrbitModel, samples, spec: ReachSpec, prune: bool = True) -> NeighborSets:
    """All-pairs steering below the cost threshold.

    prune=True skips refinement of pairs whose stacked-norm lower bound
    exceeds PRUNE_MARGIN * j_bar on the whole duration grid (the outer
    ellipsoid test applied at every grid T); prune=False solves every ordered
    pair.  Both must produce identical neighbor sets.
    """
    samples = np.ascontiguousarray(samples, dtype=np.float64)
    n = samples.shape[0]
    if n < 2:
        raise ValueError("need at least 2 samples")
    solver = _PairBatchSolver(model, spec.limits)
    threshold = spec.j_bar * PRUNE_MARGIN if prune else None
    res = solver.solve_cross(samples, samples, prune_threshold=threshold)
    cost = res["cost"]
    np.fill_diagonal(cost, np.inf)  # self-pairs are not neighbors
    keep = np.isfinite(cost) & (cost < spec.j_bar)
    pi, pj = np.nonzero(keep)
    ns = NeighborSets(
        n=n,
        j_bar=spec.j_bar,
        pair_i=pi.astype(np.int64),
        pair_j=pj.astype(np.int64),
        cost=cost[pi, pj],
        T=res["T"][pi, pj],
        dv1=res["dv1"][pi, pj],
        dv2=res["dv2"][pi, pj],
    )
    ns.fwd = [pj[pi == i].tolist() for i in range(n)]
    ns.bwd = [pi[pj == j].tolist() for j in range(n)]
    return ns
