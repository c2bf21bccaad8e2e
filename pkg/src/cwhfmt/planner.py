"""Batch tree planner over precomputed steering graphs.

Offline, each subplan (leg) gets a sample set filtered for feasibility and
abort safety, all-pairs steering solutions under the cost threshold, the
directional neighbor lists, and per-sample abort parameters.  Online, a
fast-marching tree grows from the leg's start state: the cheapest frontier
node expands toward its unexplored cost-threshold neighbors, each connecting
through the frontier parent minimizing cost-to-come plus edge cost, with
collision/burn checks applied lazily to the single chosen edge.  Legs chain
through the waypoint sequence; coincident junction burns merge into net
vectors (never increasing the 2-norm cost), after which the affected abort
certificates are re-verified with the eliminated rendezvous burn prepended.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .allocation import Infeasible, allocate_lvlh
from .dynamics import BurnSchedule, OrbitModel, propagate_schedule, propagate_schedule_grid
from .geometry import Environment, feasible_states, trajectory_feasible
from .reachability import PRUNE_MARGIN, NeighborSets, ReachSpec, build_neighbor_sets
from .safety import SafetyCertifier, plume_clear
from .sampling import SamplingExhausted, sample_free
from .scenario import Scenario
from .smoothing import smooth_schedule
from .steering import SteeringLimits, _PairBatchSolver


class PlanningFailure(Exception):
    """Frontier exhausted (or a leg start was rejected); carries diagnostics."""

    def __init__(self, msg, leg=None, counters=None):
        super().__init__(msg)
        self.leg = leg
        self.counters = counters or {}


@dataclass
class LegData:
    """Offline product for one subplan."""

    samples: np.ndarray  # (n + n_goal, 6); goal-center sample at index n
    n: int
    n_goal: int
    neighbors: NeighborSets
    cam_theta: np.ndarray
    cam_Th: np.ndarray
    cam_dv: np.ndarray  # (n_total, 3)
    cam_post: np.ndarray  # (n_total, 6)

    @property
    def n_total(self) -> int:
        return self.n + self.n_goal

    @property
    def goal_center_index(self) -> int:
        return self.n


@dataclass
class PrecomputedGraphData:
    fingerprint: str
    omega: float
    j_bar: float
    legs: list

    def counts(self):
        return {
            "legs": len(self.legs),
            "samples": int(sum(l.n_total for l in self.legs)),
            "neighbor_pairs": int(sum(l.neighbors.pair_i.size for l in self.legs)),
        }


def precompute(scenario: Scenario, log=None) -> PrecomputedGraphData:
    """Offline phase: samples, safety certificates, all-pairs steering, neighbors."""
    model = scenario.model
    env = scenario.environment()
    certifier = SafetyCertifier(model, scenario.thrusters, env, scenario.fault_tolerance, scenario.dt)
    limits = SteeringLimits(t_max=scenario.t_max)
    spec = ReachSpec(j_bar=scenario.planner.j_bar, limits=limits)

    legs = []
    for k, wp in enumerate(scenario.waypoints):
        space = scenario.leg_sample_space(k)

        def accept(states):
            ok = feasible_states(states, env)
            if ok.any():
                idx = np.flatnonzero(ok)
                safe, _ = certifier.certify_batch(states[idx])
                ok = ok.copy()
                ok[idx] = safe
            return ok

        sset = sample_free(space, scenario.planner.samples_per_leg, accept,
                           goal=wp.goal_region(), n_goal=scenario.n_goal)
        neighbors = build_neighbor_sets(model, sset.states, spec, prune=True)
        _, certs = certifier.certify_batch(sset.states)
        legs.append(
            LegData(
                samples=sset.states,
                n=sset.n,
                n_goal=sset.n_goal,
                neighbors=neighbors,
                cam_theta=np.array([c.cam.theta_star for c in certs]),
                cam_Th=np.array([c.cam.Th for c in certs]),
                cam_dv=np.array([c.cam.dv_circ for c in certs]).reshape(-1, 3),
                cam_post=np.array([c.cam.post_state for c in certs]).reshape(-1, 6),
            )
        )
        if log:
            log(f"leg {k}: n={sset.n} n_goal={sset.n_goal} "
                f"neighbor_pairs={neighbors.pair_i.size}")
    return PrecomputedGraphData(
        fingerprint=scenario.fingerprint(),
        omega=scenario.omega,
        j_bar=scenario.planner.j_bar,
        legs=legs,
    )


@dataclass
class LegPlan:
    edges: list  # (parent_idx, child_idx, T, dv1, dv2) with -1 = leg start
    schedule: BurnSchedule  # relative to the leg start time
    duration: float
    cost_unmerged: float
    end_state: np.ndarray
    end_index: int
    counters: dict


@dataclass
class MissionPlan:
    schedule: BurnSchedule  # absolute mission time, merged per mode
    schedule_raw: BurnSchedule  # before junction merging
    leg_plans: list
    leg_costs: list
    total_cost: float
    junctions: list  # (tau, state, eliminated_burn) for merged junction re-verification
    burn_states: np.ndarray  # pre-burn positions for every scheduled burn
    counters: dict

    def end_state(self, model: OrbitModel, x_init) -> np.ndarray:
        t_end = float(self.schedule.taus[-1]) if len(self.schedule) else 0.0
        return propagate_schedule(model, x_init, self.schedule, t_end)


class _LegPlanner:
    """One fast-marching tree growth over a leg's precomputed data."""

    def __init__(self, model, env, certifier, leg: LegData, limits, j_bar, dt,
                 merge_mode=True, exact=False, goal_region=None):
        self.model = model
        self.env = env
        self.certifier = certifier
        self.leg = leg
        self.limits = limits
        self.j_bar = j_bar
        self.dt = dt
        self.merge_mode = merge_mode
        self.exact = exact
        self.goal_region = goal_region
        self.counters = {"edges_considered": 0, "edges_checked": 0, "edges_added": 0,
                         "lp_solves": 0, "nodes_expanded": 0}

    def plan(self, x_init) -> LegPlan:
        leg = self.leg
        nt = leg.n_total
        x_init = np.asarray(x_init, dtype=np.float64)

        if self._in_goal_state(x_init):
            return LegPlan([], BurnSchedule(), 0.0, 0.0, x_init.copy(), -1, dict(self.counters))

        solver = _PairBatchSolver(self.model, self.limits)
        row = solver.solve_cross(x_init[None, :], leg.samples,
                                 prune_threshold=self.j_bar * PRUNE_MARGIN)
        root_cost = row["cost"][0]
        root_T = row["T"][0]
        root_dv1 = row["dv1"][0]
        root_dv2 = row["dv2"][0]
        root_fwd = np.flatnonzero(np.isfinite(root_cost) & (root_cost < self.j_bar))

        pair_at = self.leg.neighbors.pair_index()

        # Node state: cost bookkeeping. c_i excludes the incoming rendezvous
        # burn; priority = c_i + |dv_in|. The root (-1) has c_i = 0, dv_in = 0.
        c_i = np.full(nt, np.inf)
        dv_in = np.zeros((nt, 3))
        parent = np.full(nt, -2, dtype=np.int64)
        edge_T = np.zeros(nt)
        edge_dv1 = np.zeros((nt, 3))
        edge_dv2 = np.zeros((nt, 3))
        unexplored = np.ones(nt, dtype=bool)
        in_frontier = np.zeros(nt, dtype=bool)
        priority = np.full(nt, np.inf)

        heap = [(0.0, -1)]
        root_in_frontier = True

        def junction_cost(dv_incoming, dv1):
            if self.merge_mode:
                net = dv_incoming + dv1
                return float(np.sqrt((net**2).sum()))
            return float(np.sqrt((dv_incoming**2).sum()) + np.sqrt((dv1**2).sum()))

        def edge_record(y, x):
            if y == -1:
                return root_T[x], root_dv1[x], root_dv2[x], root_cost[x]
            kpair = pair_at.get((y, x))
            if kpair is None:
                return None
            nb = self.leg.neighbors
            return nb.T[kpair], nb.dv1[kpair], nb.dv2[kpair], nb.cost[kpair]

        def node_state(y):
            return x_init if y == -1 else leg.samples[y]

        z = -1
        while True:
            fwd = root_fwd if z == -1 else np.asarray(self.leg.neighbors.fwd[z], dtype=np.int64)
            targets = [x for x in fwd if unexplored[x]]
            self.counters["nodes_expanded"] += 1
            for x in targets:
                self.counters["edges_considered"] += 1
                best_y, best_key, best_rec = None, math.inf, None
                cands = list(self.leg.neighbors.bwd[x])
                if root_in_frontier and np.isfinite(root_cost[x]) and root_cost[x] < self.j_bar:
                    cands = [-1] + cands
                for y in cands:
                    if y == -1:
                        yc_i, ydv = 0.0, np.zeros(3)
                    else:
                        if not in_frontier[y]:
                            continue
                        yc_i, ydv = c_i[y], dv_in[y]
                    rec = edge_record(y, x)
                    if rec is None:
                        continue
                    key = yc_i + junction_cost(ydv, rec[1]) + float(np.sqrt((rec[2] ** 2).sum()))
                    if key < best_key - 1e-15 or (
                        abs(key - best_key) <= 1e-15 and (best_y is None or y < best_y)
                    ):
                        best_key, best_y, best_rec = key, y, rec
                if best_y is None:
                    continue
                T, dv1, dv2, _ = best_rec
                self.counters["edges_checked"] += 1
                y_state = node_state(best_y)
                net_dep = (dv_in[best_y] if best_y != -1 else np.zeros(3)) + dv1 \
                    if self.merge_mode else dv1
                if not self._edge_feasible(y_state, T, dv1, dv2, net_dep):
                    continue
                c_i_new = (0.0 if best_y == -1 else c_i[best_y]) + junction_cost(
                    np.zeros(3) if best_y == -1 else dv_in[best_y], dv1
                )
                c_i[x] = c_i_new
                dv_in[x] = dv2
                parent[x] = best_y
                edge_T[x] = T
                edge_dv1[x] = dv1
                edge_dv2[x] = dv2
                priority[x] = c_i_new + float(np.sqrt((dv2**2).sum()))
                in_frontier[x] = True
                heapq.heappush(heap, (priority[x], int(x)))
                self.counters["edges_added"] += 1
            for x in targets:
                unexplored[x] = False
            if z == -1:
                root_in_frontier = False
            else:
                in_frontier[z] = False

            z = self._pop_min(heap, in_frontier)
            if z is None:
                raise PlanningFailure("frontier exhausted before reaching the goal",
                                      counters=dict(self.counters))
            if self._is_goal(z):
                return self._extract(z, x_init, parent, edge_T, edge_dv1, edge_dv2)

    def _pop_min(self, heap, in_frontier):
        # Every sample is pushed at most once (it leaves the unexplored set on
        # first consideration), so the only stale entries are already-expanded
        # nodes; skip them.
        while heap:
            _, idx = heapq.heappop(heap)
            if idx != -1 and in_frontier[idx]:
                return int(idx)
        return None

    def _is_goal(self, idx) -> bool:
        if self.exact:
            return idx == self.leg.goal_center_index
        return bool(self.goal_region.contains(self.leg.samples[idx]))

    def _in_goal_state(self, state) -> bool:
        if self.exact:
            return bool(np.array_equal(state, self.leg.samples[self.leg.goal_center_index]))
        return bool(self.goal_region.contains(state))

    def _edge_feasible(self, y_state, T, dv1, dv2, net_departure) -> bool:
        sched = BurnSchedule(np.array([0.0, float(T)]), np.vstack([dv1, dv2])).merged()
        if not trajectory_feasible(self.model, y_state, sched, 0.0, float(T), self.env, self.dt):
            return False
        end = propagate_schedule(self.model, y_state, sched, float(T))
        for burn, pos in ((net_departure, y_state[0:3]), (dv2, end[0:3])):
            if float(np.abs(burn).max()) == 0.0:
                continue
            if not plume_clear(self.model, burn, pos, self.env):
                return False
            try:
                self.counters["lp_solves"] += 1
                allocate_lvlh(burn, self.certifier.config)
            except Infeasible:
                return False
        return True

    def _extract(self, goal_idx, x_init, parent, edge_T, edge_dv1, edge_dv2) -> LegPlan:
        chain = []
        idx = goal_idx
        while idx != -1:
            chain.append(idx)
            idx = int(parent[idx])
        chain.reverse()

        edges = []
        taus, dvs = [], []
        t = 0.0
        cost_unmerged = 0.0
        prev = -1
        for x in chain:
            T = float(edge_T[x])
            dv1 = edge_dv1[x]
            dv2 = edge_dv2[x]
            edges.append((prev, int(x), T, dv1.copy(), dv2.copy()))
            taus.extend([t, t + T])
            dvs.extend([dv1, dv2])
            cost_unmerged += float(np.sqrt((dv1**2).sum()) + np.sqrt((dv2**2).sum()))
            t += T
            prev = int(x)
        sched = BurnSchedule(np.array(taus), np.array(dvs).reshape(-1, 3))
        end_state = propagate_schedule(self.model, x_init, sched, t) if len(sched) else x_init.copy()
        return LegPlan(edges, sched, t, cost_unmerged, end_state, goal_idx, dict(self.counters))


def plan_mission(scenario: Scenario, data: PrecomputedGraphData,
                 merge_mode=None, strict_safety=None, log=None) -> MissionPlan:
    """Chain the subplans through every waypoint; raises PlanningFailure."""
    if data.fingerprint != scenario.fingerprint():
        raise PlanningFailure("precomputed data does not match the scenario fingerprint")
    model = scenario.model
    env = scenario.environment()
    certifier = SafetyCertifier(model, scenario.thrusters, env,
                                scenario.fault_tolerance, scenario.dt)
    limits = SteeringLimits(t_max=scenario.t_max)
    merge = scenario.planner.merge_mode if merge_mode is None else merge_mode
    strict = scenario.planner.strict_safety if strict_safety is None else strict_safety

    x = scenario.initial_state.copy()
    if not feasible_states(x[None, :], env)[0]:
        raise PlanningFailure("initial state infeasible", leg=0)
    if not certifier.certify(x).overall:
        raise PlanningFailure("initial state fails abort certification", leg=0)

    t0 = 0.0
    leg_plans = []
    leg_costs = []
    taus, dvs = [], []
    counters = {}
    for k, wp in enumerate(scenario.waypoints):
        lp = _LegPlanner(model, env, certifier, data.legs[k], limits,
                         scenario.planner.j_bar, scenario.dt, merge_mode=merge,
                         exact=scenario.planner.exact_convergence,
                         goal_region=wp.goal_region())
        try:
            leg_plan = lp.plan(x)
        except PlanningFailure as exc:
            raise PlanningFailure(f"leg {k}: {exc}", leg=k, counters=exc.counters) from exc
        leg_plans.append(leg_plan)
        leg_costs.append(leg_plan.cost_unmerged)
        taus.extend((leg_plan.schedule.taus + t0).tolist())
        dvs.extend(leg_plan.schedule.dvs.tolist())
        t0 += leg_plan.duration
        x = leg_plan.end_state.copy()
        for key, val in leg_plan.counters.items():
            counters[key] = counters.get(key, 0) + val
        if log:
            log(f"leg {k}: cost={leg_plan.cost_unmerged:.4f} m/s "
                f"duration={leg_plan.duration:.0f} s edges={len(leg_plan.edges)}")

    raw = BurnSchedule(np.array(taus), np.array(dvs).reshape(-1, 3))
    junctions = _junctions(model, scenario.initial_state, raw) if merge else []
    sched = raw.merged() if merge else _drop_null_burns(raw)

    # Re-verify abort certificates where merging eliminated a rendezvous burn.
    for tau, state, eliminated in junctions:
        cert = certifier.certify(state, prepend_burn=eliminated)
        if not cert.overall:
            raise PlanningFailure(
                f"merged junction at t={tau:.1f}s fails abort re-verification", counters=counters
            )

    burn_states = propagate_schedule_grid(model, scenario.initial_state, sched, sched.taus) \
        if len(sched) else np.empty((0, 6))

    plan = MissionPlan(
        schedule=sched,
        schedule_raw=raw,
        leg_plans=leg_plans,
        leg_costs=leg_costs,
        total_cost=sched.cost_2norm(),
        junctions=junctions,
        burn_states=burn_states,
        counters=counters,
    )
    if strict and len(sched):
        _strict_certify(scenario, model, certifier, plan)
    return plan


def _drop_null_burns(sched: BurnSchedule) -> BurnSchedule:
    keep = np.any(sched.dvs != 0.0, axis=1)
    return BurnSchedule(sched.taus[keep], sched.dvs[keep])


def _junctions(model, x_init, raw: BurnSchedule):
    """(tau, node state, eliminated rendezvous burn) wherever burns coincide.

    The node state is the one the incoming edge rendezvoused with: burns
    strictly before tau plus the arrival burn, excluding the departure burn
    merged into it.
    """
    out = []
    i = 0
    while i < len(raw):
        j = i
        while j < len(raw) and raw.taus[j] == raw.taus[i]:
            j += 1
        if j - i >= 2:
            tau = float(raw.taus[i])
            before = BurnSchedule(raw.taus[:i], raw.dvs[:i])
            state = propagate_schedule(model, x_init, before, tau)
            arrival = raw.dvs[i].copy()
            state[3:6] += arrival
            out.append((tau, state, arrival))
        i = j
    return out


def _strict_certify(scenario, model, certifier, plan: MissionPlan):
    """Certify every dt point of the final solution (conservative mode)."""
    t_end = float(plan.schedule.taus[-1])
    n = int(math.floor(t_end / scenario.dt)) + 1
    ts = np.arange(n) * scenario.dt
    ts = np.unique(np.concatenate([ts, plan.schedule.taus, [t_end]]))
    states = propagate_schedule_grid(model, scenario.initial_state, plan.schedule, ts)
    for k in range(states.shape[0]):
        if not certifier.certify(states[k]).overall:
            raise PlanningFailure(
                f"strict safety: state at t={ts[k]:.1f}s has no certified abort",
                counters=plan.counters,
            )


@dataclass
class MissionSmoothed:
    schedule: BurnSchedule
    cost: float
    cost_before: float
    alphas: list  # per-leg weights ("whole" mode: a single entry)
    mode: str

    @property
    def alpha_star(self) -> float:
        return min(self.alphas) if self.alphas else 0.0


def _burn_checks_factory(scenario, env, certifier, x_start):
    def extra_feasible(cand: BurnSchedule) -> bool:
        states = propagate_schedule_grid(scenario.model, x_start, cand, cand.taus)
        for k in range(len(cand)):
            burn = cand.dvs[k]
            if float(np.abs(burn).max()) == 0.0:
                continue
            if not plume_clear(scenario.model, burn, states[k, 0:3], env):
                return False
            try:
                allocate_lvlh(burn, scenario.thrusters)
            except Infeasible:
                return False
            if not certifier.certify(states[k]).overall:
                return False
        return True

    return extra_feasible


def smooth_mission(scenario: Scenario, plan: MissionPlan, mode=None, log=None) -> MissionSmoothed:
    """Cost reduction with fixed burn times and abort re-certification.

    Per-leg mode (default) keeps every subplan's endpoints fixed, so the
    waypoint tour is preserved and only the in-leg burn structure relaxes;
    junction burns across leg boundaries still merge afterwards.  Whole-plan
    mode relaxes the pass-through constraints across the entire mission.
    """
    model = scenario.model
    env = scenario.environment()
    certifier = SafetyCertifier(model, scenario.thrusters, env,
                                scenario.fault_tolerance, scenario.dt)
    mode = scenario.smoothing.mode if mode is None else mode
    cost_before = plan.total_cost

    if mode == "whole":
        res = smooth_schedule(
            model, scenario.initial_state, plan.schedule, env, scenario.dt,
            alpha_tol=scenario.smoothing.alpha_tol,
            extra_feasible=_burn_checks_factory(scenario, env, certifier, scenario.initial_state),
        )
        return MissionSmoothed(res.schedule, res.cost, cost_before, [res.alpha_star], mode)

    # Per-leg: smooth each subplan between its own endpoints, then re-merge
    # junctions.  A junction failing abort re-verification reverts its two
    # adjacent legs to their planned schedules.
    leg_scheds = []
    alphas = []
    x = scenario.initial_state.copy()
    for leg_plan in plan.leg_plans:
        if len(leg_plan.schedule) < 2:
            leg_scheds.append(leg_plan.schedule)
            alphas.append(0.0)
        else:
            res = smooth_schedule(
                model, x, leg_plan.schedule, env, scenario.dt,
                alpha_tol=scenario.smoothing.alpha_tol,
                extra_feasible=_burn_checks_factory(scenario, env, certifier, x),
            )
            leg_scheds.append(res.schedule)
            alphas.append(res.alpha_star)
        x = leg_plan.end_state.copy()

    smoothed_flags = [a > 0.0 for a in alphas]
    while True:
        raw = _concat_legs(plan, leg_scheds)
        sched = raw.merged() if scenario.planner.merge_mode else _drop_null_burns(raw)
        bad = None
        for tau, state, eliminated in _junctions(model, scenario.initial_state, raw):
            if not certifier.certify(state, prepend_burn=eliminated).overall:
                bad = tau
                break
        if bad is None:
            break
        reverted = False
        t0 = 0.0
        for k, leg_plan in enumerate(plan.leg_plans):
            t1 = t0 + leg_plan.duration
            if t0 - 1e-9 <= bad <= t1 + 1e-9 and smoothed_flags[k]:
                leg_scheds[k] = leg_plan.schedule
                smoothed_flags[k] = False
                alphas[k] = 0.0
                reverted = True
            t0 = t1
        if not reverted:
            # already fully unsmoothed around the junction; the planned
            # schedule passed this check, so this cannot recur
            break

    cost = sched.cost_2norm()
    if cost > cost_before:
        return MissionSmoothed(plan.schedule, cost_before, cost_before,
                               [0.0] * len(plan.leg_plans), mode)
    return MissionSmoothed(sched, cost, cost_before, alphas, mode)


def _concat_legs(plan: MissionPlan, leg_scheds) -> BurnSchedule:
    taus, dvs = [], []
    t0 = 0.0
    for leg_plan, sched in zip(plan.leg_plans, leg_scheds):
        taus.extend((sched.taus + t0).tolist())
        dvs.extend(sched.dvs.tolist())
        t0 += leg_plan.duration
    return BurnSchedule(np.array(taus), np.array(dvs).reshape(-1, 3))


def merge_junction(dv_in, dv_out) -> np.ndarray:
    """Net burn replacing two coincident junction impulses (triangle inequality)."""
    return np.asarray(dv_in, dtype=np.float64) + np.asarray(dv_out, dtype=np.float64)
