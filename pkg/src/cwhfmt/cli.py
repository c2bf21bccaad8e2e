"""Command line: offline precompute, online planning, benchmark sweeps.

Exit codes: 0 success, 2 scenario/argument validation error, 3 sampling
exhausted (over-constrained space), 4 planner failure (diagnostics still
written).  Timing printed and reported covers the online phase only; the
CWHFMT_THREADS environment variable caps worker pools and kernel threads.
"""

from __future__ import annotations

import argparse
import json
import math
import multiprocessing
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import graph_io
from .allocation import Infeasible, allocate_lvlh
from .backend import get_kernels, thread_cap
from .dynamics import BurnSchedule, propagate_schedule_grid
from .planner import MissionPlan, PlanningFailure, plan_mission, precompute, smooth_mission
from .safety import SafetyCertifier
from .sampling import SamplingExhausted
from .scenario import Scenario, ScenarioError, load_scenario

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SAMPLING = 3
EXIT_PLANNING = 4

REPORT_SCHEMA_VERSION = 1


def _warmup_kernels(omega: float):
    """Touch every jitted kernel so compilation stays out of the online timer."""
    ker = get_kernels()
    x = np.zeros(6)
    ker.stm(omega, 1.0)
    ker.stm_batch(omega, np.array([1.0]))
    ker.impulse_matrix(omega, 1.0)
    ker.propagate_grid(omega, x, np.zeros(1), np.zeros((1, 3)), np.array([0.0, 1.0]))
    phis = ker.stm_batch(omega, np.array([100.0]))
    mats = np.zeros((1, 6, 6))
    mats[:, :, 0:3] = phis[:, :, 3:6]
    mats[:, 3:6, 3:6] = np.eye(3)
    invs = np.linalg.inv(mats)
    ones = np.ones(1, dtype=bool)
    ker.pair_cost_profiles(x[None, :], x[None, :], phis, invs, ones)
    ker.aligned_cost_profiles(x[None, :], x[None, :], phis, invs, ones)
    ker.refine_brackets(omega, x[None, :] + 1.0, x[None, :], np.array([50.0]), np.array([150.0]), 10.0)
    ker.feasible_points(x[None, :], -np.ones(6), np.ones(6), np.zeros(3), 0.0,
                        np.zeros((0, 3)), np.zeros((0, 3)), np.zeros(0), np.zeros(0),
                        np.zeros((0, 3)), np.zeros(0))
    ker.dvcirc_sq_profile(omega, x, np.array([0.0, 1.0]))


def _float_repr(v: float) -> str:
    return repr(float(v))


def cmd_precompute(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"scenario validation error at {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        data = precompute(scenario, log=lambda msg: print(msg))
    except SamplingExhausted as exc:
        print(f"sampling exhausted: {exc}", file=sys.stderr)
        return EXIT_SAMPLING
    graph_io.save_binary(data, args.out)
    if args.json_twin:
        graph_io.save_json_twin(data, str(args.out) + ".json")
    counts = data.counts()
    certified = sum(leg.n_total for leg in data.legs)
    print(
        f"precompute done: legs={counts['legs']} samples={counts['samples']} "
        f"neighbor_pairs={counts['neighbor_pairs']} certified_safe={certified}"
    )
    return EXIT_OK


def _burn_rows(scenario: Scenario, schedule: BurnSchedule):
    """(tau, dv, norm, allocated fuel) per burn of the final schedule."""
    rows = []
    fuel_total = 0.0
    for k in range(len(schedule)):
        dv = schedule.dvs[k]
        norm = float(np.linalg.norm(dv))
        try:
            fuel = allocate_lvlh(dv, scenario.thrusters).fuel
        except Infeasible:
            fuel = math.nan
        fuel_total += fuel
        rows.append((float(schedule.taus[k]), dv, norm, fuel))
    return rows, fuel_total


def _write_traj_csv(path, scenario: Scenario, schedule: BurnSchedule):
    model = scenario.model
    t_end = float(schedule.taus[-1]) if len(schedule) else 0.0
    n = int(math.floor(t_end / scenario.dt)) + 1
    ts = np.arange(n) * scenario.dt
    ts = np.unique(np.concatenate([ts, schedule.taus, [t_end]]))
    states = propagate_schedule_grid(model, scenario.initial_state, schedule, ts)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,dx,dy,dz,dvx_state,dvy_state,dvz_state\n")
        for t, row in zip(ts, states):
            cols = [t] + row.tolist()
            fh.write(",".join(_float_repr(c) for c in cols) + "\n")


def _write_burns_csv(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("tau,dvx,dvy,dvz,norm,fuel_allocated\n")
        for tau, dv, norm, fuel in rows:
            cols = [tau, dv[0], dv[1], dv[2], norm, fuel]
            fh.write(",".join(_float_repr(c) for c in cols) + "\n")


def _write_cam_json(path, scenario: Scenario, schedule: BurnSchedule):
    model = scenario.model
    env = scenario.environment()
    certifier = SafetyCertifier(model, scenario.thrusters, env,
                                scenario.fault_tolerance, scenario.dt)
    states = (
        propagate_schedule_grid(model, scenario.initial_state, schedule, schedule.taus)
        if len(schedule)
        else np.empty((0, 6))
    )
    entries = []
    for k in range(len(schedule)):
        state = states[k]
        cert = certifier.certify(state)
        entry = {
            "tau_s": float(schedule.taus[k]),
            "state": state.tolist(),
            "overall_safe": bool(cert.overall),
            "modes_feasible": int(cert.mode_feasible.sum()),
            "n_modes": cert.n_modes,
        }
        if cert.cam is not None:
            cam = cert.cam
            arc_ts = np.linspace(0.0, max(cam.Th, 1e-9), 65)
            arc = propagate_schedule_grid(model, state, BurnSchedule(), arc_ts)
            drift_ts = np.linspace(0.0, model.period, 65)
            drift = propagate_schedule_grid(model, cam.post_state, BurnSchedule(), drift_ts)
            entry.update(
                theta_star_rad=float(cam.theta_star),
                coast_horizon_s=float(cam.Th),
                dv_circ_mps=cam.dv_circ.tolist(),
                post_state=cam.post_state.tolist(),
                coast_arc=[row[0:3].tolist() for row in arc],
                post_arc=[row[0:3].tolist() for row in drift],
            )
        entries.append(entry)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"schema_version": 1, "burns": entries}, fh, sort_keys=True)
        fh.write("\n")


def _run_report(scenario: Scenario, plan: MissionPlan, smoothed, burn_rows, fuel_total,
                online_seconds: float):
    schedule = smoothed.schedule if smoothed is not None else plan.schedule
    total = schedule.cost_2norm()
    model = scenario.model
    t_end = float(schedule.taus[-1]) if len(schedule) else 0.0
    end = propagate_schedule_grid(model, scenario.initial_state, schedule, np.array([t_end]))[0]
    wp = scenario.waypoints[-1]
    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "outcome": "success",
        "legs": [
            {"cost_mps": c, "duration_s": lp.duration, "edges": len(lp.edges)}
            for c, lp in zip(plan.leg_costs, plan.leg_plans)
        ],
        "total_cost_mps": total,
        "unsmoothed_cost_mps": plan.total_cost,
        "fuel_allocated_mps": fuel_total,
        "fuel_ratio": (fuel_total / total) if total > 0 else 1.0,
        "n_burns": len(schedule),
        "end_state_error": {
            "pos_m": float(np.linalg.norm(end[0:3] - wp.position)),
            "vel_mps": float(np.linalg.norm(end[3:6] - wp.velocity)),
        },
        "smoothing": {
            "enabled": smoothed is not None,
            "alpha_star": smoothed.alpha_star if smoothed is not None else 0.0,
            "cost_before_mps": smoothed.cost_before if smoothed is not None else plan.total_cost,
        },
        "counters": plan.counters,
        "online_seconds": online_seconds,
    }
    return report


def cmd_plan(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"scenario validation error at {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        data = graph_io.load_binary(args.data, expected_fingerprint=scenario.fingerprint())
    except graph_io.GraphDataError as exc:
        print(f"data file rejected: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    _warmup_kernels(scenario.omega)
    prefix = args.out
    t0 = time.perf_counter()
    try:
        plan = plan_mission(
            scenario, data,
            strict_safety=True if args.strict_safety else None,
        )
        smoothed = None
        if scenario.smoothing.enabled and not args.no_smooth:
            smoothed = smooth_mission(scenario, plan)
    except PlanningFailure as exc:
        online = time.perf_counter() - t0
        report = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "outcome": "failure",
            "reason": str(exc),
            "failed_leg": exc.leg,
            "counters": exc.counters,
            "online_seconds": online,
        }
        with open(f"{prefix}.report.json", "w", encoding="utf-8") as fh:
            json.dump(report, fh, sort_keys=True, indent=1)
            fh.write("\n")
        print(f"planning failed: {exc}", file=sys.stderr)
        return EXIT_PLANNING
    online = time.perf_counter() - t0

    schedule = smoothed.schedule if smoothed is not None else plan.schedule
    rows, fuel_total = _burn_rows(scenario, schedule)
    _write_traj_csv(f"{prefix}.traj.csv", scenario, schedule)
    _write_burns_csv(f"{prefix}.burns.csv", rows)
    _write_cam_json(f"{prefix}.cam.json", scenario, schedule)
    report = _run_report(scenario, plan, smoothed, rows, fuel_total, online)
    with open(f"{prefix}.report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=1)
        fh.write("\n")
    print(
        f"total cost {report['total_cost_mps']:.4f} m/s "
        f"(fuel {fuel_total:.4f} m/s, ratio {report['fuel_ratio']:.3f}), "
        f"online {online:.2f} s"
    )
    return EXIT_OK


def _parse_sweep(tokens):
    axes = {}
    for tok in tokens:
        try:
            name, spec = tok.split("=", 1)
            lo, hi, num = spec.split(":")
            lo, hi, num = float(lo), float(hi), int(num)
        except ValueError:
            raise ScenarioError(f"(sweep): malformed token {tok!r}; expected name=lo:hi:count")
        if name not in ("n", "jbar"):
            raise ScenarioError(f"(sweep): unknown axis {name!r}")
        if num < 1 or hi < lo:
            raise ScenarioError(f"(sweep): invalid range in {tok!r}")
        vals = np.linspace(lo, hi, num)
        axes[name] = [int(round(v)) for v in vals] if name == "n" else [float(v) for v in vals]
    return axes.get("n", [None]), axes.get("jbar", [None])


def _bench_cell(payload):
    scenario_doc, n_total, j_bar = payload
    try:
        import numba

        numba.set_num_threads(1)  # cells parallelize across the pool instead
    except Exception:
        pass
    from .scenario import parse_scenario

    doc = json.loads(json.dumps(scenario_doc))
    if n_total is not None:
        per_leg = max(1, round(n_total / len(doc["waypoints"])))
        doc["planner"]["samples_per_leg"] = per_leg
    if j_bar is not None:
        doc["planner"]["j_bar_mps"] = j_bar
    scenario = parse_scenario(doc)
    eff_n = scenario.planner.samples_per_leg * len(scenario.waypoints)
    eff_j = scenario.planner.j_bar
    try:
        data = precompute(scenario)
    except SamplingExhausted as exc:
        return [(eff_n, eff_j, False, math.nan, 0.0, f"sampling_exhausted: {exc}")]
    _warmup_kernels(scenario.omega)
    t0 = time.perf_counter()
    try:
        plan = plan_mission(scenario, data)
    except PlanningFailure as exc:
        return [(eff_n, eff_j, False, math.nan, time.perf_counter() - t0, f"failure: {exc}")]
    t_plan = time.perf_counter() - t0
    rows = [(eff_n, eff_j, False, plan.total_cost, t_plan, "success")]
    if scenario.smoothing.enabled:
        t1 = time.perf_counter()
        smoothed = smooth_mission(scenario, plan)
        t_smooth = time.perf_counter() - t1
        rows.append((eff_n, eff_j, True, smoothed.cost, t_plan + t_smooth, "success"))
    return rows


def cmd_bench(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
        n_vals, j_vals = _parse_sweep(args.sweep)
    except ScenarioError as exc:
        print(f"validation error at {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    cells = [(scenario.raw, n, j) for n in n_vals for j in j_vals]
    workers = min(thread_cap(), len(cells)) or 1
    if workers > 1:
        # spawn: forking a process with live JIT thread pools is unreliable
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            results = list(pool.map(_bench_cell, cells))
    else:
        results = [_bench_cell(c) for c in cells]
    rows = [r for cell_rows in results for r in cell_rows]
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("n,j_bar,smoothed,cost_mps,online_seconds,outcome\n")
        for n, j, sm, cost, secs, outcome in rows:
            cost_s = "" if math.isnan(cost) else _float_repr(cost)
            fh.write(f"{n},{_float_repr(j)},{str(sm).lower()},{cost_s},{_float_repr(secs)},{outcome}\n")
    ok = sum(1 for r in rows if r[5] == "success")
    print(f"bench done: {len(rows)} rows, {ok} successful")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cwhfmt",
        description="Fuel-optimal actively-safe rendezvous planning near circular orbits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_pre = sub.add_parser("precompute", help="offline phase: samples, steering graph, certificates")
    p_pre.add_argument("--scenario", required=True, help="scenario JSON file")
    p_pre.add_argument("--out", required=True, help="output data file (binary)")
    p_pre.add_argument("--json-twin", action="store_true",
                       help="also write a plain-text JSON twin next to the binary")
    p_pre.set_defaults(func=cmd_precompute)

    p_plan = sub.add_parser("plan", help="online phase: tree search + smoothing")
    p_plan.add_argument("--scenario", required=True)
    p_plan.add_argument("--data", required=True, help="precomputed data file")
    p_plan.add_argument("--out", required=True, help="output prefix for traj/burns/report/cam files")
    p_plan.add_argument("--no-smooth", action="store_true", help="skip trajectory smoothing")
    p_plan.add_argument("--strict-safety", action="store_true",
                        help="certify every dt point of the final solution")
    p_plan.set_defaults(func=cmd_plan)

    p_bench = sub.add_parser("bench", help="cost-vs-runtime sweeps over n and the cost threshold")
    p_bench.add_argument("--scenario", required=True)
    p_bench.add_argument("--sweep", nargs="+", required=True,
                         help="axes like n=650:2000:9 jbar=0.2:0.4:5")
    p_bench.add_argument("--out", required=True, help="output CSV")
    p_bench.set_defaults(func=cmd_bench)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
