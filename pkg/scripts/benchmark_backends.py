#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times representative workloads on both backends (after a JIT warmup pass)
and checks that results agree to floating-point noise.  Run with

    python3 scripts/benchmark_backends.py
"""

import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from cwhfmt import kernels_numba as knb  # noqa: E402
from cwhfmt import kernels_numpy as knp  # noqa: E402

OMEGA = 1.0592e-3
PERIOD = 2.0 * np.pi / OMEGA


def rel_dev(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = np.maximum(np.abs(a), 1.0)
    finite = np.isfinite(a) & np.isfinite(b)
    if not finite.all():
        if not np.array_equal(np.isfinite(a), np.isfinite(b)):
            return np.inf
    return float((np.abs(a - b) / scale)[finite].max()) if finite.any() else 0.0


def bench(name, fn_numba, fn_numpy, compare):
    fn_numba()  # warmup / JIT
    t0 = time.perf_counter()
    out_nb = fn_numba()
    t_nb = time.perf_counter() - t0
    t0 = time.perf_counter()
    out_np = fn_numpy()
    t_np = time.perf_counter() - t0
    dev = compare(out_nb, out_np)
    print(f"{name:<22} numba {t_nb*1e3:9.2f} ms   numpy {t_np*1e3:9.2f} ms   "
          f"speedup {t_np/max(t_nb,1e-12):6.2f}x   max rel dev {dev:.2e}")
    return dev


def main():
    rng = np.random.default_rng(0)
    devs = []

    Ts = rng.uniform(1.0, 0.5 * PERIOD, 20000)
    devs.append(bench(
        "stm_batch", lambda: knb.stm_batch(OMEGA, Ts), lambda: knp.stm_batch(OMEGA, Ts),
        lambda a, b: rel_dev(a, b),
    ))

    x0 = np.array([-200.0, 300.0, 10.0, 0.1, -0.2, 0.05])
    taus = np.sort(rng.uniform(0.0, 5000.0, 24))
    dvs = rng.normal(size=(24, 3)) * 0.05
    ts = np.sort(rng.uniform(0.0, 6000.0, 20000))
    devs.append(bench(
        "propagate_grid",
        lambda: knb.propagate_grid(OMEGA, x0, taus, dvs, ts),
        lambda: knp.propagate_grid(OMEGA, x0, taus, dvs, ts),
        lambda a, b: rel_dev(a, b),
    ))

    n = 220
    X0 = np.hstack([rng.uniform(-400, 400, (n, 3)), rng.uniform(-0.4, 0.4, (n, 3))])
    XF = np.hstack([rng.uniform(-400, 400, (n, 3)), rng.uniform(-0.4, 0.4, (n, 3))])
    grid = 0.1 * PERIOD * np.arange(1, 65) / 64
    phis = knp.stm_batch(OMEGA, grid)
    mats = np.zeros((64, 6, 6))
    mats[:, :, 0:3] = phis[:, :, 3:6]
    mats[:, 3:6, 3:6] = np.eye(3)
    invs = np.linalg.inv(mats)
    valid = np.ones(64, dtype=bool)
    devs.append(bench(
        "pair_cost_profiles",
        lambda: knb.pair_cost_profiles(X0, XF, phis, invs, valid),
        lambda: knp.pair_cost_profiles(X0, XF, phis, invs, valid),
        lambda a, b: max(rel_dev(a[0], b[0]), rel_dev(a[1], b[1])),
    ))

    m = 4000
    lo = np.full(m, 0.02 * PERIOD)
    hi = np.full(m, 0.05 * PERIOD)
    Xa = np.hstack([rng.uniform(-400, 400, (m, 3)), rng.uniform(-0.4, 0.4, (m, 3))])
    Xb = np.hstack([rng.uniform(-400, 400, (m, 3)), rng.uniform(-0.4, 0.4, (m, 3))])
    devs.append(bench(
        "refine_brackets",
        lambda: knb.refine_brackets(OMEGA, Xa, Xb, lo, hi, 0.1 * PERIOD * 1e-4),
        lambda: knp.refine_brackets(OMEGA, Xa, Xb, lo, hi, 0.1 * PERIOD * 1e-4),
        lambda a, b: max(rel_dev(a[1], b[1]), rel_dev(a[0], b[0])),
    ))

    pts = np.hstack([rng.uniform(-600, 600, (200000, 3)), rng.uniform(-1, 1, (200000, 3))])
    box_lo = np.array([-900.0, -6000.0, -150.0, -8.0, -8.0, -8.0])
    box_hi = -box_lo
    koz = 1.0 / np.array([36.0, 51.0, 16.0]) ** 2
    c_apex = np.array([[2.0, 0.0, 0.0]])
    c_axis = np.array([[-1.0, 0.0, 0.0]])
    c_tanb = np.array([np.tan(np.radians(30.0))])
    c_h = np.array([79.0])
    c_bc = c_apex + c_axis * c_h / 2.0
    c_br = np.hypot(c_h / 2.0, c_h * c_tanb)
    args = (box_lo, box_hi, koz, 51.0, c_apex, c_axis, c_tanb, c_h, c_bc, c_br)
    devs.append(bench(
        "feasible_points",
        lambda: knb.feasible_points(pts, *args),
        lambda: knp.feasible_points(pts, *args),
        lambda a, b: 0.0 if np.array_equal(a, b) else np.inf,
    ))

    thetas = np.linspace(0.0, 2.0 * np.pi, 100000)
    devs.append(bench(
        "dvcirc_sq_profile",
        lambda: knb.dvcirc_sq_profile(OMEGA, x0, thetas),
        lambda: knp.dvcirc_sq_profile(OMEGA, x0, thetas),
        lambda a, b: rel_dev(a, b),
    ))

    worst = max(devs)
    print(f"\nworst relative deviation across kernels: {worst:.2e}")
    if worst > 1e-9:
        print("BACKENDS DISAGREE beyond tolerance")
        return 1
    print("backends agree within 1e-9")
    return 0


if __name__ == "__main__":
    sys.exit(main())
