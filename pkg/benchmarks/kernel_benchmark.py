#!/usr/bin/env python3
"""Compare the native and pure-numpy kernel backends on the hot paths.

Run:  python benchmarks/kernel_benchmark.py [--draws N] [--repeats R]
"""

import argparse
import time

import numpy as np

from ratio_rmt._kernels import pure
from ratio_rmt._kernels.common import (beta1_panel_plan, beta1_prefactor,
                                       normals_per_draw)

try:
    from ratio_rmt._kernels import _native as native
except ImportError:
    native = None


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_sampling(draws, repeats):
    rng = np.random.default_rng(0)
    rows = []
    for beta, kern_name in ((1, "ratios_real"), (2, "ratios_herm")):
        normals = rng.standard_normal((draws, normals_per_draw(beta)))
        t_pure = best_of(lambda: getattr(pure, kern_name)(normals, 0.4), repeats)
        row = [f"{kern_name} ({draws} draws)", t_pure, None]
        if native is not None:
            row[2] = best_of(lambda: getattr(native, kern_name)(normals, 0.4), repeats)
        rows.append(row)
    return rows


def bench_triple_integral(repeats):
    rows = []
    for k, r in ((0.1, 1.0), (0.5, 1.0), (0.9, 2.0)):
        plan = beta1_panel_plan(k, r, 8.0, 9, 18, 9)
        pref = beta1_prefactor(k, r)
        check = pref * pure.eval_beta1_panels(*plan)
        t_pure = best_of(lambda: pure.eval_beta1_panels(*plan), repeats)
        row = [f"triple-integral panels k={k} r={r} ({plan[0].size} panels)",
               t_pure, None]
        if native is not None:
            v = pref * native.eval_beta1_panels(*plan)
            assert abs(v - check) < 1e-10 * abs(check)
            row[2] = best_of(lambda: native.eval_beta1_panels(*plan), repeats)
        rows.append(row)
    return rows


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--draws", type=int, default=200_000)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    print(f"native backend available: {native is not None}")
    rows = bench_sampling(args.draws, args.repeats) + bench_triple_integral(args.repeats)
    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  {'pure [ms]':>10}  {'native [ms]':>11}  {'speedup':>8}")
    for name, t_pure, t_native in rows:
        if t_native is None:
            print(f"{name:<{width}}  {1e3 * t_pure:>10.1f}  {'-':>11}  {'-':>8}")
        else:
            print(f"{name:<{width}}  {1e3 * t_pure:>10.1f}  {1e3 * t_native:>11.1f}"
                  f"  {t_pure / t_native:>7.1f}x")


if __name__ == "__main__":
    main()
