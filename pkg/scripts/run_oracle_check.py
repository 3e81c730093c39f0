#!/usr/bin/env python3
"""Brute-force check of the closed-form threshold against a policy grid search.

Simulates the household objective under "buy when X <= threshold" for every
threshold on a grid (common random numbers, exact pathwise resale) and prints
the value curve next to the analytic boundary. At the default settings the
argmax lands within a few percent of the closed form; the residual gap is the
finite-horizon truncation bias, which shrinks as --horizon grows.
"""

import argparse
import sys
import time
from dataclasses import replace

import numpy as np

from rentbuy import HouseholdEnv, PathConfig, grid_search_threshold, solve_for_environment
from rentbuy.scenario import builtin_preset


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--preset", default="atlanta")
    parser.add_argument("--x0", type=float, default=20.0)
    parser.add_argument("--n-paths", type=int, default=200_000)
    parser.add_argument("--dt", type=float, default=1.0 / 252.0)
    parser.add_argument("--horizon", type=float, default=50.0)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--grid", default="8:18:21", help="start:stop:count, inclusive")
    args = parser.parse_args()

    preset = builtin_preset(args.preset)
    env = HouseholdEnv(lam=preset.lam, resale_mode="exact")
    sol, _, _ = solve_for_environment(env, preset.ratio)

    start, stop, count = args.grid.split(":")
    grid = np.linspace(float(start), float(stop), int(count))
    cfg = PathConfig(
        n_paths=args.n_paths, dt=args.dt, horizon=args.horizon, seed=args.seed
    )

    t0 = time.perf_counter()
    result = grid_search_threshold(preset.ratio, env, args.x0, grid, cfg)
    elapsed = time.perf_counter() - t0

    print(f"market {preset.name}: closed-form threshold {sol.x_star:.4f}")
    print(f"{'threshold':>10} {'value':>12} {'std_error':>10} {'stopped':>8} {'unresolved':>10}")
    for thr, mean, se, fs, fu in zip(
        result.thresholds, result.means, result.std_errors,
        result.fraction_stopped, result.fraction_unresolved,
    ):
        tag = "  <-- argmax" if thr == result.best_threshold else ""
        print(f"{thr:>10.2f} {mean:>12.5f} {se:>10.5f} {fs:>8.3f} {fu:>10.4f}{tag}")
    gap = result.best_threshold / sol.x_star - 1.0
    print(f"argmax {result.best_threshold:.2f}, gap to closed form {gap:+.2%}, {elapsed:.1f}s")
    if result.flat_within_noise:
        print("warning: value curve is flat within noise; increase --n-paths")
    return 0


if __name__ == "__main__":
    sys.exit(main())
