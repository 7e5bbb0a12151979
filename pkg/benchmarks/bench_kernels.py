"""Time the numba and numpy key-hashing backends on an index-sized workload.

Usage:
    python benchmarks/bench_kernels.py [--n 10000] [--d 16] [--t 8] [--k 2] [--L 200]

Prints one CSV row per (backend, side) with the best-of-N wall time and
checks that both backends produce bit-identical keys.
"""

import argparse
import math
import time

import numpy as np

from wl1alsh import _kernels
from wl1alsh.core import QuantizationGrid, quantize
from wl1alsh.hashing import HashVariant
from wl1alsh.index import IndexParams, _sample_functions


def best_time(fn, repeats):
    best = math.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=10_000)
    parser.add_argument("--d", type=int, default=16)
    parser.add_argument("--t", type=float, default=8.0)
    parser.add_argument("--k", type=int, default=2)
    parser.add_argument("--L", type=int, default=200)
    parser.add_argument("--variant", choices=["l2", "theta"], default="theta")
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    data = rng.standard_normal((args.n, args.d))
    grid = QuantizationGrid(math.floor(data.min()), math.ceil(data.max()), args.t)
    variant = HashVariant.theta() if args.variant == "theta" else HashVariant.l2(4.0 * math.sqrt(grid.M))
    params = IndexParams(variant, args.d, grid, args.k, args.L, args.seed)
    collapsed, offsets = _sample_functions(params)
    points = quantize(data, grid)
    weights = rng.uniform(-1.0, 1.0, args.d)
    window = variant.window or 1.0

    backends = {"numpy": _kernels.compute_keys_numpy}
    if _kernels.compute_keys_numba is not None:
        backends["numba"] = _kernels.compute_keys_numba
        # compile outside the timed region
        _kernels.compute_keys_numba(collapsed, offsets, points[:1], weights, False, variant.is_l2, window)
        _kernels.compute_keys_numba(collapsed, offsets, points[:1], weights, True, variant.is_l2, window)
    else:
        print("# numba unavailable or disabled; timing numpy only")

    print(f"# n={args.n} d={args.d} M={grid.M} K={args.k} L={args.L} variant={variant.tag}")
    print("backend,side,points,seconds,us_per_point_table")
    keys = {}
    for name, fn in backends.items():
        sec, keys[(name, "data")] = best_time(
            lambda: fn(collapsed, offsets, points, weights, False, variant.is_l2, window), args.repeats
        )
        print(f"{name},data,{args.n},{sec:.4f},{1e6 * sec / (args.n * args.L):.4f}")
        one = points[:1]
        sec, keys[(name, "query")] = best_time(
            lambda: fn(collapsed, offsets, one, weights, True, variant.is_l2, window), max(args.repeats, 20)
        )
        print(f"{name},query,1,{sec:.6f},{1e6 * sec / args.L:.4f}")
    if "numba" in backends:
        same = all(np.array_equal(keys[("numpy", s)], keys[("numba", s)]) for s in ("data", "query"))
        print(f"# keys bit-identical across backends: {same}")


if __name__ == "__main__":
    main()
