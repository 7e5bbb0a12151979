"""Command-line driver.

Exit codes: 0 success, 1 I/O failure, 2 invalid input or parameters.
"""

from __future__ import annotations

import argparse
import logging
import math
import secrets
import sys
import time
from pathlib import Path
from typing import Sequence, TextIO

import numpy as np

from . import _kernels
from .core import QuantizationGrid, WeightVector
from .errors import ALSHError
from .evaluation import (
    brute_force_nn,
    estimate_collision_prob,
    realize_distance,
    run_recall_harness,
    write_metrics_csv,
)
from .hashing import HashVariant, collision_prob, default_window, rho, seed_sequence, select_params
from .index import IndexParams, build, load

log = logging.getLogger("wl1alsh")

EXIT_OK, EXIT_IO, EXIT_INVALID = 0, 1, 2


class UsageError(ALSHError):
    pass


def _fmt(x: float) -> str:
    return repr(float(x))


def read_rows(path: str | Path, what: str) -> np.ndarray:
    """Parse a headerless CSV of reals; blank lines are skipped, ragged rows rejected."""
    rows: list[list[float]] = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                row = [float(v) for v in text.split(",")]
            except ValueError as exc:
                raise UsageError(f"{what} {path}, line {lineno}: {exc}") from None
            if not all(math.isfinite(v) for v in row):
                raise UsageError(f"{what} {path}, line {lineno}: non-finite value")
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise UsageError(f"{what} {path}, line {lineno}: expected {width} values, got {len(row)}")
            rows.append(row)
    if not rows:
        return np.zeros((0, 0))
    return np.array(rows, dtype=np.float64)


def read_queries(path: str | Path, d: int | None = None) -> list[tuple[np.ndarray, WeightVector]]:
    """Rows of ``2d`` values: the weight vector first, then the query point."""
    rows = read_rows(path, "query file")
    if rows.shape[0] == 0:
        raise UsageError(f"query file {path} is empty")
    if rows.shape[1] % 2:
        raise UsageError(f"query file {path}: rows need 2d values (weights then point), got {rows.shape[1]}")
    qd = rows.shape[1] // 2
    if d is not None and qd != d:
        raise UsageError(f"query file {path} has d={qd}, index has d={d}")
    out = []
    for i, row in enumerate(rows):
        if not np.any(row[:qd]):
            raise UsageError(f"query file {path}, query {i + 1}: all-zero weight vector")
        out.append((row[qd:], WeightVector(row[:qd])))
    return out


def _seed(value: int | None, err: TextIO) -> int:
    if value is not None:
        return value
    seed = secrets.randbits(63)
    print(f"seed={seed} (randomly chosen; pass --seed {seed} to reproduce)", file=err)
    log.info("using random seed %d", seed)
    return seed


def _variant(tag: str, window: float | None, M: int) -> HashVariant:
    if tag == "theta":
        if window is not None:
            raise UsageError("--window only applies to the l2 variant")
        return HashVariant.theta()
    return HashVariant.l2(default_window(M) if window is None else window)


def cmd_build(args, out: TextIO, err: TextIO) -> int:
    explicit = args.k is not None or args.L is not None
    derived = args.p1 is not None or args.p2 is not None
    if explicit == derived or (explicit and (args.k is None or args.L is None)) or (
        derived and (args.p1 is None or args.p2 is None)
    ):
        raise UsageError("give either both --k and --L, or both --p1 and --p2")
    data = read_rows(args.data, "data file")
    if data.shape[0] == 0:
        raise UsageError(f"data file {args.data} is empty")
    grid = QuantizationGrid(args.ml, args.mu, args.t)
    variant = _variant(args.variant, args.window, grid.M)
    n, d = data.shape
    rho_value = float("nan")
    if derived:
        K, L = select_params(n, args.p1, args.p2)
        rho_value = rho(args.p1, args.p2)
    else:
        K, L = args.k, args.L
    seed = _seed(args.seed, err)
    params = IndexParams(variant, d, grid, K, L, seed)
    t0 = time.perf_counter()
    index = build(data, params)
    elapsed = time.perf_counter() - t0
    index.save(args.out)
    for key, value in (
        ("n", n), ("d", d), ("M", grid.M), ("K", K), ("L", L),
        ("rho", "NA" if math.isnan(rho_value) else _fmt(rho_value)),
        ("variant", variant.tag), ("window", "NA" if variant.window is None else _fmt(variant.window)),
        ("seed", seed), ("backend", _kernels.BACKEND), ("build_time_s", f"{elapsed:.3f}"),
    ):
        print(f"{key}={value}", file=out)
    return EXIT_OK


def cmd_query(args, out: TextIO, err: TextIO) -> int:
    if args.top1:
        if args.budget is None:
            raise UsageError("--top1 needs --budget")
        if args.r1 is not None or args.r2 is not None:
            raise UsageError("--top1 cannot be combined with --r1/--r2")
    else:
        if args.r1 is None or args.r2 is None:
            raise UsageError("give --r1 and --r2, or --top1 with --budget")
        if not args.r1 < args.r2:
            raise UsageError(f"--r1 must be smaller than --r2 (got {args.r1} >= {args.r2})")
    index = load(args.index)
    queries = read_queries(args.queries, index.params.d)
    lines = []
    for q, w in queries:
        hit = index.query_top1(q, w, args.budget) if args.top1 else index.query_rnn(q, w, args.r1, args.r2)
        lines.append("NONE" if hit is None else f"{hit.id},{_fmt(hit.distance)}")
    out.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_probe(args, out: TextIO, err: TextIO) -> int:
    try:
        weights = [float(v) for v in args.weights.split(",")]
    except ValueError as exc:
        raise UsageError(f"--weights: {exc}") from None
    if len(weights) != args.d:
        raise UsageError(f"--weights has {len(weights)} entries, --d is {args.d}")
    if not any(weights):
        raise UsageError("--weights is all zeros")
    if not args.rmin < args.rmax:
        raise UsageError("--rmin must be smaller than --rmax")
    if args.steps < 1:
        raise UsageError("--steps must be positive")
    w = WeightVector(np.array(weights))
    variant = _variant(args.variant, args.window, args.m)
    seed = _seed(args.seed, err) if args.simulate else None
    header = "r,theoretical_prob" + (",empirical_prob" if args.simulate else "")
    lines = [header]
    for row, r in enumerate(np.linspace(args.rmin, args.rmax, args.steps)):
        if args.simulate:
            o, q, r = realize_distance(w, args.m, float(r))
            est = estimate_collision_prob(o, q, w, variant, args.m, args.d, args.simulate, seed_sequence(seed, row))
            lines.append(f"{_fmt(r)},{_fmt(est.theoretical)},{_fmt(est.empirical)}")
        else:
            lines.append(f"{_fmt(r)},{_fmt(collision_prob(variant, float(r), w, args.m, args.d))}")
    out.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_oracle(args, out: TextIO, err: TextIO) -> int:
    data = read_rows(args.data, "data file")
    if data.shape[0] == 0:
        raise UsageError(f"data file {args.data} is empty")
    queries = read_queries(args.queries, data.shape[1])
    lines = []
    for q, w in queries:
        i, dist = brute_force_nn(data, q, w)
        lines.append(f"{i},{_fmt(dist)}")
    out.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_bench(args, out: TextIO, err: TextIO) -> int:
    seed = _seed(args.seed, err)
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((args.n, args.d))
    points = rng.standard_normal((args.queries, args.d))
    if args.weights == "mixed":
        weights = rng.uniform(-1.0, 1.0, (args.queries, args.d))
    else:
        weights = rng.uniform(0.5, 1.5, (args.queries, args.d))
    lo = math.floor(min(data.min(), points.min()))
    hi = math.ceil(max(data.max(), points.max()))
    grid = QuantizationGrid(lo, hi, args.t)
    variant = _variant(args.variant, args.window, grid.M)
    params = IndexParams(variant, args.d, grid, args.k, args.L, seed)
    budget = args.budget if args.budget is not None else max(1, args.n // 20)
    report = run_recall_harness(data, list(zip(points, weights)), params, budget)
    name = f"{variant.tag}-K{args.k}-L{args.L}-{_kernels.BACKEND}"
    text = write_metrics_csv(report.rows(name))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        out.write(text)
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wl1alsh",
        description="Asymmetric LSH for the generalized weighted Manhattan distance.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="build an index from a CSV data file")
    b.add_argument("--data", required=True)
    b.add_argument("--variant", required=True, choices=["l2", "theta"])
    b.add_argument("--ml", required=True, type=float, help="lower corner of the data box")
    b.add_argument("--mu", required=True, type=float, help="upper corner of the data box")
    b.add_argument("--t", required=True, type=float, help="grid resolution; M = floor((mu - ml) t)")
    b.add_argument("--window", type=float, help="l2 bucket width (default 4 sqrt(M))")
    b.add_argument("--k", type=int, help="hash functions per table")
    b.add_argument("--L", type=int, help="number of tables")
    b.add_argument("--p1", type=float, help="collision probability at R1 (derive K, L)")
    b.add_argument("--p2", type=float, help="collision probability at R2 (derive K, L)")
    b.add_argument("--seed", type=int)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_build)

    q = sub.add_parser("query", help="answer queries against a saved index")
    q.add_argument("--index", required=True)
    q.add_argument("--queries", required=True)
    q.add_argument("--r1", type=float)
    q.add_argument("--r2", type=float)
    q.add_argument("--top1", action="store_true")
    q.add_argument("--budget", type=int)
    q.set_defaults(func=cmd_query)

    p = sub.add_parser("probe", help="tabulate collision probability against distance")
    p.add_argument("--variant", required=True, choices=["l2", "theta"])
    p.add_argument("--m", required=True, type=int)
    p.add_argument("--d", required=True, type=int)
    p.add_argument("--weights", required=True, help="comma-separated weight vector")
    p.add_argument("--window", type=float)
    p.add_argument("--rmin", required=True, type=float)
    p.add_argument("--rmax", required=True, type=float)
    p.add_argument("--steps", required=True, type=int)
    p.add_argument("--simulate", type=int, metavar="TRIALS")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_probe)

    o = sub.add_parser("oracle", help="exact nearest neighbours by linear scan")
    o.add_argument("--data", required=True)
    o.add_argument("--queries", required=True)
    o.set_defaults(func=cmd_oracle)

    k = sub.add_parser("bench", help="recall/latency benchmark on Gaussian synthetic data")
    k.add_argument("--n", type=int, default=10_000)
    k.add_argument("--d", type=int, default=16)
    k.add_argument("--queries", type=int, default=200)
    k.add_argument("--variant", choices=["l2", "theta"], default="theta")
    k.add_argument("--weights", choices=["mixed", "positive"], default="mixed")
    k.add_argument("--t", type=float, default=8.0)
    k.add_argument("--window", type=float)
    k.add_argument("--k", type=int, default=2)
    k.add_argument("--L", type=int, default=2000)
    k.add_argument("--budget", type=int, help="candidate budget (default 5%% of n)")
    k.add_argument("--seed", type=int)
    k.add_argument("--out")
    k.set_defaults(func=cmd_bench)
    return parser


def main(argv: Sequence[str] | None = None, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=err)
    try:
        return args.func(args, out, err)
    except (ALSHError, ValueError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
