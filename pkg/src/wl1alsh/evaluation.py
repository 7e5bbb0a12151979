"""Ground truth and statistical checks: brute force, simulated collision rates, recall."""

from __future__ import annotations

import csv
import io
import math
import statistics
import time
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .core import WeightVector, as_weights, weighted_manhattan, weighted_manhattan_rows
from .errors import DimensionError, ParameterError
from .hashing import HashVariant, collision_prob
from .index import IndexParams, build
from .transform import check_M, prefix_rows

__all__ = [
    "CollisionEstimate",
    "RecallReport",
    "brute_force_nn",
    "realize_distance",
    "estimate_collision_prob",
    "run_recall_harness",
    "write_metrics_csv",
]

_CHUNK = 1024


def brute_force_nn(data: ArrayLike, q: ArrayLike, w: WeightVector | ArrayLike) -> tuple[int, float]:
    """Exact ``argmin_o d_w(o, q)`` by linear scan; ties go to the smallest id."""
    rows = np.asarray(data, dtype=np.float64)
    if rows.size == 0:
        raise ParameterError("brute force needs a non-empty data set")
    dist = weighted_manhattan_rows(rows, q, w)
    i = int(np.argmin(dist))
    return i, float(dist[i])


def realize_distance(w: WeightVector | ArrayLike, M: int, target: float) -> tuple[NDArray[np.int64], NDArray[np.int64], float]:
    """Grid points ``o, q`` in ``{0..M}^d`` whose weighted distance is close to ``target``.

    Greedy: ``o = 0`` and ``q_i`` is filled coordinate by coordinate, largest
    ``|w_i|`` first. Exact whenever ``target`` is an integer combination the
    greedy order can reach (e.g. any integer in range for unit weights).

    Returns:
        ``(o, q, r)`` with ``r`` the realized distance.
    """
    wv = as_weights(w).weights
    q = np.zeros(wv.shape[0], dtype=np.int64)
    residual = float(target)
    for i in np.argsort(-np.abs(wv), kind="stable"):
        if wv[i] == 0:
            continue
        q[i] = int(np.clip(round(residual / wv[i]), 0, M))
        residual -= wv[i] * q[i]
    o = np.zeros_like(q)
    return o, q, weighted_manhattan(o, q, wv)


@dataclass(frozen=True)
class CollisionEstimate:
    variant: HashVariant
    r: float
    empirical: float
    theoretical: float
    trials: int

    @property
    def deviation(self) -> float:
        return abs(self.empirical - self.theoretical)


def estimate_collision_prob(
    o: ArrayLike,
    q: ArrayLike,
    w: WeightVector | ArrayLike,
    variant: HashVariant,
    M: int,
    d: int,
    trials: int,
    seed: int | np.random.SeedSequence,
) -> CollisionEstimate:
    """Fraction of freshly sampled hash functions with ``f(o) == g(q)``.

    Trial ``i`` consumes the generator exactly as the ``i``-th call of
    :func:`~wl1alsh.hashing.sample_hash` on ``default_rng(seed)`` would, so
    the result matches a loop over ``sample_hash`` / ``hash_point``; the
    projections are just evaluated in batches.
    """
    wv = as_weights(w)
    M = check_M(M)
    o = np.asarray(o, dtype=np.int64).reshape(-1)
    q = np.asarray(q, dtype=np.int64).reshape(-1)
    if not (o.shape[0] == q.shape[0] == wv.d == d):
        raise DimensionError(f"o, q and w must all have d={d}")
    if trials < 1:
        raise ParameterError(f"trials must be positive, got {trials}")
    if min(o.min(), q.min()) < 0 or max(o.max(), q.max()) > M:
        raise ParameterError(f"grid points must lie in [0, {M}]")
    gen = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < trials:
        m = min(_CHUNK, trials - done)
        draws = np.empty((m, 2 * d, M), dtype=np.float64)
        b = np.zeros(m, dtype=np.float64)
        for j in range(m):
            draws[j] = gen.standard_normal((2 * d, M))
            if variant.is_l2:
                b[j] = gen.uniform(0.0, variant.window)
        rows = prefix_rows(draws)
        collapsed = rows[:, :d] + rows[:, d:]
        pd = np.zeros(m)
        pq = np.zeros(m)
        for i in range(d):
            pd += collapsed[:, i, o[i]]
            pq += wv.weights[i] * collapsed[:, i, q[i]]
        if variant.is_l2:
            hd = np.floor((pd + b) / variant.window)
            hq = np.floor((pq + b) / variant.window)
        else:
            hd, hq = pd >= 0.0, pq >= 0.0
        hits += int(np.count_nonzero(hd == hq))
        done += m
    r = weighted_manhattan(o, q, wv)
    return CollisionEstimate(variant, r, hits / trials, collision_prob(variant, r, wv, M, d), trials)


@dataclass(frozen=True)
class RecallReport:
    recall_at_1: float
    mean_candidates: float
    median_latency_s: float
    brute_force_median_latency_s: float
    queries: int
    build_time_s: float

    def rows(self, name: str = "recall") -> list[tuple[str, str, float]]:
        return [
            ("recall_at_1", name, self.recall_at_1),
            ("mean_candidates", name, self.mean_candidates),
            ("median_latency_s", name, self.median_latency_s),
            ("brute_force_median_latency_s", name, self.brute_force_median_latency_s),
            ("queries", name, float(self.queries)),
            ("build_time_s", name, self.build_time_s),
        ]


def _median_latency(fn, items: Sequence, min_reps: int = 100, warmup: int = 3) -> float:
    for item in items[:warmup]:
        fn(item)
    passes = max(1, math.ceil(min_reps / len(items)))
    times = []
    for _ in range(passes):
        for item in items:
            t0 = time.perf_counter()
            fn(item)
            times.append(time.perf_counter() - t0)
    return statistics.median(times)


def run_recall_harness(
    data: ArrayLike,
    queries: Sequence[tuple[ArrayLike, WeightVector | ArrayLike]],
    params: IndexParams,
    budget: int,
    time_queries: bool = True,
) -> RecallReport:
    """Build an index, answer every query with ``query_top1`` and score it against brute force.

    A query counts as recalled when the returned distance equals the exact
    minimum (so ties between ids are not penalized).
    """
    if len(queries) == 0:
        raise ParameterError("the recall harness needs at least one query")
    data = np.asarray(data, dtype=np.float64)
    admitted = [(np.asarray(q, dtype=np.float64), as_weights(w)) for q, w in queries]
    t0 = time.perf_counter()
    index = build(data, params)
    build_time = time.perf_counter() - t0
    correct = 0
    examined = 0
    for q, w in admitted:
        _, best = brute_force_nn(data, q, w)
        hit = index.query_top1(q, w, budget)
        if hit is not None:
            examined += hit.examined
            correct += hit.distance == best
    lat = bf_lat = float("nan")
    if time_queries:
        lat = _median_latency(lambda qw: index.query_top1(qw[0], qw[1], budget), admitted)
        bf_lat = _median_latency(lambda qw: brute_force_nn(data, qw[0], qw[1]), admitted)
    return RecallReport(
        recall_at_1=correct / len(admitted),
        mean_candidates=examined / len(admitted),
        median_latency_s=lat,
        brute_force_median_latency_s=bf_lat,
        queries=len(admitted),
        build_time_s=build_time,
    )


def write_metrics_csv(rows: Iterable[tuple[str, str, float]], out: TextIO | None = None) -> str:
    """Write ``metric,name,value`` rows (with header); returns the text written."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["metric", "name", "value"])
    for metric, name, value in rows:
        writer.writerow([metric, name, repr(float(value))])
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text
