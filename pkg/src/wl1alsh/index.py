"""Multi-table ALSH index.

Data points are hashed once with the weight-free data-side functions. Each
query brings its own weight vector and is hashed with the query-side
functions, so one index serves arbitrary (including negative) weights.

Every table keys a point by mixing its ``K`` hash values into one 64-bit
integer. Key collisions between different hash tuples only add candidates;
all answers are re-ranked with the exact distance on the original
coordinates.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import _kernels
from .core import (
    QuantizationGrid,
    WeightVector,
    as_weights,
    box_radii_to_grid,
    quantize,
    weighted_manhattan_rows,
)
from .errors import DimensionError, IndexFormatError, IngestionError, ParameterError
from .hashing import HashFunctionSpec, HashVariant, sample_hash, seed_sequence
from .transform import check_M

__all__ = [
    "IndexParams",
    "HashTableSet",
    "Hit",
    "RNNScan",
    "build",
    "save",
    "load",
    "MAGIC",
    "FORMAT_VERSION",
]

MAGIC = b"AWL1"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIBIIddddHHQQ")
_VARIANT_CODES = {"l2": 0, "theta": 1}
_VERIFY_POINTS = 64


@dataclass(frozen=True)
class IndexParams:
    variant: HashVariant
    d: int
    grid: QuantizationGrid
    K: int
    L: int
    seed: int

    def __post_init__(self) -> None:
        if int(self.d) != self.d or self.d < 1:
            raise ParameterError(f"dimension d must be a positive integer, got {self.d!r}")
        for name in ("K", "L"):
            v = getattr(self, name)
            if int(v) != v or not 1 <= v <= 0xFFFF:
                raise ParameterError(f"{name} must be an integer in [1, 65535], got {v!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ParameterError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        check_M(self.grid.M)
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "K", int(self.K))
        object.__setattr__(self, "L", int(self.L))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def M(self) -> int:
        return self.grid.M


class Hit(NamedTuple):
    id: int
    distance: float
    examined: int


class RNNScan(NamedTuple):
    hit: Hit | None
    examined: int


def _sample_functions(params: IndexParams) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    d, M = params.d, params.M
    collapsed = np.empty((params.L, params.K, d, M + 1), dtype=np.float64)
    offsets = np.zeros((params.L, params.K), dtype=np.float64)
    for l in range(params.L):
        for k in range(params.K):
            spec = sample_hash(params.variant, M, d, seed_sequence(params.seed, l, k), (params.seed, l, k))
            collapsed[l, k] = spec.prefix_table.collapsed
            if spec.offset_b is not None:
                offsets[l, k] = spec.offset_b
    return collapsed, offsets


class HashTableSet:
    """``L`` hash tables over a fixed point set.

    Use :func:`build` or :func:`load` rather than the constructor. Instances
    are immutable after construction and safe to query concurrently.
    """

    def __init__(
        self,
        params: IndexParams,
        real_points: NDArray[np.float64],
        grid_points: NDArray[np.int64],
        bucket_keys: list[NDArray[np.uint64]],
        bucket_starts: list[NDArray[np.int64]],
        bucket_ids: list[NDArray[np.uint32]],
        collapsed: NDArray[np.float64] | None = None,
        offsets: NDArray[np.float64] | None = None,
    ) -> None:
        self.params = params
        self.real_points = real_points
        self.grid_points = grid_points
        self.bucket_keys = bucket_keys
        self.bucket_starts = bucket_starts
        self.bucket_ids = bucket_ids
        if collapsed is None or offsets is None:
            collapsed, offsets = _sample_functions(params)
        self._collapsed = collapsed
        self._offsets = offsets
        for a in (real_points, grid_points, collapsed, offsets, *bucket_keys, *bucket_starts, *bucket_ids):
            a.setflags(write=False)

    # -- introspection -------------------------------------------------

    @property
    def n(self) -> int:
        return int(self.real_points.shape[0])

    def hash_function(self, table: int, func: int) -> HashFunctionSpec:
        """Re-derive the HashFunctionSpec of function ``func`` in table ``table`` from the seed."""
        p = self.params
        if not (0 <= table < p.L and 0 <= func < p.K):
            raise ParameterError(f"no hash function ({table}, {func}) in a {p.L}x{p.K} index")
        return sample_hash(p.variant, p.M, p.d, seed_sequence(p.seed, table, func), (p.seed, table, func))

    def data_keys(self, grid_points: ArrayLike) -> NDArray[np.uint64]:
        """``(n, L)`` data-side composite keys of grid points. Never reads a weight vector."""
        pts = np.atleast_2d(np.asarray(grid_points, dtype=np.int64))
        v = self.params.variant
        dummy = np.zeros(self.params.d, dtype=np.float64)
        return _kernels.compute_keys(
            self._collapsed, self._offsets, pts, dummy, False, v.is_l2, v.window or 1.0
        )

    def query_keys(self, grid_query: ArrayLike, w: WeightVector) -> NDArray[np.uint64]:
        """``(L,)`` query-side composite keys of one grid point under weights ``w``."""
        pts = np.asarray(grid_query, dtype=np.int64).reshape(1, -1)
        v = self.params.variant
        return _kernels.compute_keys(
            self._collapsed, self._offsets, pts, w.weights, True, v.is_l2, v.window or 1.0
        )[0]

    def bucket(self, table: int, key: int | np.uint64) -> NDArray[np.uint32]:
        keys = self.bucket_keys[table]
        key = np.uint64(key)
        pos = int(np.searchsorted(keys, key))
        if pos < keys.shape[0] and keys[pos] == key:
            starts = self.bucket_starts[table]
            return self.bucket_ids[table][starts[pos]:starts[pos + 1]]
        return self.bucket_ids[table][:0]

    def point_keys(self) -> NDArray[np.uint64]:
        """``(n, L)`` stored key of every point, read back from the bucket directories."""
        out = np.empty((self.n, self.params.L), dtype=np.uint64)
        for l in range(self.params.L):
            counts = np.diff(self.bucket_starts[l])
            out[self.bucket_ids[l], l] = np.repeat(self.bucket_keys[l], counts)
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HashTableSet):
            return NotImplemented
        same = (
            self.params == other.params
            and np.array_equal(self.real_points, other.real_points)
            and np.array_equal(self.grid_points, other.grid_points)
        )
        for mine, theirs in (
            (self.bucket_keys, other.bucket_keys),
            (self.bucket_starts, other.bucket_starts),
            (self.bucket_ids, other.bucket_ids),
        ):
            same = same and all(np.array_equal(a, b) for a, b in zip(mine, theirs))
        return bool(same)

    __hash__ = None  # type: ignore[assignment]

    # -- queries -------------------------------------------------------

    def _admit(self, q: ArrayLike, w: WeightVector | ArrayLike) -> tuple[NDArray[np.float64], WeightVector, NDArray[np.int64]]:
        wv = as_weights(w)
        qv = np.asarray(q, dtype=np.float64).reshape(-1)
        if qv.shape[0] != self.params.d or wv.d != self.params.d:
            raise DimensionError(
                f"index has d={self.params.d}, query has d={qv.shape[0]}, weights have d={wv.d}"
            )
        return qv, wv, quantize(qv, self.params.grid)

    def rnn_scan(self, q: ArrayLike, w: WeightVector | ArrayLike, r1: float, r2: float) -> RNNScan:
        """Like :meth:`query_rnn`, also reporting how many distances were evaluated."""
        qv, wv, gq = self._admit(q, w)
        box_radii_to_grid(r1, r2, wv, self.params.grid.t)
        budget = 3 * self.params.L
        if self.n == 0:
            return RNNScan(None, 0)
        seen = np.zeros(self.n, dtype=bool)
        examined = 0
        for l, key in enumerate(self.query_keys(gq, wv)):
            ids = self.bucket(l, key)
            ids = ids[~seen[ids]]
            if ids.shape[0] == 0:
                continue
            ids = ids[: budget - examined]
            seen[ids] = True
            dist = weighted_manhattan_rows(self.real_points[ids], qv, wv)
            close = np.flatnonzero(dist <= r2)
            if close.shape[0]:
                j = int(close[0])
                examined += j + 1
                return RNNScan(Hit(int(ids[j]), float(dist[j]), examined), examined)
            examined += ids.shape[0]
            if examined >= budget:
                break
        return RNNScan(None, examined)

    def query_rnn(self, q: ArrayLike, w: WeightVector | ArrayLike, r1: float, r2: float) -> Hit | None:
        """Solve ``(R1, R2)``-near-neighbor search for box-space radii.

        Probes the query's bucket in each table in order and returns the
        first candidate whose exact distance is at most ``r2``. Gives up
        after ``3L`` distinct candidates.

        Raises:
            ParameterError: ``r1 >= r2`` or the radius gap is smaller than the
                quantization slack ``2 sum |w| / t``.
        """
        return self.rnn_scan(q, w, r1, r2).hit

    def query_top1(self, q: ArrayLike, w: WeightVector | ArrayLike, candidate_budget: int) -> Hit | None:
        """Approximate ``argmin_o d_w(o, q)`` from at most ``candidate_budget`` colliding points.

        Candidates are gathered from the query's bucket in every table and,
        when there are more than the budget, the ones colliding in the most
        tables are kept (ties go to the smaller id). The survivor with the
        smallest exact distance wins; ties go to the smaller id.
        """
        if int(candidate_budget) != candidate_budget or candidate_budget < 1:
            raise ParameterError(f"candidate budget must be a positive integer, got {candidate_budget!r}")
        qv, wv, gq = self._admit(q, w)
        if self.n == 0:
            return None
        hits = [self.bucket(l, key) for l, key in enumerate(self.query_keys(gq, wv))]
        counts = np.bincount(np.concatenate(hits).astype(np.int64), minlength=self.n)
        cands = np.flatnonzero(counts)
        if cands.shape[0] == 0:
            return None
        if cands.shape[0] > candidate_budget:
            order = np.lexsort((cands, -counts[cands]))
            cands = np.sort(cands[order[: int(candidate_budget)]])
        dist = weighted_manhattan_rows(self.real_points[cands], qv, wv)
        j = int(np.lexsort((cands, dist))[0])
        return Hit(int(cands[j]), float(dist[j]), int(cands.shape[0]))

    def save(self, path: str | Path) -> None:
        save(self, path)


def _ingest(data: ArrayLike, d: int) -> NDArray[np.float64]:
    try:
        a = np.array(data, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise IngestionError(f"data is not a rectangular array of reals: {exc}") from exc
    if a.size == 0:
        return np.zeros((0, d), dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != d:
        raise DimensionError(f"expected data of shape (n, {d}), got {a.shape}")
    if not np.all(np.isfinite(a)):
        r, c = (int(v) for v in np.argwhere(~np.isfinite(a))[0])
        raise IngestionError(f"row {r}, coordinate {c} is not finite")
    return np.ascontiguousarray(a)


def _tables_from_keys(keys: NDArray[np.uint64]):
    n, L = keys.shape
    bk, bs, bi = [], [], []
    for l in range(L):
        col = keys[:, l]
        order = np.argsort(col, kind="stable")
        sk = col[order]
        if n:
            new = np.empty(n, dtype=bool)
            new[0] = True
            np.not_equal(sk[1:], sk[:-1], out=new[1:])
            first = np.flatnonzero(new)
        else:
            first = np.zeros(0, dtype=np.int64)
        bk.append(sk[first].copy())
        bs.append(np.append(first, n).astype(np.int64))
        bi.append(order.astype(np.uint32))
    return bk, bs, bi


def build(data: ArrayLike, params: IndexParams) -> HashTableSet:
    """Quantize ``data`` and insert every point into each of the ``L`` tables.

    Raises:
        IngestionError: a coordinate lies outside the grid box; the message
            names the row.
    """
    if not isinstance(params, IndexParams):
        raise ParameterError("params must be an IndexParams instance")
    real = _ingest(data, params.d)
    if real.shape[0] >= 2**32:
        raise ParameterError("at most 2^32 - 1 points are supported")
    grid = quantize(real, params.grid) if real.shape[0] else np.zeros((0, params.d), dtype=np.int64)
    collapsed, offsets = _sample_functions(params)
    v = params.variant
    keys = _kernels.compute_keys(
        collapsed, offsets, grid, np.zeros(params.d), False, v.is_l2, v.window or 1.0
    )
    bk, bs, bi = _tables_from_keys(keys)
    return HashTableSet(params, real, grid, bk, bs, bi, collapsed, offsets)


# -- persistence ----------------------------------------------------------


def _table_words(keys: NDArray[np.uint64], starts: NDArray[np.int64], ids: NDArray[np.uint32]) -> NDArray[np.uint32]:
    nb = keys.shape[0]
    n = ids.shape[0]
    words = np.empty(3 * nb + n, dtype=np.uint32)
    head = starts[:-1] + 3 * np.arange(nb)
    words[head] = (keys & np.uint64(0xFFFFFFFF)).astype(np.uint32)
    words[head + 1] = (keys >> np.uint64(32)).astype(np.uint32)
    words[head + 2] = np.diff(starts).astype(np.uint32)
    bucket_of = np.repeat(np.arange(nb), np.diff(starts))
    words[np.arange(n) + 3 * (bucket_of + 1)] = ids
    return words


def save(index: HashTableSet, path: str | Path) -> None:
    """Write ``index`` in the little-endian ``AWL1`` format.

    Hash functions are not stored; :func:`load` re-derives them from the seed.
    """
    p = index.params
    header = _HEADER.pack(
        MAGIC,
        FORMAT_VERSION,
        _VARIANT_CODES[p.variant.tag],
        p.d,
        p.M,
        p.grid.M_l,
        p.grid.M_u,
        p.grid.t,
        p.variant.window or 0.0,
        p.K,
        p.L,
        p.seed,
        index.n,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(index.real_points.astype("<f8").tobytes())
        fh.write(index.grid_points.astype("<u4").tobytes())
        for l in range(p.L):
            fh.write(struct.pack("<I", index.bucket_keys[l].shape[0]))
            words = _table_words(index.bucket_keys[l], index.bucket_starts[l], index.bucket_ids[l])
            fh.write(words.astype("<u4").tobytes())


class _Reader:
    def __init__(self, buf: bytes) -> None:
        self.buf = buf
        self.pos = 0

    def take(self, nbytes: int, what: str) -> bytes:
        if self.pos + nbytes > len(self.buf):
            raise IndexFormatError(
                f"truncated index file: needed {nbytes} bytes for {what} at offset {self.pos}, "
                f"only {len(self.buf) - self.pos} left"
            )
        out = self.buf[self.pos:self.pos + nbytes]
        self.pos += nbytes
        return out


def _parse_table(words: NDArray[np.uint32], nb: int, n: int, l: int):
    # bucket headers can only be located by walking the counts
    w = words.tolist()
    head = np.empty(nb, dtype=np.int64)
    pos = 0
    for b in range(nb):
        if pos + 3 > len(w):
            raise IndexFormatError(f"table {l}: bucket directory overruns the table")
        count = w[pos + 2]
        if count == 0:
            raise IndexFormatError(f"table {l}: bucket {b} is empty")
        head[b] = pos
        pos += 3 + count
    if pos != len(w):
        raise IndexFormatError(f"table {l}: bucket counts do not add up to {n} ids")
    lo = words[head].astype(np.uint64)
    hi = words[head + 1].astype(np.uint64)
    keys = lo | (hi << np.uint64(32))
    counts = words[head + 2].astype(np.int64)
    starts = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    is_id = np.ones(words.shape[0], dtype=bool)
    for j in range(3):
        is_id[head + j] = False
    return keys, starts, words[is_id].copy()


def load(path: str | Path) -> HashTableSet:
    """Read an index written by :func:`save` and check it against the re-derived hash functions.

    Raises:
        IndexFormatError: wrong magic, unsupported version, truncation,
            trailing bytes or inconsistent bucket directories.
    """
    with open(path, "rb") as fh:
        buf = fh.read()
    r = _Reader(buf)
    head = r.take(_HEADER.size, "the header")
    magic, version, code, d, M, ml, mu, t, window, K, L, seed, n = _HEADER.unpack(head)
    if magic != MAGIC:
        raise IndexFormatError(f"bad magic {magic!r}: expected {MAGIC!r} (not an index file?)")
    if version != FORMAT_VERSION:
        raise IndexFormatError(f"unsupported format version {version}; this build reads version {FORMAT_VERSION}")
    tags = {v: k for k, v in _VARIANT_CODES.items()}
    if code not in tags:
        raise IndexFormatError(f"unknown variant code {code}")
    try:
        variant = HashVariant(tags[code], window if tags[code] == "l2" else None)
        grid = QuantizationGrid(ml, mu, t)
        params = IndexParams(variant, d, grid, K, L, seed)
    except ParameterError as exc:
        raise IndexFormatError(f"invalid parameters in header: {exc}") from exc
    if grid.M != M:
        raise IndexFormatError(f"header M={M} disagrees with the grid (which gives M={grid.M})")
    real = np.frombuffer(r.take(8 * n * d, "stored points"), dtype="<f8").astype(np.float64).reshape(n, d)
    grid_pts = np.frombuffer(r.take(4 * n * d, "grid coordinates"), dtype="<u4").astype(np.int64).reshape(n, d)
    if n and grid_pts.max() > M:
        raise IndexFormatError("stored grid coordinate exceeds M")
    bk, bs, bi = [], [], []
    for l in range(L):
        (nb,) = struct.unpack("<I", r.take(4, f"table {l} size"))
        if nb > n:
            raise IndexFormatError(f"table {l}: {nb} buckets for {n} points")
        words = np.frombuffer(r.take(4 * (3 * nb + n), f"table {l}"), dtype="<u4").astype(np.uint32)
        keys, starts, ids = _parse_table(words, nb, n, l)
        if nb > 1 and not np.all(keys[1:] > keys[:-1]):
            raise IndexFormatError(f"table {l}: bucket keys are not strictly increasing")
        if n and not np.array_equal(np.sort(ids), np.arange(n, dtype=np.uint32)):
            raise IndexFormatError(f"table {l}: point ids are not a permutation of 0..{n - 1}")
        bk.append(keys)
        bs.append(starts)
        bi.append(ids)
    if r.pos != len(buf):
        raise IndexFormatError(f"{len(buf) - r.pos} unexpected trailing bytes")
    index = HashTableSet(params, real, grid_pts, bk, bs, bi)
    m = min(n, _VERIFY_POINTS)
    if m and not np.array_equal(index.data_keys(grid_pts[:m]), index.point_keys()[:m]):
        raise IndexFormatError("hash functions re-derived from the seed do not reproduce the stored buckets")
    return index
