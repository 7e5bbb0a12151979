"""Unary embedding, the trigonometric data/query transforms and prefix-sum projections.

A grid point ``x`` in ``{0..M}^d`` is unary coded into ``Md`` bits. The data
transform ``P(x)`` concatenates ``cos(pi/2 * bit)`` and ``sin(pi/2 * bit)``
over those bits; the query transform ``Q_w(x)`` additionally scales each
block by its weight. Then::

    weighted_manhattan(o, q, w) == M * sum(w) - <P(o), Q_w(q)>

The 2Md-dimensional vectors are only materialized by the ``materialize_*``
reference functions. Hashing goes through a :class:`PrefixTable`, which
turns ``<a, P(x)>`` into ``2d`` table lookups.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .core import WeightVector, as_weights
from .errors import DimensionError, ParameterError

__all__ = [
    "MAX_M",
    "PrefixTable",
    "check_M",
    "trig_pair",
    "unary_encode",
    "materialize_data_transform",
    "materialize_query_transform",
    "prefix_rows",
    "build_prefix_table",
    "fast_projection",
]

MAX_M = 4096


def check_M(M: int) -> int:
    if int(M) != M or M < 1:
        raise ParameterError(f"grid size M must be a positive integer, got {M!r}")
    if M > MAX_M:
        raise ParameterError(
            f"grid size M = {M} exceeds the supported maximum {MAX_M} "
            f"(each hash function stores 2d(M+1) reals); choose a smaller t"
        )
    return int(M)


def _grid_point(x: ArrayLike, M: int) -> NDArray[np.int64]:
    a = np.asarray(x)
    if a.ndim != 1:
        raise DimensionError(f"expected a single grid point, got shape {a.shape}")
    g = a.astype(np.int64)
    if not np.array_equal(g, a):
        raise ParameterError("grid point coordinates must be integers")
    if g.size and (g.min() < 0 or g.max() > M):
        bad = int(np.argmax((g < 0) | (g > M)))
        raise ParameterError(f"grid coordinate {bad} = {g[bad]} outside [0, {M}]")
    return g


def unary_encode(x: ArrayLike, M: int) -> NDArray[np.uint8]:
    """``x_i`` ones followed by ``M - x_i`` zeros, per coordinate, concatenated."""
    g = _grid_point(x, M)
    return (np.arange(M)[None, :] < g[:, None]).astype(np.uint8).reshape(-1)


def trig_pair(bit: int) -> tuple[float, float]:
    """``(cos(pi/2 * bit), sin(pi/2 * bit))`` for a unary bit, as exact constants."""
    if bit not in (0, 1):
        raise ParameterError(f"unary bits are 0 or 1, got {bit!r}")
    return (1.0, 0.0) if bit == 0 else (0.0, 1.0)


def _trig_blocks(x: ArrayLike, M: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    # same constants as trig_pair, vectorized
    bits = unary_encode(x, M).astype(np.float64)
    return 1.0 - bits, bits


def materialize_data_transform(x: ArrayLike, M: int) -> NDArray[np.float64]:
    """Reference ``P(x)`` of length ``2Md``; entries are 0/1 and the squared norm is ``Md``."""
    cos_part, sin_part = _trig_blocks(x, M)
    return np.concatenate([cos_part, sin_part])


def materialize_query_transform(x: ArrayLike, w: WeightVector | ArrayLike, M: int) -> NDArray[np.float64]:
    """Reference ``Q_w(x)`` of length ``2Md``; the squared norm is ``M * sum(w**2)``."""
    wv = as_weights(w).weights
    g = np.asarray(x)
    if g.shape != wv.shape:
        raise DimensionError(f"query has d={g.shape}, weights have d={wv.shape}")
    cos_part, sin_part = _trig_blocks(x, M)
    iw = np.repeat(wv, M)
    return np.concatenate([iw * cos_part, iw * sin_part])


def prefix_rows(draws: NDArray[np.float64]) -> NDArray[np.float64]:
    """Prefix table rows for raw draws of shape ``(..., 2d, M)``.

    Rows ``0..d-1`` hold suffix sums (accumulated right to left) ending in a
    zero; rows ``d..2d-1`` hold prefix sums (left to right) starting with a
    zero. Leading batch axes are carried through.
    """
    draws = np.asarray(draws, dtype=np.float64)
    two_d, M = draws.shape[-2:]
    d = two_d // 2
    out = np.zeros(draws.shape[:-1] + (M + 1,), dtype=np.float64)
    out[..., :d, :M] = np.cumsum(draws[..., :d, ::-1], axis=-1)[..., ::-1]
    out[..., d:, 1:] = np.cumsum(draws[..., d:, :], axis=-1)
    return out


@dataclass(frozen=True)
class PrefixTable:
    """Preprocessed projection vector for one hash function.

    ``rows`` has shape ``(2d, M+1)``. ``collapsed[i] = rows[i] + rows[d+i]``
    is what the projections actually read.
    """

    rows: NDArray[np.float64]

    def __post_init__(self) -> None:
        rows = np.array(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] % 2 or rows.shape[1] < 2:
            raise ParameterError(f"prefix table rows must have shape (2d, M+1), got {rows.shape}")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        collapsed = rows[: self.d] + rows[self.d:]
        collapsed.setflags(write=False)
        object.__setattr__(self, "_collapsed", collapsed)

    @property
    def d(self) -> int:
        return self.rows.shape[0] // 2

    @property
    def M(self) -> int:
        return self.rows.shape[1] - 1

    @property
    def collapsed(self) -> NDArray[np.float64]:
        return self._collapsed  # type: ignore[attr-defined]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PrefixTable):
            return NotImplemented
        return bool(np.array_equal(self.rows, other.rows))

    __hash__ = None  # type: ignore[assignment]


def build_prefix_table(raw_draws: ArrayLike, M: int, d: int) -> PrefixTable:
    """Build the table from ``2Md`` draws, given flat or as ``2d`` rows of ``M``.

    Example:
        >>> build_prefix_table([[1, 2, 3], [4, 5, 6]], M=3, d=1).rows.tolist()
        [[6.0, 5.0, 3.0, 0.0], [0.0, 4.0, 9.0, 15.0]]
    """
    a = np.asarray(raw_draws, dtype=np.float64)
    if a.size != 2 * M * d:
        raise ParameterError(f"expected 2*M*d = {2 * M * d} draws, got {a.size}")
    return PrefixTable(prefix_rows(a.reshape(2 * d, M)))


def fast_projection(table: PrefixTable, x: ArrayLike, w: WeightVector | ArrayLike | None = None) -> float:
    """``<a, P(x)>`` (``w`` absent) or ``<a, Q_w(x)>`` (``w`` given) from ``2d`` lookups."""
    g = _grid_point(x, table.M)
    if g.shape[0] != table.d:
        raise DimensionError(f"point has d={g.shape[0]}, table has d={table.d}")
    c = table.collapsed
    acc = 0.0
    if w is None:
        for i in range(table.d):
            acc += c[i, g[i]]
    else:
        wv = as_weights(w).weights
        if wv.shape[0] != table.d:
            raise DimensionError(f"weights have d={wv.shape[0]}, table has d={table.d}")
        for i in range(table.d):
            acc += wv[i] * c[i, g[i]]
    return float(acc)
