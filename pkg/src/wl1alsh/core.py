"""Weight vectors, the generalized weighted Manhattan distance and grid quantization.

Points are plain numpy arrays. A *real point* lives in the box
``[M_l, M_u]^d``; a *grid point* is an integer vector in ``{0, ..., M}^d``
obtained by shifting and scaling with :func:`quantize`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionError, IngestionError, ParameterError

__all__ = [
    "WeightVector",
    "QuantizationGrid",
    "as_weights",
    "weighted_manhattan",
    "weighted_manhattan_rows",
    "quantize",
    "grid_radii_to_box",
    "box_radii_to_grid",
]


@dataclass(frozen=True)
class WeightVector:
    """Per-query weights; entries may be negative or zero but not all zero.

    The sums used by the collision-probability formulas are cached eagerly.
    """

    weights: NDArray[np.float64]
    sum_w: float = field(init=False)
    sum_abs_w: float = field(init=False)
    sum_sq_w: float = field(init=False)

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=np.float64, copy=True).reshape(-1)
        if w.size == 0:
            raise ParameterError("weight vector must have at least one entry")
        if not np.all(np.isfinite(w)):
            raise ParameterError("weight vector contains non-finite entries")
        if not np.any(w):
            raise ParameterError("all-zero weight vector: the weighted distance is identically zero")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "sum_w", float(np.sum(w)))
        object.__setattr__(self, "sum_abs_w", float(np.sum(np.abs(w))))
        object.__setattr__(self, "sum_sq_w", float(np.sum(w * w)))

    @property
    def d(self) -> int:
        return int(self.weights.shape[0])

    def scaled(self, c: float) -> "WeightVector":
        return WeightVector(self.weights * c)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeightVector):
            return NotImplemented
        return bool(np.array_equal(self.weights, other.weights))

    def __hash__(self) -> int:
        return hash(self.weights.tobytes())


def as_weights(w: WeightVector | ArrayLike) -> WeightVector:
    return w if isinstance(w, WeightVector) else WeightVector(np.asarray(w, dtype=np.float64))


@dataclass(frozen=True)
class QuantizationGrid:
    """Maps the box ``[M_l, M_u]^d`` onto ``{0, ..., M}^d`` with ``M = floor((M_u - M_l) t)``."""

    M_l: float
    M_u: float
    t: float
    M: int = field(init=False)

    def __post_init__(self) -> None:
        for name in ("M_l", "M_u", "t"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ParameterError(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, v)
        if not self.M_l < self.M_u:
            raise ParameterError(f"grid needs M_l < M_u, got M_l={self.M_l}, M_u={self.M_u}")
        if self.t <= 0:
            raise ParameterError(f"resolution t must be positive, got {self.t}")
        M = math.floor((self.M_u - self.M_l) * self.t)
        if M < 1:
            raise ParameterError(
                f"(M_u - M_l) * t = {(self.M_u - self.M_l) * self.t} gives M < 1; increase t"
            )
        object.__setattr__(self, "M", int(M))


def _as_rows(x: ArrayLike) -> NDArray[np.float64]:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1:
        return a.reshape(1, -1)
    if a.ndim != 2:
        raise DimensionError(f"expected a point or a 2-D array of points, got shape {a.shape}")
    return a


def weighted_manhattan_rows(
    data: ArrayLike, q: ArrayLike, w: WeightVector | ArrayLike
) -> NDArray[np.float64]:
    """Distances from every row of ``data`` to ``q``.

    Accumulates coordinate by coordinate, so the value for a row does not
    depend on which other rows are in the batch. Brute force and index
    re-ranking therefore report bit-identical distances.
    """
    rows = _as_rows(data)
    qv = np.asarray(q, dtype=np.float64).reshape(-1)
    wv = as_weights(w).weights
    if rows.shape[1] != qv.shape[0] or qv.shape[0] != wv.shape[0]:
        raise DimensionError(
            f"dimension mismatch: points have d={rows.shape[1]}, query d={qv.shape[0]}, "
            f"weights d={wv.shape[0]}"
        )
    acc = np.zeros(rows.shape[0], dtype=np.float64)
    for i in range(qv.shape[0]):
        acc += wv[i] * np.abs(rows[:, i] - qv[i])
    return acc


def weighted_manhattan(o: ArrayLike, q: ArrayLike, w: WeightVector | ArrayLike) -> float:
    """``sum_i w_i |o_i - q_i|``. Negative when negative weights dominate."""
    o = np.asarray(o, dtype=np.float64).reshape(-1)
    return float(weighted_manhattan_rows(o, q, w)[0])


def quantize(x: ArrayLike, grid: QuantizationGrid) -> NDArray[np.int64]:
    """Shift by ``M_l`` and floor-scale by ``t``.

    Accepts a single point or an ``(n, d)`` batch; the output has the same
    leading shape. Raises :class:`IngestionError` naming the first
    offending row/coordinate when a value lies outside ``[M_l, M_u]``.
    """
    a = np.asarray(x, dtype=np.float64)
    single = a.ndim == 1
    rows = _as_rows(a)
    bad = ~((rows >= grid.M_l) & (rows <= grid.M_u))
    if bad.any():
        r, c = (int(v) for v in np.argwhere(bad)[0])
        where = f"coordinate {c}" if single else f"row {r}, coordinate {c}"
        raise IngestionError(
            f"{where} = {rows[r, c]!r} lies outside the grid box [{grid.M_l}, {grid.M_u}]"
        )
    g = np.floor((rows - grid.M_l) * grid.t).astype(np.int64)
    np.clip(g, 0, grid.M, out=g)
    return g[0] if single else g


def grid_radii_to_box(r1_grid: float, r2_grid: float, w: WeightVector | ArrayLike, t: float) -> tuple[float, float]:
    """Box-space radii guaranteed by grid-space radii (slack of ``sum |w_i|`` each side)."""
    if t <= 0:
        raise ParameterError(f"resolution t must be positive, got {t}")
    if not r1_grid < r2_grid:
        raise ParameterError(f"need R1 < R2, got R1={r1_grid}, R2={r2_grid}")
    s = as_weights(w).sum_abs_w
    return (r1_grid - s) / t, (r2_grid + s) / t


def box_radii_to_grid(r1_box: float, r2_box: float, w: WeightVector | ArrayLike, t: float) -> tuple[float, float]:
    """Inverse of :func:`grid_radii_to_box`.

    Raises :class:`ParameterError` when the quantization slack swallows the
    gap between the radii, i.e. when ``t (R2 - R1) <= 2 sum |w_i|``.
    """
    if t <= 0:
        raise ParameterError(f"resolution t must be positive, got {t}")
    if not r1_box < r2_box:
        raise ParameterError(f"need R1 < R2, got R1={r1_box}, R2={r2_box}")
    s = as_weights(w).sum_abs_w
    r1_grid, r2_grid = t * r1_box + s, t * r2_box - s
    if not r1_grid < r2_grid:
        raise ParameterError(
            f"radius gap R2 - R1 = {r2_box - r1_box} is too small for t = {t}: "
            f"quantization slack 2*sum|w| = {2 * s} exceeds t*(R2-R1); use a larger t "
            f"(at least {2 * s / (r2_box - r1_box):.6g})"
        )
    return r1_grid, r2_grid
