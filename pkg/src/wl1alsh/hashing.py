"""ALSH hash functions and their collision probabilities.

Both schemes share one Gaussian projection ``a`` per hash function; the data
side hashes ``P(o)`` and the query side hashes ``Q_w(q)``:

* ``l2``:    ``floor((<a, x> + b) / window)`` with ``b ~ U[0, window]``
* ``theta``: ``1 if <a, x> >= 0 else 0``

The probability that the two sides collide is a decreasing function of the
weighted Manhattan distance ``r`` between the underlying grid points, which
is what makes the pair locality sensitive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike

from .core import WeightVector, as_weights
from .errors import ParameterError
from .transform import PrefixTable, check_M, fast_projection, prefix_rows

__all__ = [
    "HashVariant",
    "HashFunctionSpec",
    "default_window",
    "seed_sequence",
    "sample_hash",
    "hash_value",
    "hash_point",
    "normal_cdf",
    "l2_collision_prob",
    "transformed_l2_distance",
    "transformed_angle",
    "collision_prob",
    "rho",
    "select_params",
]

VariantTag = Literal["l2", "theta"]

_ANGLE_TOL = 1e-9
_NEG_TOL = 1e-6


def default_window(M: int) -> float:
    """``4 sqrt(M)``: transformed distances grow like ``sqrt(M)``, so this keeps
    collision probabilities roughly independent of the grid resolution."""
    return 4.0 * math.sqrt(M)


@dataclass(frozen=True)
class HashVariant:
    """Which base family to use; ``window`` is required for ``l2`` and forbidden for ``theta``."""

    tag: VariantTag
    window: float | None = None

    def __post_init__(self) -> None:
        tag = str(self.tag).lower()
        if tag not in ("l2", "theta"):
            raise ParameterError(f"unknown variant {self.tag!r}; expected 'l2' or 'theta'")
        object.__setattr__(self, "tag", tag)
        if tag == "l2":
            if self.window is None:
                raise ParameterError("the l2 variant needs a window")
            window = float(self.window)
            if not (window > 0 and math.isfinite(window)):
                raise ParameterError(f"window must be a positive finite number, got {self.window!r}")
            object.__setattr__(self, "window", window)
        elif self.window is not None:
            raise ParameterError("the theta variant takes no window")

    @classmethod
    def l2(cls, window: float) -> "HashVariant":
        return cls("l2", window)

    @classmethod
    def theta(cls) -> "HashVariant":
        return cls("theta")

    @property
    def is_l2(self) -> bool:
        return self.tag == "l2"


@dataclass(frozen=True)
class HashFunctionSpec:
    prefix_table: PrefixTable
    offset_b: float | None
    variant: HashVariant
    seed_path: tuple[int, ...] = ()


def seed_sequence(seed: int, *path: int) -> np.random.SeedSequence:
    """Independent stream for ``(seed, *path)``, e.g. ``(seed, table, function)``."""
    return np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))


def sample_hash(
    variant: HashVariant,
    M: int,
    d: int,
    rng: np.random.Generator | np.random.SeedSequence | int,
    seed_path: tuple[int, ...] = (),
) -> HashFunctionSpec:
    """Draw ``2Md`` standard normals (and ``b`` for ``l2``) and reduce them to a prefix table.

    Args:
        variant: base hash family.
        M: grid size.
        d: dimensionality.
        rng: a generator, or anything :func:`numpy.random.default_rng` accepts.
        seed_path: identifier stored on the returned HashFunctionSpec; purely informational.

    Returns:
        The sampled hash function. Identical streams give identical specs.
    """
    M = check_M(M)
    if d < 1:
        raise ParameterError(f"dimension d must be positive, got {d}")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    draws = gen.standard_normal((2 * d, M))
    b = float(gen.uniform(0.0, variant.window)) if variant.is_l2 else None
    return HashFunctionSpec(PrefixTable(prefix_rows(draws)), b, variant, tuple(seed_path))


def hash_value(variant: HashVariant, projection: float, offset_b: float | None = None) -> int:
    """Apply the base hash to an already computed projection ``<a, x>``."""
    if variant.is_l2:
        return int(math.floor((projection + offset_b) / variant.window))
    return 0 if projection < 0.0 else 1


def hash_point(spec: HashFunctionSpec, x: ArrayLike, w: WeightVector | ArrayLike | None = None) -> int:
    """Data-side hash ``f(x)`` when ``w`` is None, query-side ``g(x)`` otherwise."""
    return hash_value(spec.variant, fast_projection(spec.prefix_table, x, w), spec.offset_b)


def normal_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function (libm accuracy, ~1e-16)."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def l2_collision_prob(s: float, window: float) -> float:
    """Collision probability of the floor-of-projection hash at Euclidean distance ``s``."""
    if s < 0:
        raise ParameterError(f"distance must be non-negative, got {s}")
    if s == 0.0:
        return 1.0
    c = window / s
    p = 1.0 - 2.0 * normal_cdf(-c) - 2.0 / (math.sqrt(2.0 * math.pi) * c) * (-math.expm1(-c * c / 2.0))
    return min(1.0, max(0.0, p))


def _check_dims(w: WeightVector, M: int, d: int) -> None:
    if w.d != d:
        raise ParameterError(f"weights have d={w.d}, expected d={d}")
    if M < 1:
        raise ParameterError(f"M must be positive, got {M}")


def transformed_l2_distance(r: float, w: WeightVector | ArrayLike, M: int, d: int) -> float:
    """``||P(o) - Q_w(q)||`` for a pair at weighted Manhattan distance ``r``.

    Equals ``sqrt(M (d + sum w^2) - 2 (M sum w - r))``, i.e.
    ``sqrt(M sum (1 - w_i)^2 + 2r)``.
    """
    wv = as_weights(w)
    _check_dims(wv, M, d)
    arg = M * (d + wv.sum_sq_w) - 2.0 * (M * wv.sum_w - r)
    scale = max(1.0, M * (d + wv.sum_sq_w))
    if arg < -_NEG_TOL * scale:
        raise ParameterError(
            f"distance r={r} is not realizable for these weights (squared transformed distance {arg} < 0)"
        )
    return math.sqrt(max(0.0, arg))


def transformed_angle(r: float, w: WeightVector | ArrayLike, M: int, d: int) -> float:
    """Angle between ``P(o)`` and ``Q_w(q)`` for a pair at distance ``r``, in ``[0, pi]``."""
    wv = as_weights(w)
    _check_dims(wv, M, d)
    # hypot rescales internally, so tiny weights whose squares underflow still work
    ratio = (M * wv.sum_w - r) / (M * math.sqrt(d) * math.hypot(*wv.weights))
    if abs(ratio) > 1.0 + _ANGLE_TOL:
        raise ParameterError(f"distance r={r} is not realizable for these weights (cosine {ratio})")
    return math.acos(min(1.0, max(-1.0, ratio)))


def collision_prob(variant: HashVariant, r: float, w: WeightVector | ArrayLike, M: int, d: int) -> float:
    """``Pr[f(o) = g(q)]`` for a data/query pair at weighted Manhattan distance ``r``."""
    if variant.is_l2:
        return l2_collision_prob(transformed_l2_distance(r, w, M, d), variant.window)
    return 1.0 - transformed_angle(r, w, M, d) / math.pi


def rho(p1: float, p2: float) -> float:
    """``log p1 / log p2``; the query-time exponent of the (K, L) construction."""
    if not (0.0 < p2 < p1 < 1.0):
        raise ParameterError(
            f"need 0 < p2 < p1 < 1, got p1={p1}, p2={p2} (p1 <= p2 usually means R1 >= R2)"
        )
    return math.log(p1) / math.log(p2)


def select_params(n: int, p1: float, p2: float) -> tuple[int, int]:
    """``K = ceil(ln n / ln(1/p2))`` functions per table and ``L = ceil(n^rho)`` tables."""
    if int(n) != n or n < 2:
        raise ParameterError(f"need n >= 2 data points, got {n}")
    exponent = rho(p1, p2)
    K = max(1, math.ceil(math.log(n) / math.log(1.0 / p2)))
    L = max(1, math.ceil(n ** exponent))
    return K, L
