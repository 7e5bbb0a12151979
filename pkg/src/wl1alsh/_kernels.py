"""Hot loops: composite-key hashing of many grid points under many hash functions.

Two implementations with identical floating-point semantics live here. The
numba one is used when numba imports and ``WL1LSH_NO_NUMBA`` is unset; the
numpy one is the fallback. Both accumulate projections coordinate by
coordinate in the same order with no fused multiply-add, so they produce
bit-identical keys (checked in the test suite).
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "BACKEND",
    "KEY_SEED",
    "compute_keys",
    "compute_keys_numpy",
    "compute_keys_numba",
    "mix_key",
]

# murmur3 fmix64 constants and the 64-bit golden ratio
_C1 = np.uint64(0xFF51AFD7ED558CCD)
_C2 = np.uint64(0xC4CEB9FE1A85EC53)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_S33 = np.uint64(33)
KEY_SEED = np.uint64(0x243F6A8885A308D3)

_CHUNK = 1 << 15


def _flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() in {"1", "true", "yes", "on"}


def mix_key(values) -> int:
    """Composite key of a sequence of signed hash values (reference scalar form).

    ``h <- fmix64(h xor v) + golden``, starting from :data:`KEY_SEED`.
    """
    mask = (1 << 64) - 1
    h = int(KEY_SEED)
    for v in values:
        k = h ^ (int(v) & mask)
        k ^= k >> 33
        k = (k * int(_C1)) & mask
        k ^= k >> 33
        k = (k * int(_C2)) & mask
        k ^= k >> 33
        h = (k + int(_GOLDEN)) & mask
    return h


def _fmix_array(h: np.ndarray, v: np.ndarray) -> np.ndarray:
    k = h ^ v.view(np.uint64)
    k ^= k >> _S33
    k *= _C1
    k ^= k >> _S33
    k *= _C2
    k ^= k >> _S33
    k += _GOLDEN
    return k


def compute_keys_numpy(collapsed, offsets, points, weights, use_weights, is_l2, window):
    """Keys of shape ``(n, L)`` for ``n`` grid points under ``L x K`` hash functions.

    Args:
        collapsed: ``(L, K, d, M+1)`` summed prefix rows, one block per function.
        offsets: ``(L, K)`` uniform offsets (ignored for the angular variant).
        points: ``(n, d)`` integer grid coordinates.
        weights: ``(d,)`` query weights, read only when ``use_weights``.
        use_weights: query side when true, data side otherwise.
        is_l2: floor-of-projection hash when true, sign hash otherwise.
        window: bucket width for the l2 hash.
    """
    L, K, d, _ = collapsed.shape
    n = points.shape[0]
    out = np.empty((n, L), dtype=np.uint64)
    with np.errstate(over="ignore"):
        for start in range(0, n, _CHUNK):
            pts = points[start:start + _CHUNK]
            m = pts.shape[0]
            for l in range(L):
                acc = np.zeros((K, m), dtype=np.float64)
                for i in range(d):
                    c = collapsed[l, :, i, :][:, pts[:, i]]
                    if use_weights:
                        acc += weights[i] * c
                    else:
                        acc += c
                if is_l2:
                    vals = np.floor((acc + offsets[l][:, None]) / window).astype(np.int64)
                else:
                    vals = (acc >= 0.0).astype(np.int64)
                h = np.full(m, KEY_SEED, dtype=np.uint64)
                for k in range(K):
                    h = _fmix_array(h, vals[k])
                out[start:start + m, l] = h
    return out


compute_keys_numba = None

if not _flag("WL1LSH_NO_NUMBA"):
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - depends on environment
        njit = None

    if njit is not None:

        @njit(cache=True, inline="always")
        def _fmix_scalar(h, v):
            k = h ^ np.uint64(v)
            k ^= k >> _S33
            k *= _C1
            k ^= k >> _S33
            k *= _C2
            k ^= k >> _S33
            return k + _GOLDEN

        @njit(cache=True)
        def _keys_jit(collapsed, offsets, points, weights, use_weights, is_l2, window):
            L, K, d, _ = collapsed.shape
            n = points.shape[0]
            out = np.empty((n, L), dtype=np.uint64)
            h = np.empty(n, dtype=np.uint64)
            for l in range(L):
                h[:] = KEY_SEED
                for k in range(K):
                    table = collapsed[l, k]
                    b = offsets[l, k]
                    for p in range(n):
                        acc = 0.0
                        for i in range(d):
                            c = table[i, points[p, i]]
                            if use_weights:
                                acc += weights[i] * c
                            else:
                                acc += c
                        if is_l2:
                            v = np.int64(np.floor((acc + b) / window))
                        else:
                            v = np.int64(1) if acc >= 0.0 else np.int64(0)
                        h[p] = _fmix_scalar(h[p], v)
                for p in range(n):
                    out[p, l] = h[p]
            return out

        def compute_keys_numba(collapsed, offsets, points, weights, use_weights, is_l2, window):
            return _keys_jit(
                np.ascontiguousarray(collapsed, dtype=np.float64),
                np.ascontiguousarray(offsets, dtype=np.float64),
                np.ascontiguousarray(points, dtype=np.int64),
                np.ascontiguousarray(weights, dtype=np.float64),
                bool(use_weights),
                bool(is_l2),
                float(window),
            )

        compute_keys_numba.__doc__ = compute_keys_numpy.__doc__

BACKEND = "numba" if compute_keys_numba is not None else "numpy"
compute_keys = compute_keys_numba if compute_keys_numba is not None else compute_keys_numpy
