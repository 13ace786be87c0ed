"""Counter-based random numbers for reproducible, parallel Monte Carlo.

Every path owns a stream keyed by ``(seed, path_index)`` and every draw within
a path is addressed by a draw index, so the j-th uniform of path i is a pure
function of ``(seed, i, j)``.  Consequences:

* results are bit-identical no matter how paths are chunked or threaded;
* common-random-number comparisons stay aligned across parameter values,
  because draw j of path i is the same number in every run with the same seed;
* a path can stop early without shifting any other path's stream.

The generator is the SplitMix64 finalizer applied twice to
``key + j * odd_constant``; stream keys are themselves derived by the same
finalizer from ``seed`` and the path index.  Output is a float64 uniform on
[0, 1) built from the top 53 bits.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_CTR = 0xD1B54A32D192ED03
_SEED_SALT = 0x05CA1AB1E0DDBA11
_INV53 = 1.0 / 9007199254740992.0  # 2**-53

_U64 = np.uint64


def _mix64_scalar(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def _mix64(z: np.ndarray) -> np.ndarray:
    z = np.multiply(np.bitwise_xor(z, np.right_shift(z, _U64(30))), _U64(_MIX1), dtype=_U64)
    z = np.multiply(np.bitwise_xor(z, np.right_shift(z, _U64(27))), _U64(_MIX2), dtype=_U64)
    return np.bitwise_xor(z, np.right_shift(z, _U64(31)))


def stream_keys(seed: int, lo: int, hi: int) -> np.ndarray:
    """Stream keys for paths ``lo .. hi-1`` under ``seed`` (uint64 array)."""
    base = _mix64_scalar((seed & _MASK) ^ _SEED_SALT)
    idx = np.arange(lo, hi, dtype=_U64)
    raw = np.add(_U64(base), np.multiply(idx, _U64(_GOLDEN), dtype=_U64), dtype=_U64)
    return _mix64(raw)


def stream_key(seed: int, path_index: int) -> int:
    """Scalar stream key; equals ``stream_keys(seed, i, i+1)[0]``."""
    base = _mix64_scalar((seed & _MASK) ^ _SEED_SALT)
    return _mix64_scalar((base + path_index * _GOLDEN) & _MASK)


def uniforms(keys: np.ndarray, draw_index: int) -> np.ndarray:
    """Uniform [0,1) draw number ``draw_index`` for each stream in ``keys``."""
    z = np.add(keys, _U64((draw_index * _CTR) & _MASK), dtype=_U64)
    z = _mix64(_mix64(z))
    return np.right_shift(z, _U64(11)).astype(np.float64) * _INV53


def uniform_scalar(key: int, draw_index: int) -> float:
    z = (key + draw_index * _CTR) & _MASK
    z = _mix64_scalar(_mix64_scalar(z))
    return (z >> 11) * _INV53


class PathStream:
    """Sequential view of one path's stream; used by single-path stepping.

    The cursor is the index of the next draw, so a path state can be frozen
    and resumed: ``(key, cursor)`` fully locates the stream position.
    """

    __slots__ = ("key", "cursor")

    def __init__(self, seed: int, path_index: int, cursor: int = 0):
        self.key = stream_key(seed, path_index)
        self.cursor = cursor

    def next_uniform(self) -> float:
        u = uniform_scalar(self.key, self.cursor)
        self.cursor += 1
        return u
