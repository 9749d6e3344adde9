"""Deterministic counter-based random streams.

Every random quantity in this package is a pure function of a 64-bit key and
a counter, built from the splitmix64 finalizer (Steele, Lea & Flood 2014;
constants 0x9E3779B97F4A7C15, 0xBF58476D1CE4E5B9, 0x94D049BB133111EB).
Streams keyed by (seed, stream tag, index) can therefore be evaluated in any
order, or in parallel, with results identical to sequential generation.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _finalize(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def mix64(*values: int) -> int:
    """Hash a sequence of integers into a single 64-bit value.

    Equivalent to absorbing each value into a running splitmix64 state; used
    both for deriving stream keys and for the simulation-harness seed mixer.
    """
    h = 0
    for v in values:
        h = _finalize((h + _GOLDEN + (v & MASK64)) & MASK64)
    return h


def u64_at(key: int, counter: int) -> int:
    """The `counter`-th 64-bit word of the stream identified by `key`."""
    return _finalize((key + _GOLDEN + counter) & MASK64)


def unit_at(key: int, counter: int) -> float:
    """Uniform float in [0, 1) with 53 random bits."""
    return (u64_at(key, counter) >> 11) * 2.0**-53


def bounded_at(key: int, counter: int, bound: int) -> int:
    """Exactly uniform integer in [0, bound), by rejection.

    The rejection branch re-finalizes the current word, so the result stays a
    pure function of (key, counter, bound). Rejection fires with probability
    < bound / 2**64, so the loop is effectively a single hash.
    """
    if bound <= 0:
        raise ValueError(f"bound must be positive, got {bound}")
    threshold = (MASK64 + 1) - ((MASK64 + 1) % bound)
    h = u64_at(key, counter)
    while h >= threshold:
        h = _finalize((h + _GOLDEN) & MASK64)
    return h % bound


# -- vectorized counterparts (identical outputs, numpy uint64 arithmetic) --

_NP_GOLDEN = np.uint64(_GOLDEN)
_NP_MIX1 = np.uint64(_MIX1)
_NP_MIX2 = np.uint64(_MIX2)


def _finalize_np(z: np.ndarray) -> np.ndarray:
    # uint64 wrap-around is the point; silence numpy's scalar-overflow warning
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _NP_MIX1
        z = (z ^ (z >> np.uint64(27))) * _NP_MIX2
        return z ^ (z >> np.uint64(31))


def mix64_np(*values) -> np.ndarray:
    """Broadcasted mix64 over numpy uint64 arrays / scalars."""
    h = np.uint64(0)
    for v in values:
        v = np.asarray(v, dtype=np.uint64)
        with np.errstate(over="ignore"):
            h = h + _NP_GOLDEN + v
        h = _finalize_np(h)
    return h


def u64_np(keys, counters) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.uint64)
    counters = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        s = keys + _NP_GOLDEN + counters
    return _finalize_np(s)


def unit_np(keys, counters) -> np.ndarray:
    return (u64_np(keys, counters) >> np.uint64(11)) * 2.0**-53


def bounded_np(keys, counters, bound: int) -> np.ndarray:
    """Vectorized `bounded_at`; elementwise identical to the scalar version."""
    if bound <= 0:
        raise ValueError(f"bound must be positive, got {bound}")
    remainder = (MASK64 + 1) % bound
    h = u64_np(keys, counters)
    if remainder:  # remainder == 0 means bound divides 2**64: accept all
        threshold = np.uint64((MASK64 + 1) - remainder)
        reject = h >= threshold
        while reject.any():
            with np.errstate(over="ignore"):
                bumped = h + _NP_GOLDEN
            h = np.where(reject, _finalize_np(bumped), h)
            reject = h >= threshold
    return (h % np.uint64(bound)).astype(np.int64)
