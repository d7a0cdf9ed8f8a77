"""Deterministic random numbers for reproducible sampling.

The generator is SplitMix64: state advances by the odd constant
0x9E3779B97F4A7C15 and each output is the finalizer mix of the new state.
It is seedable, has a 64-bit state, and its output stream is fixed by this
module alone, so golden tests pinned to (seed, GENERATOR_ID) stay valid
independent of numpy's own RNG evolution.

Uniform doubles are the top 53 bits of each output scaled to [0, 1).
Sub-streams (one per measurement setting) are derived as

    derived_seed = mix64(seed XOR ((index + 1) * 0x9E3779B97F4A7C15 mod 2^64))

which is the documented seed/index mix referenced in every report.
"""

from __future__ import annotations

import numpy as np

GENERATOR_ID = "splitmix64-invcdf-v1"

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a 64-bit integer."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Per-setting sub-stream seed from a master seed and a setting index."""
    if index < 0:
        raise ValueError("sub-stream index must be nonnegative")
    return mix64((seed & _MASK64) ^ (((index + 1) * _GAMMA) & _MASK64))


def random_uint64(seed: int, n: int) -> np.ndarray:
    """First n outputs of the SplitMix64 stream started at ``seed``."""
    steps = np.arange(1, n + 1, dtype=np.uint64)
    states = np.uint64(seed & _MASK64) + np.uint64(_GAMMA) * steps
    z = (states ^ (states >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def random_uniform(seed: int, n: int) -> np.ndarray:
    """n uniform float64 samples in [0, 1), from the stream at ``seed``."""
    return (random_uint64(seed, n) >> np.uint64(11)) * (1.0 / (1 << 53))


def multinomial(probs: np.ndarray, n_events: int, seed: int) -> np.ndarray:
    """Multinomial counts by inverse-CDF lookup of stream uniforms.

    Fully determined by (probs, n_events, seed).  ``probs`` must be
    nonnegative and sum to 1 within 1e-9; the final CDF bin is stretched to
    1.0 so rounding in the cumulative sum cannot produce an out-of-range
    category.
    """
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("probs must be a nonempty 1-D array")
    if np.any(p < 0):
        raise ValueError("probs must be nonnegative")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"probs must sum to 1 (got {p.sum()!r})")
    if n_events < 1:
        raise ValueError("n_events must be >= 1")
    cdf = np.cumsum(p)
    cdf[-1] = 1.0
    u = random_uniform(seed, n_events)
    cells = np.searchsorted(cdf, u, side="right")
    return np.bincount(cells, minlength=p.size).astype(np.int64)
