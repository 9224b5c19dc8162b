"""Counter-based uniform variates keyed by (seed, stream, trajectory, draw).

Every trajectory owns an independent stream, so a trajectory's path does
not depend on how an ensemble is chunked or scheduled across workers.
The mixing function is the SplitMix64 finalizer.
"""

from __future__ import annotations

import hashlib

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z = z * _M1
    z = z ^ (z >> np.uint64(27))
    z = z * _M2
    return z ^ (z >> np.uint64(31))


def derive_key(*parts) -> int:
    """Stable 64-bit key from arbitrary printable parts."""
    text = "\x1f".join(repr(p) for p in parts).encode()
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "little")


def uniforms(key: int, trajectory: np.ndarray, counter: np.ndarray) -> np.ndarray:
    """Uniform variates on the open interval (0, 1), one per (trajectory, counter)."""
    trajectory = np.asarray(trajectory, dtype=np.uint64)
    counter = np.asarray(counter, dtype=np.uint64)
    with np.errstate(over="ignore"):
        k = np.uint64(key & _MASK64)
        z = _mix(trajectory * _GAMMA + k)
        z = _mix(z ^ (counter * _M2 + _GAMMA))
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)
