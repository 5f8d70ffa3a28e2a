"""Counter-based random numbers.

Every draw is a pure function of ``(key, counter)``, so results do not depend
on the order in which samples are evaluated, on batching, or on the number of
worker threads.  Keys are derived from a user seed plus string labels, which
keeps independent consumers (prior draws, per-channel noise, per-pair
substreams, ...) from sharing a stream.
"""
import hashlib

import numpy as np
from scipy.special import ndtri

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def derive_key(seed, *labels):
    """Hash a seed and any number of labels into a 64-bit stream key."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(seed)).encode())
    for label in labels:
        h.update(b"\x1f")
        h.update(str(label).encode())
    return int.from_bytes(h.digest(), "little")


def derive_seed(seed, *labels):
    """Like :func:`derive_key` but folded to a non-negative 63-bit int."""
    return derive_key(seed, *labels) & ((1 << 63) - 1)


def _mix64(x):
    # splitmix64 finalizer
    x = (x ^ (x >> np.uint64(30))) * _M1
    x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


def random_bits(key, counters):
    """64 random bits for each counter value under ``key``."""
    counters = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        k = _mix64(np.uint64(key & _MASK64))
        state = k + (counters + np.uint64(1)) * _GAMMA
        return _mix64(state)


def uniform(key, counters):
    """Uniform doubles in the open interval (0, 1)."""
    bits = random_bits(key, counters) >> np.uint64(11)
    return (bits.astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)


def normal(key, counters):
    """Standard normal draws by inverse-CDF of :func:`uniform`."""
    return ndtri(uniform(key, counters))


def channel_normals(key, sample_index, channels):
    """Normal draws keyed by (key, sample index, channel index).

    Returns an array of shape ``(len(sample_index), len(channels))``.  The
    value for a given (sample, channel) does not depend on which other
    channels or samples are requested alongside it.
    """
    sample_index = np.asarray(sample_index, dtype=np.uint64)
    out = np.empty((sample_index.size, len(channels)))
    for col, ch in enumerate(channels):
        out[:, col] = normal(derive_key(key, "channel", int(ch)), sample_index)
    return out
