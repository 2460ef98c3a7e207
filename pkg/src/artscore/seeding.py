"""Explicit seed derivation. Nothing in the package touches global RNG state."""

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _key(part):
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    return int(part) & 0xFFFFFFFF


def derive_seed(seed, *keys):
    """Deterministically derive a 64-bit child seed from ``seed`` and a key path.

    Keys may be ints or strings; ``derive_seed(s, "photo", 3)`` is stable
    across runs and platforms.
    """
    ss = np.random.SeedSequence(int(seed) & _MASK64, spawn_key=tuple(_key(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])


def rng(seed, *keys):
    if keys:
        seed = derive_seed(seed, *keys)
    return np.random.default_rng(int(seed) & _MASK64)
