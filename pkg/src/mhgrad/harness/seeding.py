"""Counter-based seed derivation so results do not depend on execution order."""

import numpy as np

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def derive_stream_seed(master: int, replicate: int, stream: int) -> int:
    """64-bit seed for ``(master, replicate, stream)``; pure and order-free."""
    h = splitmix64(master & _MASK)
    h = splitmix64(h ^ (replicate & _MASK))
    return splitmix64(h ^ splitmix64(stream & _MASK))


def make_rng(master: int, replicate: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_stream_seed(master, replicate, stream)))
