"""Stable 64-bit hashing and seed derivation.

Python's builtin ``hash`` is randomized per process, so every hashed
quantity in this package (feature ids, derived RNG seeds) goes through
the deterministic mixers below.  All values are reproducible across
processes, platforms and runs.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

# splitmix64 constants; the numba/numpy kernels replicate these exactly.
SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
SPLITMIX_M1 = 0xBF58476D1CE4E5B9
SPLITMIX_M2 = 0x94D049BB133111EB


def splitmix64(x: int) -> int:
    """One splitmix64 scramble step on a 64-bit integer."""
    x = (x + SPLITMIX_GAMMA) & MASK64
    x = ((x ^ (x >> 30)) * SPLITMIX_M1) & MASK64
    x = ((x ^ (x >> 27)) * SPLITMIX_M2) & MASK64
    return (x ^ (x >> 31)) & MASK64


def hash_string(s: str) -> int:
    """FNV-1a over UTF-8 bytes, finalized with a splitmix step."""
    h = _FNV_OFFSET
    for b in s.encode("utf-8"):
        h = ((h ^ b) * _FNV_PRIME) & MASK64
    return splitmix64(h)


def mix(*parts: int) -> int:
    """Fold integer parts into a single 64-bit value, order-sensitive."""
    h = 0x8E3C5B1D0A7F9E21
    for p in parts:
        h = splitmix64((h ^ (p & MASK64)) & MASK64)
    return h


def derive_seed(master: int, *tags: int | str) -> int:
    """Derive a child RNG seed from a master seed and a tag chain.

    Tags may be ints (round index, committee member, repeat number) or
    strings (purpose labels).  The result is a positive 63-bit integer
    suitable for ``numpy.random.default_rng``.
    """
    parts = [master & MASK64]
    for t in tags:
        parts.append(hash_string(t) if isinstance(t, str) else t & MASK64)
    return mix(*parts) & ((1 << 63) - 1)
