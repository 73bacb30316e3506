"""Seeded random streams.

All randomness goes through numpy's PCG64 bit generator. A stream is
identified by a base seed plus a tuple of keys (strings or ints); string
keys are folded to 64 bits with BLAKE2b so that stream identity never
depends on Python's randomized ``hash``. Distinct keys give statistically
independent streams via ``SeedSequence`` spawn keys, which is what makes
per-document and per-K work order-independent.
"""

from __future__ import annotations

import hashlib

import numpy as np

GENERATOR_NAME = "PCG64"
MASK64 = (1 << 64) - 1


def key_to_int(key: str | int) -> int:
    if isinstance(key, int):
        return key & MASK64
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def seed_sequence(seed: int, *keys: str | int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed & MASK64, spawn_key=tuple(key_to_int(k) for k in keys))


def stream(seed: int, *keys: str | int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *keys)))
