"""Seed derivation.

Every random stream is a numpy ``Generator`` over PCG64 seeded from a
``SeedSequence``. Stage streams use entropy ``[seed, h]`` where ``h`` is the
first four bytes (big-endian) of the SHA-256 digest of the stage name. Per-item
streams (for example one per tree) append the item index as a spawn key.
"""

from __future__ import annotations

import hashlib

import numpy as np


def stage_key(stage: str) -> int:
    return int.from_bytes(hashlib.sha256(stage.encode("utf-8")).digest()[:4], "big")


def stage_rng(seed: int, stage: str) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), stage_key(stage)])))


def indexed_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(index),))))


def seeded_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def stage_seed(seed: int, stage: str) -> int:
    """A 64-bit integer seed for a stage, for APIs that take plain integers."""
    hi, lo = np.random.SeedSequence([int(seed), stage_key(stage)]).generate_state(2, np.uint32)
    return (int(hi) << 32) | int(lo)
