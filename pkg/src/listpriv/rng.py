"""Seed fan-out.

A master seed plus a tuple of integer keys names an independent stream, so
trial ``i`` of an experiment draws the same numbers no matter which other
trials ran first or in which process.
"""
from __future__ import annotations

import hashlib

import numpy as np


def stream(seed: int, *keys: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def hash_unit(seed: int, *parts) -> int:
    """A 64-bit integer determined by ``seed`` and ``parts`` (stable across runs)."""
    h = hashlib.blake2b(repr((int(seed),) + tuple(parts)).encode(), digest_size=8)
    return int.from_bytes(h.digest(), "big")
