"""Deterministic RNG substreams derived from a single master seed.

Every stochastic step in the engine draws from its own substream, keyed by
where in the pipeline it happens (e.g. ``(year, "capture")`` or
``(year, individual)``). Substreams are independent PCG64 generators, so
the execution order of years or individuals cannot change any result.
"""
from __future__ import annotations

import zlib

import numpy as np

__all__ = ["substream"]


def _key_to_int(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFF
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    raise TypeError(f"substream key parts must be int or str, got {type(part)!r}")


def substream(master_seed: int, *path) -> np.random.Generator:
    """Return an independent generator for the given (master seed, path) pair.

    The same arguments always produce the same stream; distinct paths produce
    statistically independent streams (via SeedSequence entropy mixing).
    """
    entropy = [int(master_seed) & 0xFFFFFFFFFFFFFFFF] + [_key_to_int(p) for p in path]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
