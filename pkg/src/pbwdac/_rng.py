"""Seed derivation and chunk-parallel Gaussian streams.

Every random stream is generated in fixed-size chunks whose generator is
seeded from ``(seed, stream, chunk_index)``.  A chunked computation therefore
produces the same numbers regardless of how many workers evaluate it.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK_SIZE = 1 << 16


def derive_seed(global_seed: int, name: str) -> int:
    """64-bit seed for subsystem ``name``.

    Keyed by the CRC32 of the name, so adding a subsystem never changes the
    seed of another one.
    """
    ss = np.random.SeedSequence(int(global_seed), spawn_key=(zlib.crc32(name.encode()),))
    lo, hi = ss.generate_state(2)
    return int(lo) | (int(hi) << 32)


def _chunk_generator(seed: int, stream: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(chunk)))))


def standard_normal(seed: int, n: int, stream: int = 0, jobs: int = 1) -> np.ndarray:
    """``n`` standard normal draws, identical for every value of ``jobs``."""
    out = np.empty(n)
    starts = range(0, n, CHUNK_SIZE)

    def fill(start):
        stop = min(start + CHUNK_SIZE, n)
        out[start:stop] = _chunk_generator(seed, stream, start // CHUNK_SIZE).standard_normal(stop - start)

    if jobs > 1 and n > CHUNK_SIZE:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(fill, starts))
    else:
        for s in starts:
            fill(s)
    return out
