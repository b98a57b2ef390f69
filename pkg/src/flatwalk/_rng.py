"""Seeded substreams.

Samples are grouped into fixed-size blocks and every block draws from its own
generator keyed by ``(seed, stream tag, block index)``. Results therefore do
not depend on how blocks are spread over workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

BLOCK_SIZE = 4096

T = TypeVar("T")

# stream tags keep different consumers of one seed apart
STREAM_BIASED = 1
STREAM_UNBIASED = 2
STREAM_HAAR = 3
STREAM_HEA = 4


def block_rng(seed: int, stream: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(stream, block))
    return np.random.Generator(np.random.PCG64(ss))


def block_sizes(total: int, block_size: int = BLOCK_SIZE) -> list[int]:
    nblocks = math.ceil(total / block_size)
    return [min(block_size, total - b * block_size) for b in range(nblocks)]


def map_blocks(fn: Callable[[int, int], T], total: int, workers: int = 1, block_size: int = BLOCK_SIZE) -> list[T]:
    """Call ``fn(block_index, block_len)`` for every block, results in block order."""
    sizes = block_sizes(total, block_size)
    if workers <= 1 or len(sizes) <= 1:
        return [fn(b, s) for b, s in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(len(sizes)), sizes))


class RunningMoments:
    """Mean and sum of squared deviations, merged block by block (Chan et al.)."""

    def __init__(self) -> None:
        self.count = 0
        self.mean = 0.0
        self.m2 = 0.0

    def add_block(self, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=float)
        nb = values.size
        if nb == 0:
            return
        mb = math.fsum(values) / nb
        m2b = math.fsum((values - mb) ** 2)
        self.merge(nb, mb, m2b)

    def merge(self, nb: int, mb: float, m2b: float) -> None:
        na = self.count
        n = na + nb
        delta = mb - self.mean
        self.mean += delta * nb / n
        self.m2 += m2b + delta * delta * na * nb / n
        self.count = n

    @property
    def std_error(self) -> float:
        if self.count < 2:
            return 0.0
        return math.sqrt(self.m2 / (self.count - 1) / self.count)


def block_stats(values: np.ndarray) -> tuple[int, float, float]:
    values = np.asarray(values, dtype=float)
    mb = math.fsum(values) / values.size
    return values.size, mb, math.fsum((values - mb) ** 2)


def combine(stats: list[tuple[int, float, float]]) -> RunningMoments:
    acc = RunningMoments()
    for nb, mb, m2b in stats:
        acc.merge(nb, mb, m2b)
    return acc
