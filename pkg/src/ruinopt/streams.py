"""Deterministic random streams and block-parallel evaluation.

A stream is identified by ``(master_seed, purpose, iteration, block)``. Work
over ``n`` samples is cut into fixed-size blocks, each with its own stream, so
the generated data never depends on how many workers process the blocks.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar

import numpy as np

BLOCK_SIZE = 4096

T = TypeVar("T")


def purpose_code(purpose: str) -> int:
    return zlib.crc32(purpose.encode("utf-8"))


@dataclass(frozen=True)
class RandomStream:
    seed: int
    purpose: str = "default"
    iteration: int = 0
    block: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(
            entropy=self.seed,
            spawn_key=(purpose_code(self.purpose), self.iteration, self.block),
        )
        return np.random.Generator(np.random.PCG64(ss))


def block_plan(n: int, block_size: int = BLOCK_SIZE) -> list[tuple[int, int]]:
    """Split ``n`` samples into ``(block_index, count)`` pairs."""
    if n < 1:
        raise ValueError(f"need at least one sample, got n={n}")
    plan = []
    start = 0
    block = 0
    while start < n:
        count = min(block_size, n - start)
        plan.append((block, count))
        start += count
        block += 1
    return plan


def map_blocks(
    fn: Callable[[RandomStream, int], T],
    seed: int,
    purpose: str,
    iteration: int,
    n: int,
    workers: int = 1,
    block_size: int = BLOCK_SIZE,
) -> list[T]:
    """Apply ``fn(stream, count)`` to every block; results come back in block order."""
    tasks = [
        (RandomStream(seed, purpose, iteration, block), count)
        for block, count in block_plan(n, block_size)
    ]
    if workers <= 1 or len(tasks) == 1:
        return [fn(stream, count) for stream, count in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda task: fn(*task), tasks))


def derive_seeds(master_seed: int, count: int) -> list[int]:
    """Independent child seeds for repeated runs."""
    children = np.random.SeedSequence(master_seed).spawn(count)
    return [int(child.generate_state(1, dtype=np.uint32)[0]) for child in children]


def concat(arrays: Sequence[np.ndarray]) -> np.ndarray:
    return arrays[0] if len(arrays) == 1 else np.concatenate(arrays)
