"""Seeded random streams.

Every Monte Carlo routine derives its randomness from ``(seed, stream-id)``
pairs through :class:`numpy.random.SeedSequence`, so a computation split
into chunks consumes exactly the same draws whether the chunks run one
after another or on a thread pool.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar, Union

import numpy as np

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator]

T = TypeVar("T")

DEFAULT_CHUNK = 1 << 16
THREADS_ENV = "FISHERBOUND_THREADS"


def as_seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, np.random.Generator):
        # consumes one draw from the caller's generator, deterministically
        return np.random.SeedSequence(int(seed.integers(0, 2**63)))
    if isinstance(seed, (int, np.integer)) and not isinstance(seed, bool):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        return np.random.SeedSequence(int(seed))
    raise TypeError(f"cannot derive a seed from {type(seed).__name__}")


def substream(seed: SeedLike, *key: int) -> np.random.Generator:
    """Generator for the sub-stream ``key`` of ``seed``."""
    ss = as_seed_sequence(seed)
    child = np.random.SeedSequence(ss.entropy, spawn_key=tuple(ss.spawn_key) + tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(child))


def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return substream(seed)


def chunk_sizes(total: int, chunk: int = DEFAULT_CHUNK) -> list[int]:
    if total < 0:
        raise ValueError("total must be non-negative")
    full, rest = divmod(total, chunk)
    return [chunk] * full + ([rest] if rest else [])


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def map_chunks(
    fn: Callable[[np.random.Generator, int], T],
    seed: SeedLike,
    total: int,
    chunk: int = DEFAULT_CHUNK,
    stream: int = 0,
) -> list[T]:
    """Apply ``fn(rng, size)`` to each chunk, chunk ``i`` drawing from
    sub-stream ``(stream, i)``. Results come back in chunk order."""
    ss = as_seed_sequence(seed)
    sizes = chunk_sizes(total, chunk)
    jobs = [(substream(ss, stream, i), size) for i, size in enumerate(sizes)]
    workers = thread_count()
    if workers == 1 or len(jobs) < 2:
        return [fn(rng, size) for rng, size in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def combine_moments(parts: Sequence[tuple[int, float, float]]) -> tuple[float, float, int]:
    """Merge per-chunk ``(count, sum, sum_sq_dev)`` into ``(mean, std_error, count)``.

    ``sum_sq_dev`` is the sum of squared deviations from the chunk mean;
    chunks are merged with Chan's pairwise formula in a fixed order.
    """
    n = 0
    mean = 0.0
    m2 = 0.0
    for cnt, s, dev in parts:
        if cnt == 0:
            continue
        cmean = s / cnt
        delta = cmean - mean
        tot = n + cnt
        mean += delta * cnt / tot
        m2 += dev + delta * delta * n * cnt / tot
        n = tot
    if n == 0:
        return float("nan"), float("nan"), 0
    var = m2 / (n - 1) if n > 1 else 0.0
    return mean, float(np.sqrt(var / n)), n


def chunk_moments(values: np.ndarray) -> tuple[int, float, float]:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0, 0.0, 0.0
    s = float(values.sum())
    dev = float(np.sum((values - s / values.size) ** 2))
    return values.size, s, dev
