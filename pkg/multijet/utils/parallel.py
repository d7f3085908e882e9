"""
Deterministic chunked worker pool.

Work of size ``total`` is cut into fixed-size chunks. Chunk boundaries depend
only on ``chunk_size``, never on the thread count, and results come back in
chunk order, so reductions give the same bits for any number of workers.
"""

import math
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

from ..context import get_threads

T = TypeVar("T")


def chunk_bounds(total: int, chunk_size: int) -> list[tuple[int, int, int]]:
    """Return (chunk_index, start, stop) triples covering range(total)."""
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be positive, got {chunk_size}")
    return [
        (index, start, min(start + chunk_size, total))
        for index, start in enumerate(range(0, total, chunk_size))
    ]


def map_chunks(
    fn: Callable[[int, int, int], T],
    total: int,
    chunk_size: int,
    threads: int | None = None,
) -> list[T]:
    """
    Apply fn(chunk_index, start, stop) to every chunk.

    Args:
        fn: Pure function of the chunk coordinates
        total: Number of work items
        chunk_size: Items per chunk
        threads: Worker count (falls back to the shared context)

    Returns:
        Per-chunk results in chunk order
    """
    bounds = chunk_bounds(total, chunk_size)
    workers = threads or get_threads()
    if workers <= 1 or len(bounds) <= 1:
        return [fn(*b) for b in bounds]
    with ThreadPoolExecutor(max_workers=min(workers, len(bounds))) as pool:
        return list(pool.map(lambda b: fn(*b), bounds))


def fsum_columns(parts: Iterable[Sequence[float]]) -> list[float]:
    """Compensated column-wise sum of per-chunk partial sums."""
    columns = list(zip(*parts, strict=True))
    return [math.fsum(column) for column in columns]
