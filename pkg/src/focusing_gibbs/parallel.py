"""Deterministic chunked map over sample indices."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

DEFAULT_CHUNK = 2048


def chunk_bounds(total: int, chunk: int = DEFAULT_CHUNK) -> list[tuple[int, int]]:
    return [(a, min(a + chunk, total)) for a in range(0, total, chunk)]


def map_chunks(fn: Callable[[int, int], T], total: int, workers: int = 1, chunk: int = DEFAULT_CHUNK) -> list[T]:
    """Apply ``fn(start, stop)`` over consecutive index ranges.

    Results come back in index order whatever the worker count, so any
    reduction over them is independent of scheduling.
    """
    bounds = chunk_bounds(total, chunk)
    if workers <= 1 or len(bounds) <= 1:
        return [fn(a, b) for a, b in bounds]
    with ProcessPoolExecutor(max_workers=min(workers, len(bounds))) as pool:
        futures = [pool.submit(fn, a, b) for a, b in bounds]
        return [f.result() for f in futures]


def concat(parts: Sequence, axis: int = 0):
    return np.concatenate(parts, axis=axis) if parts else np.zeros(0)
