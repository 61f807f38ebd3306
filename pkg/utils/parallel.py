"""Parallel Execution Utility Module.

This module provides an order-preserving process-pool map and counter-based
random streams, so that results depend only on inputs and seeds and never
on the number of workers.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, Sequence, TypeVar

import numpy as np

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(func: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """Apply func to every item, returning results in input order.

    Args:
        func: A picklable (module-level) callable.
        items: Work items.
        workers: Maximum number of worker processes; 1 or less runs inline.

    Returns:
        List[R]: One result per item, in the order of items.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    logger.debug(f"Dispatching {len(items)} tasks to {workers} workers")
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(func, items))


def chunk_ranges(total: int, chunk_size: int) -> List[slice]:
    """Split range(total) into consecutive slices of at most chunk_size."""
    chunk_size = max(1, int(chunk_size))
    return [slice(start, min(start + chunk_size, total)) for start in range(0, total, chunk_size)]


def stream(seed: int, index: int) -> np.random.Generator:
    """Philox generator for one (seed, index) pair.

    Equivalent to the index-th child of SeedSequence(seed).spawn(), so every
    stream is fixed by its index alone.
    """
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(sequence))


def streams(seed: int, indices: Sequence[int]) -> List[np.random.Generator]:
    return [stream(seed, index) for index in indices]
