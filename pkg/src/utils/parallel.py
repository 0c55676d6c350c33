"""Order-preserving parallel map for Monte-Carlo repetitions"""

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(threads: Optional[int] = None) -> int:
    if threads is None:
        from src.config.settings import settings
        threads = settings.THREADS
    if threads <= 0:
        return os.cpu_count() or 1
    return threads


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None) -> List[R]:
    """Apply fn to every item; results come back in input order.

    Repetitions are CPU-bound Python, so more than one worker means a process
    pool. `fn` and the items must be picklable: module-level functions, or
    functools.partial over them.
    """
    items = list(items)
    workers = min(resolve_threads(threads), max(len(items), 1))
    if workers == 1:
        return [fn(item) for item in items]

    chunksize = max(1, len(items) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, items, chunksize=chunksize))
