"""Sample-parallel map with deterministic result order."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence


def worker_count(override: int | None = None) -> int:
    if override is not None:
        return max(1, int(override))
    env = os.environ.get("IDSLAB_THREADS")
    return max(1, int(env)) if env else 1


def parallel_map(fn: Callable, items: Iterable, threads: int | None = None) -> list:
    """Map over pure tasks; results come back in input order regardless of pool."""
    tasks: Sequence = list(items)
    count = worker_count(threads)
    if count <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=count) as pool:
        return list(pool.map(fn, tasks))
