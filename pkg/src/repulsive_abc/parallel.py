"""Order-preserving parallel map over independent seeded tasks."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

__all__ = ["pmap", "task_rngs"]


def task_rngs(rng: np.random.Generator, count: int) -> list[np.random.Generator]:
    """Independent child generators, one per task, fixed by ``rng`` alone."""
    return rng.spawn(count) if count else []


def pmap(fn: Callable[[T], R], items: Iterable[T], n_jobs: int = 1) -> list[R]:
    """``[fn(x) for x in items]`` run on up to ``n_jobs`` threads.

    Results come back in input order, so with per-task generators the output
    does not depend on ``n_jobs``. The numba and BLAS kernels release the GIL.
    """
    items = list(items)
    if n_jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n_jobs) as ex:
        return list(ex.map(fn, items))
