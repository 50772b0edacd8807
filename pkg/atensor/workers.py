#!/usr/bin/env python3
"""
Worker pool for per-point and per-trajectory sweeps
"""

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

import psutil

T = TypeVar("T")
R = TypeVar("R")


def worker_count() -> int:
    """Number of workers: ATENSOR_THREADS caps the physical core count"""
    cores = psutil.cpu_count(logical=False) or psutil.cpu_count() or 1
    cap = os.getenv("ATENSOR_THREADS")
    if cap:
        try:
            return max(1, min(cores, int(cap)))
        except ValueError:
            return 1
    return cores


def parallel_map(fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
    """Order-preserving map; runs inline when a single worker is allowed"""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
