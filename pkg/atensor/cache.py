#!/usr/bin/env python3
"""
Evaluation cache for pointwise geometry

Metric jets and curvature at a chart point are pure functions of
(patch, point, order), so entries never expire; the LRU bound keeps memory
flat over long sweeps.
"""

import threading
import time
from collections import OrderedDict
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, Hashable, Optional, Tuple

import numpy as np

from .logger import get_logger

logger = get_logger("atensor.cache")


@dataclass
class CacheMetrics:
    hits: int = 0
    misses: int = 0
    evictions: int = 0
    sets: int = 0
    started: float = field(default_factory=time.monotonic)

    def hit_rate(self) -> float:
        lookups = self.hits + self.misses
        return self.hits / lookups if lookups else 0.0

    def reset(self) -> None:
        self.__init__()


class EvaluationCache:
    """Thread-safe LRU map from point keys to computed values"""

    def __init__(self, max_entries: int = 4096):
        self.max_entries = max_entries
        self._entries: "OrderedDict[Hashable, Any]" = OrderedDict()
        self._lock = threading.RLock()
        self.metrics = CacheMetrics()

    @staticmethod
    def point_key(owner: Any, x: np.ndarray, *parts: Hashable) -> Tuple:
        """Key on the owner itself and the exact bytes of the point"""
        return (owner, np.asarray(x, dtype=float).tobytes(), *parts)

    def get(self, key: Hashable, default: Any = None) -> Any:
        with self._lock:
            try:
                value = self._entries[key]
            except KeyError:
                self.metrics.misses += 1
                return default
            self._entries.move_to_end(key)
            self.metrics.hits += 1
            return value

    def set(self, key: Hashable, value: Any) -> None:
        with self._lock:
            fresh = key not in self._entries
            self._entries[key] = value
            self._entries.move_to_end(key)
            self.metrics.sets += fresh
            overflow = len(self._entries) - self.max_entries
            for _ in range(max(overflow, 0)):
                self._entries.popitem(last=False)
            self.metrics.evictions += max(overflow, 0)

    def get_or_set(self, key: Hashable, func: Callable[[], Any]) -> Any:
        """Cached value, or func() stored under key"""
        value = self.get(key)
        if value is None:
            # computed outside the lock; concurrent misses may compute twice
            value = func()
            self.set(key, value)
        return value

    def clear(self) -> int:
        with self._lock:
            dropped = len(self._entries)
            self._entries.clear()
        return dropped

    def get_stats(self) -> Dict[str, Any]:
        with self._lock:
            stats = asdict(self.metrics)
            started = stats.pop("started")
            stats.update(
                entries=len(self._entries),
                max_entries=self.max_entries,
                hit_rate=self.metrics.hit_rate(),
                uptime_seconds=time.monotonic() - started,
            )
            return stats


_shared: Optional[EvaluationCache] = None
_shared_lock = threading.Lock()


def get_cache() -> EvaluationCache:
    """Process-wide cache used by every chart patch"""
    global _shared
    with _shared_lock:
        if _shared is None:
            _shared = EvaluationCache()
        return _shared


def log_cache_stats() -> None:
    logger.debug("Evaluation cache statistics", **get_cache().get_stats())
