#!/usr/bin/env python3
"""
Unit tests for EvaluationCache
LRU eviction, metrics and point keys
"""

import sys
import threading
import unittest
from pathlib import Path

import numpy as np

# Add repository root to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from atensor.cache import CacheMetrics, EvaluationCache, get_cache


class TestCacheMetrics(unittest.TestCase):
    """Hit rate bookkeeping"""

    def test_hit_rate(self):
        """Hit rate is hits over lookups, zero before any lookup"""
        metrics = CacheMetrics()
        self.assertEqual(metrics.hit_rate(), 0.0)
        metrics.hits, metrics.misses = 3, 1
        self.assertAlmostEqual(metrics.hit_rate(), 0.75)
        metrics.reset()
        self.assertEqual((metrics.hits, metrics.misses, metrics.evictions, metrics.sets), (0, 0, 0, 0))


class TestEvaluationCache(unittest.TestCase):
    """LRU cache behaviour"""

    def setUp(self):
        self.cache = EvaluationCache(max_entries=3)

    def test_get_and_set(self):
        """Stored values come back; misses return the default"""
        self.cache.set('a', 1)
        self.assertEqual(self.cache.get('a'), 1)
        self.assertIsNone(self.cache.get('b'))
        self.assertEqual(self.cache.get('b', 'none'), 'none')
        self.assertEqual(self.cache.metrics.hits, 1)
        self.assertEqual(self.cache.metrics.misses, 2)

    def test_overwrite_counts_one_set(self):
        """Replacing a value is not a new entry"""
        self.cache.set('a', 1)
        self.cache.set('a', 2)
        self.assertEqual(self.cache.get('a'), 2)
        self.assertEqual(self.cache.metrics.sets, 1)

    def test_lru_eviction(self):
        """The least recently used entry is evicted first"""
        for key in 'abc':
            self.cache.set(key, key.upper())
        self.cache.get('a')
        self.cache.set('d', 'D')
        self.assertIsNone(self.cache.get('b'))
        self.assertEqual(self.cache.get('a'), 'A')
        self.assertEqual(self.cache.get('d'), 'D')
        self.assertEqual(self.cache.metrics.evictions, 1)

    def test_get_or_set(self):
        """The factory runs only on a miss"""
        calls = []

        def compute():
            calls.append(1)
            return np.eye(2)

        first = self.cache.get_or_set('g', compute)
        second = self.cache.get_or_set('g', compute)
        self.assertIs(first, second)
        self.assertEqual(len(calls), 1)

    def test_clear_and_stats(self):
        """clear returns the number of dropped entries"""
        self.cache.set('a', 1)
        self.cache.set('b', 2)
        self.cache.get('a')
        stats = self.cache.get_stats()
        self.assertEqual(stats['entries'], 2)
        self.assertEqual(stats['max_entries'], 3)
        self.assertEqual(stats['sets'], 2)
        self.assertGreaterEqual(stats['uptime_seconds'], 0.0)
        self.assertEqual(self.cache.clear(), 2)
        self.assertEqual(self.cache.get_stats()['entries'], 0)

    def test_point_key(self):
        """Keys depend on the owner, the exact point and the extra parts"""
        owner_a, owner_b = object(), object()
        x = np.array([0.5, 1.0])
        self.assertEqual(EvaluationCache.point_key(owner_a, x, 2), EvaluationCache.point_key(owner_a, [0.5, 1.0], 2))
        self.assertNotEqual(EvaluationCache.point_key(owner_a, x, 2), EvaluationCache.point_key(owner_b, x, 2))
        self.assertNotEqual(EvaluationCache.point_key(owner_a, x, 2), EvaluationCache.point_key(owner_a, x, 1))
        self.assertNotEqual(
            EvaluationCache.point_key(owner_a, x), EvaluationCache.point_key(owner_a, x + 1e-15)
        )

    def test_concurrent_access(self):
        """Concurrent writers never exceed the entry bound"""
        cache = EvaluationCache(max_entries=50)

        def writer(offset):
            for i in range(200):
                cache.set((offset, i), i)
                cache.get((offset, i // 2))

        threads = [threading.Thread(target=writer, args=(k,)) for k in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        stats = cache.get_stats()
        self.assertLessEqual(stats['entries'], 50)
        self.assertEqual(stats['sets'], 800)
        self.assertEqual(stats['evictions'], 750)


class TestGlobalCache(unittest.TestCase):
    """Process-wide cache"""

    def test_singleton(self):
        """get_cache returns one instance"""
        self.assertIs(get_cache(), get_cache())


if __name__ == '__main__':
    unittest.main()
