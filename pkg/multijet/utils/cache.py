"""In-memory memoisation of immutable numerical artefacts using cachetools."""

from collections.abc import Callable, Hashable
from functools import wraps
from threading import RLock
from typing import Any

from cachetools import LRUCache


class ArtifactCache:
    """Thread-safe LRU cache for pure, immutable results (rules, bases, operators)."""

    def __init__(self, maxsize: int = 512):
        """
        Initialize the cache.

        Args:
            maxsize: Maximum number of cached artefacts
        """
        self._store: LRUCache = LRUCache(maxsize=maxsize)
        self._lock = RLock()
        self.hits = 0
        self.misses = 0

    def get_or_compute(self, key: Hashable, compute: Callable[[], Any]) -> Any:
        """Return the cached value for key, computing and storing it on a miss."""
        with self._lock:
            if key in self._store:
                self.hits += 1
                return self._store[key]
        value = compute()
        with self._lock:
            self.misses += 1
            self._store[key] = value
        return value

    def clear(self) -> None:
        """Clear all cache entries."""
        with self._lock:
            self._store.clear()
            self.hits = 0
            self.misses = 0

    def __len__(self) -> int:
        with self._lock:
            return len(self._store)


def memoized(cache: ArtifactCache) -> Callable:
    """Decorator memoising a function of hashable positional arguments."""

    def decorator(func):
        @wraps(func)
        def wrapper(*args):
            return cache.get_or_compute((func.__qualname__, *args), lambda: func(*args))

        wrapper.cache = cache
        return wrapper

    return decorator


shared_cache = ArtifactCache()
