"""
Block Cache Service

Keeps simulated path blocks in memory so that a verification run that walks
the same ensemble for several tests simulates each block once.

- Size-bounded LRU storage (budget in bytes, not entries)
- Thread-safe access from the worker pool
- Deterministic keys from (config hash, seed, block range)
"""

import hashlib
import logging
from dataclasses import dataclass
from threading import Lock
from typing import Any, Callable, Dict, Optional

from cachetools import LRUCache

from ..config import CACHE_MAX_MB

logger = logging.getLogger(__name__)


@dataclass
class CacheEntry:
    """Cache entry with metadata"""
    data: Any
    nbytes: int


class CacheService:
    """
    Byte-budgeted cache for simulated blocks.

    Two workers asking for the same missing block may both simulate it;
    the results are bit-identical so whichever lands last wins.
    """

    def __init__(self, max_mb: int = CACHE_MAX_MB):
        """
        Initialize cache service.

        Args:
            max_mb: Memory budget in megabytes (0 disables caching)
        """
        self.max_bytes = max(int(max_mb), 0) * 1024 * 1024
        self.cache = LRUCache(maxsize=max(self.max_bytes, 1), getsizeof=lambda entry: entry.nbytes)
        self._lock = Lock()
        self.hits = 0
        self.misses = 0

        logger.info(f"Block cache initialized with budget={max_mb} MB")

    def get_or_compute(self, cache_type: str, key: str, compute_func: Callable[[], Any]) -> Any:
        """
        Get a block from cache or compute it.

        Args:
            cache_type: Namespace (e.g. "gw_block")
            key: Identifying key within the namespace
            compute_func: Produces the value; must expose .nbytes

        Returns:
            Cached or freshly computed value
        """
        cache_key = self._build_cache_key(cache_type, key)

        with self._lock:
            entry = self.cache.get(cache_key)
            if entry is not None:
                self.hits += 1
                logger.debug(f"Cache HIT: {cache_key}")
                return entry.data
            self.misses += 1

        logger.debug(f"Cache MISS: {cache_key}")
        data = compute_func()
        self._set_cache_entry(cache_key, data)
        return data

    def _set_cache_entry(self, cache_key: str, data: Any):
        nbytes = int(getattr(data, "nbytes", 0))
        if self.max_bytes == 0 or nbytes > self.max_bytes:
            logger.debug(f"Cache SKIP: {cache_key} ({nbytes} bytes over budget)")
            return
        with self._lock:
            self.cache[cache_key] = CacheEntry(data=data, nbytes=nbytes)
        logger.debug(f"Cache SET: {cache_key} ({nbytes} bytes)")

    def _build_cache_key(self, cache_type: str, key: str) -> str:
        """Build cache key with type prefix"""
        key_hash = hashlib.md5(f"{cache_type}:{key}".encode()).hexdigest()[:12]
        return f"{cache_type}:{key_hash}:{key}"

    def invalidate_pattern(self, pattern: str):
        """Invalidate cache entries matching pattern"""
        with self._lock:
            keys_to_delete = [key for key in self.cache.keys() if pattern in key]
            for key in keys_to_delete:
                del self.cache[key]
        logger.debug(f"Cache pattern invalidated: {pattern} ({len(keys_to_delete)} entries)")

    def get_stats(self) -> Dict[str, Optional[float]]:
        with self._lock:
            lookups = self.hits + self.misses
            return {
                "total_entries": len(self.cache),
                "current_bytes": self.cache.currsize,
                "max_bytes": self.max_bytes,
                "hit_rate": self.hits / lookups if lookups else None,
            }


# Global cache service instance
cache_service = CacheService()
