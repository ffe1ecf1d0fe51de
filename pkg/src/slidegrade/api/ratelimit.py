"""Token-bucket rate limiting keyed by client address (and login scope)."""

from __future__ import annotations

import threading
import time


class TokenBucket:
    def __init__(self, capacity: float, refill_per_s: float):
        self.capacity = capacity
        self.refill_per_s = refill_per_s
        self.tokens = capacity
        self.updated = time.monotonic()

    def take(self, now: float) -> bool:
        elapsed = max(0.0, now - self.updated)
        self.tokens = min(self.capacity, self.tokens + elapsed * self.refill_per_s)
        self.updated = now
        if self.tokens >= 1.0:
            self.tokens -= 1.0
            return True
        return False


class RateLimiter:
    """Shared-state limiter; one bucket per (scope, key)."""

    def __init__(self):
        self._lock = threading.Lock()
        self._buckets: dict[tuple[str, str], TokenBucket] = {}

    def allow(self, scope: str, key: str, per_minute: int) -> bool:
        if per_minute <= 0:
            return True
        now = time.monotonic()
        with self._lock:
            bucket = self._buckets.get((scope, key))
            if bucket is None:
                bucket = TokenBucket(capacity=float(per_minute), refill_per_s=per_minute / 60.0)
                self._buckets[(scope, key)] = bucket
            return bucket.take(now)
