# Per-trial wall-time statistics for sweep progress reporting

import collections
import threading
import time
from collections.abc import Iterator
from contextlib import contextmanager


class TrialTimer:
    """Collects trial durations and computes running statistics.

    Thread-safe: worker threads call measure()/record() while the sweep
    thread reads count/avg/p95.
    """

    def __init__(self, maxlen: int = 100000):
        self._lock = threading.Lock()
        self._samples: collections.deque[float] = collections.deque(maxlen=maxlen)
        self._count = 0

    def record(self, durationS: float) -> None:
        """Record one finished trial."""
        with self._lock:
            self._samples.append(durationS)
            self._count += 1

    @contextmanager
    def measure(self) -> Iterator[None]:
        """Time the enclosed block and record it as one trial."""
        start = time.perf_counter()
        try:
            yield
        finally:
            self.record(time.perf_counter() - start)

    @property
    def count(self) -> int:
        """Trials recorded since construction (not cleared by reset)."""
        with self._lock:
            return self._count

    @property
    def avg(self) -> float:
        """Mean trial duration in seconds; 0 before any trial."""
        with self._lock:
            samples = list(self._samples)
        if not samples:
            return 0.0
        return sum(samples) / len(samples)

    @property
    def p95(self) -> float:
        """95th-percentile trial duration in seconds; 0 before any trial."""
        with self._lock:
            samples = sorted(self._samples)
        if not samples:
            return 0.0
        idx = min(int(len(samples) * 0.95), len(samples) - 1)
        return samples[idx]

    def reset(self) -> None:
        """Clear the duration buffer."""
        with self._lock:
            self._samples.clear()
