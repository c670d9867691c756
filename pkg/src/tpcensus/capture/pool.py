"""Concurrent capture of a seed corpus."""

from __future__ import annotations

import threading
import time
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor, as_completed
from urllib.parse import urlsplit

from ..seeds import SeedUrl
from .driver import DEFAULT_TIMEOUT, DEFAULT_USER_AGENT, CaptureDriver, load_page
from .models import PageLoadResult

__all__ = ["PolitenessGate", "capture_corpus"]


class PolitenessGate:
    """Spaces out page starts against the same host by at least ``delay`` seconds."""

    def __init__(self, delay: float = 0.0, clock=time.monotonic, sleep=time.sleep):
        self.delay = delay
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._next_slot: dict[str, float] = {}

    def wait(self, host: str) -> None:
        if self.delay <= 0:
            return
        with self._lock:
            now = self._clock()
            slot = max(now, self._next_slot.get(host, now))
            self._next_slot[host] = slot + self.delay
        pause = slot - now
        if pause > 0:
            self._sleep(pause)


def capture_corpus(
    seeds: Sequence[SeedUrl],
    driver: CaptureDriver,
    *,
    pool_size: int = 1,
    timeout: float = DEFAULT_TIMEOUT,
    user_agent: str = DEFAULT_USER_AGENT,
    dnt: bool = False,
    politeness_delay: float = 0.0,
    on_result: Callable[[PageLoadResult], None] | None = None,
) -> list[PageLoadResult]:
    """Capture every seed with up to ``pool_size`` concurrent sessions.

    ``on_result`` runs on the calling thread, one result at a time, so a
    store can be fed without locking. The returned list follows seed order.
    """
    if pool_size < 1:
        raise ValueError("pool_size must be >= 1")
    gate = PolitenessGate(politeness_delay)

    def work(seed: SeedUrl) -> PageLoadResult:
        gate.wait(urlsplit(seed.normalized or seed.raw).hostname or "")
        return load_page(seed, driver, timeout, user_agent=user_agent, dnt=dnt)

    results: list[PageLoadResult | None] = [None] * len(seeds)
    with ThreadPoolExecutor(max_workers=pool_size) as pool:
        futures = {pool.submit(work, seed): i for i, seed in enumerate(seeds)}
        for fut in as_completed(futures):
            result = fut.result()
            results[futures[fut]] = result
            if on_result is not None:
                on_result(result)
    return results
