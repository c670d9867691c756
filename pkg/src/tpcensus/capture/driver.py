"""Capture-driver contract and the page-load state machine built on it.

A driver hands out isolated sessions. A session navigates once and yields
browser-neutral network events; ``load_page`` turns that stream into a
PageLoadResult under a hard wall-clock timeout, keeping whatever was observed
if the timeout fires.
"""

from __future__ import annotations

import abc
import logging
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from ..seeds import SeedUrl
from .har import iter_har_files, load_har
from .models import CookieRecord, LoadStatus, PageLoadResult, RequestRecord

__all__ = [
    "DEFAULT_TIMEOUT",
    "DEFAULT_USER_AGENT",
    "CaptureDriver",
    "DriverSession",
    "DriverUnavailable",
    "FailedEvent",
    "LoadEvent",
    "PageInfo",
    "ReplayDriver",
    "RequestEvent",
    "ResponseEvent",
    "SessionExhausted",
    "load_page",
]

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 30.0
DEFAULT_GRACE = 5.0
DEFAULT_SETTLE = 0.5
DEFAULT_USER_AGENT = (
    "Mozilla/5.0 (Windows NT 10.0; Win64; x64) AppleWebKit/537.36 "
    "(KHTML, like Gecko) Chrome/124.0.0.0 Safari/537.36"
)
TIMEOUT_MODE = "hard-wall"


class DriverUnavailable(RuntimeError):
    pass


class SessionExhausted(Exception):
    """The session has no further events (replay finished)."""


@dataclass(frozen=True)
class RequestEvent:
    request_id: str
    url: str
    method: str = "GET"
    timestamp: datetime | None = None
    redirect_status: int | None = None  # status of the hop this request replaces


@dataclass(frozen=True)
class ResponseEvent:
    request_id: str
    status: int
    mime_type: str | None = None


@dataclass(frozen=True)
class FailedEvent:
    request_id: str
    error: str = ""


@dataclass(frozen=True)
class LoadEvent:
    pass


@dataclass(frozen=True)
class PageInfo:
    final_url: str = ""
    title: str = ""
    meta_description: str = ""
    captured_at: datetime | None = None


class DriverSession(abc.ABC):
    @abc.abstractmethod
    def navigate(self, url: str) -> None: ...

    @abc.abstractmethod
    def next_event(self, timeout: float):
        """Next event, or None if nothing arrived within ``timeout`` seconds."""

    @abc.abstractmethod
    def page_info(self, timeout: float) -> PageInfo: ...

    @abc.abstractmethod
    def cookies(self, timeout: float) -> list[CookieRecord]: ...

    def close(self) -> None:
        pass


class CaptureDriver(abc.ABC):
    @abc.abstractmethod
    def check(self) -> None:
        """Raise DriverUnavailable if the backend cannot be reached."""

    @abc.abstractmethod
    def open_session(self, *, user_agent: str = DEFAULT_USER_AGENT, dnt: bool = False) -> DriverSession: ...


class _Recorder:
    """Folds events into request records; redirect hops become separate records."""

    def __init__(self) -> None:
        self.records: list[dict] = []
        self.current: dict[str, int] = {}
        self.failed: dict[str, str] = {}
        self.document_id: str | None = None
        self.loaded = False

    def feed(self, event) -> None:
        if isinstance(event, RequestEvent):
            if self.document_id is None:
                self.document_id = event.request_id
            prev = self.current.get(event.request_id)
            if prev is not None and event.redirect_status is not None:
                self.records[prev].update(received=True, response_status=event.redirect_status)
            self.current[event.request_id] = len(self.records)
            self.records.append(
                dict(url=event.url, method=event.method, initiated_at=event.timestamp,
                     received=False, response_status=None, content_type=None)
            )
        elif isinstance(event, ResponseEvent):
            i = self.current.get(event.request_id)
            if i is not None:
                self.records[i].update(received=True, response_status=event.status,
                                       content_type=event.mime_type or None)
        elif isinstance(event, FailedEvent):
            self.failed[event.request_id] = event.error
            if self.document_id is None:
                self.document_id = event.request_id
        elif isinstance(event, LoadEvent):
            self.loaded = True

    def document_failed(self) -> str | None:
        if self.document_id is None:
            return "no document request observed"
        if self.document_id in self.failed:
            i = self.current.get(self.document_id)
            if i is None or not self.records[i]["received"]:
                return self.failed[self.document_id] or "document request failed"
        return None

    def request_records(self) -> tuple[RequestRecord, ...]:
        return tuple(RequestRecord(**r) for r in self.records)


def load_page(
    seed: SeedUrl,
    driver: CaptureDriver,
    timeout: float = DEFAULT_TIMEOUT,
    *,
    user_agent: str = DEFAULT_USER_AGENT,
    dnt: bool = False,
    settle: float = DEFAULT_SETTLE,
    grace: float = DEFAULT_GRACE,
) -> PageLoadResult:
    """Capture one page. Never raises for driver or network trouble.

    The load window is a hard wall of ``timeout`` seconds from navigation.
    After the load event the page is considered done once no event arrives
    for ``settle`` seconds. Reading title/cookies and tearing the session down
    share an extra ``grace`` budget.
    """
    if timeout <= 0:
        raise ValueError("timeout must be positive")
    url = seed.normalized or seed.raw
    start = time.monotonic()
    deadline = start + timeout
    recorder = _Recorder()
    timed_out = False
    diagnostic = ""

    try:
        session = driver.open_session(user_agent=user_agent, dnt=dnt)
    except Exception as exc:  # per-page isolation: any driver fault fails only this page
        return PageLoadResult(seed, "", load_status=LoadStatus.FAILED,
                              captured_at=datetime.now(timezone.utc),
                              diagnostic=f"driver unavailable: {exc}")

    info = PageInfo()
    cookies: list[CookieRecord] = []
    try:
        session.navigate(url)
        last_event = time.monotonic()
        while True:
            now = time.monotonic()
            if now >= deadline:
                timed_out = True
                break
            wait = deadline - now
            if recorder.loaded:
                if now - last_event >= settle:
                    break
                wait = min(wait, settle - (now - last_event))
            try:
                event = session.next_event(wait)
            except SessionExhausted:
                break
            if event is not None:
                recorder.feed(event)
                last_event = time.monotonic()
                if isinstance(event, FailedEvent) and recorder.document_failed():
                    break  # nothing more will load
        post_deadline = max(deadline, time.monotonic()) + grace
        try:
            info = session.page_info(max(0.05, post_deadline - time.monotonic()))
            cookies = session.cookies(max(0.05, post_deadline - time.monotonic()))
        except Exception as exc:
            diagnostic = f"post-load read failed: {exc}"
    except Exception as exc:
        diagnostic = f"session error: {exc}"
        log.warning("capture of %s failed: %s", url, exc)
    finally:
        try:
            session.close()
        except Exception as exc:
            log.debug("session close for %s: %s", url, exc)

    requests = recorder.request_records()
    doc_error = recorder.document_failed()
    if doc_error is not None:
        status = LoadStatus.FAILED
        diagnostic = diagnostic or doc_error
    elif timed_out:
        status = LoadStatus.TIMEOUT
        diagnostic = diagnostic or f"load window of {timeout:g}s elapsed"
    elif diagnostic:
        status = LoadStatus.FAILED
    else:
        status = LoadStatus.OK

    final_url = info.final_url or (requests[0].url if requests else "")
    return PageLoadResult(
        seed=seed,
        final_url=final_url,
        title=info.title,
        meta_description=info.meta_description,
        requests=requests,
        cookies=tuple(cookies),
        load_status=status,
        captured_at=info.captured_at or datetime.now(timezone.utc),
        diagnostic=diagnostic,
    )


class _ReplaySession(DriverSession):
    def __init__(self, driver: ReplayDriver):
        self._driver = driver
        self._events: list = []
        self._result: PageLoadResult | None = None

    def navigate(self, url: str) -> None:
        result = self._driver.lookup(url)
        self._result = result
        if result is None:
            self._events = [FailedEvent("doc", "net::ERR_NAME_NOT_RESOLVED (no recording)")]
            return
        events = []
        for i, req in enumerate(result.requests):
            rid = f"r{i}"
            events.append(RequestEvent(rid, req.url, req.method, req.initiated_at))
            if req.received:
                events.append(ResponseEvent(rid, req.response_status, req.content_type))
        events.append(LoadEvent())
        self._events = events
        self._events.reverse()

    def next_event(self, timeout: float):
        if not self._events:
            raise SessionExhausted
        return self._events.pop()

    def page_info(self, timeout: float) -> PageInfo:
        r = self._result
        if r is None:
            return PageInfo(captured_at=self._driver.replay_time)
        return PageInfo(r.final_url, r.title, r.meta_description, r.captured_at)

    def cookies(self, timeout: float) -> list[CookieRecord]:
        return list(self._result.cookies) if self._result else []


class ReplayDriver(CaptureDriver):
    """Serves recorded HAR pages, keyed by the URL of each page's document request.

    Lookups fall back to a scheme-insensitive match so an http seed finds a
    page recorded over https.
    """

    def __init__(self, har_dir: str | Path | None = None, results: list[PageLoadResult] = ()):
        self._by_url: dict[str, PageLoadResult] = {}
        self._by_loose: dict[str, PageLoadResult] = {}
        self.har_dir = Path(har_dir) if har_dir is not None else None
        loaded = list(results)
        if self.har_dir is not None and self.har_dir.is_dir():  # a missing dir is reported by check()
            for path in iter_har_files(self.har_dir):
                loaded.extend(load_har(path))
        # unrecorded pages are stamped with the latest recording time, not the
        # wall clock, so replays are reproducible
        stamps = [r.captured_at for r in loaded if r.captured_at]
        self.replay_time = max(stamps) if stamps else None
        for result in loaded:
            key = result.seed.normalized or result.requests[0].url
            self._by_url.setdefault(key, result)
            self._by_loose.setdefault(_loose(key), result)

    def __len__(self) -> int:
        return len(self._by_url)

    def lookup(self, url: str) -> PageLoadResult | None:
        return self._by_url.get(url) or self._by_loose.get(_loose(url))

    def check(self) -> None:
        if self.har_dir is not None and not self.har_dir.is_dir():
            raise DriverUnavailable(f"HAR directory not found: {self.har_dir}")

    def open_session(self, *, user_agent: str = DEFAULT_USER_AGENT, dnt: bool = False) -> DriverSession:
        return _ReplaySession(self)


def _loose(url: str) -> str:
    return url.split("://", 1)[-1]
