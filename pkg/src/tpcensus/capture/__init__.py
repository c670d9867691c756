"""Page capture: live browser automation or recorded HTTP archives."""

from .driver import (
    DEFAULT_TIMEOUT,
    DEFAULT_USER_AGENT,
    TIMEOUT_MODE,
    CaptureDriver,
    DriverSession,
    DriverUnavailable,
    FailedEvent,
    LoadEvent,
    PageInfo,
    ReplayDriver,
    RequestEvent,
    ResponseEvent,
    SessionExhausted,
    load_page,
)
from .har import HarError, ingest_har, iter_har_files, load_har
from .models import CookieRecord, LoadStatus, PageLoadResult, RequestRecord
from .pool import PolitenessGate, capture_corpus
from .setcookie import parse_set_cookie

__all__ = [
    "DEFAULT_TIMEOUT",
    "DEFAULT_USER_AGENT",
    "TIMEOUT_MODE",
    "CaptureDriver",
    "CookieRecord",
    "DriverSession",
    "DriverUnavailable",
    "FailedEvent",
    "HarError",
    "LoadEvent",
    "LoadStatus",
    "PageInfo",
    "PageLoadResult",
    "PolitenessGate",
    "ReplayDriver",
    "RequestEvent",
    "RequestRecord",
    "ResponseEvent",
    "SessionExhausted",
    "capture_corpus",
    "ingest_har",
    "iter_har_files",
    "load_har",
    "load_page",
    "parse_set_cookie",
]
