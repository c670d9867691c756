from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from datetime import datetime, timezone

from ..seeds import SeedUrl

__all__ = [
    "CookieRecord",
    "LoadStatus",
    "PageLoadResult",
    "RequestRecord",
    "format_ts",
    "parse_ts",
]

_FRACTION_RE = re.compile(r"\.(\d+)")


def parse_ts(text: str | None) -> datetime | None:
    """Parse an ISO-8601 timestamp (HAR style, ``Z`` suffix allowed) as aware UTC."""
    if not text:
        return None
    s = text.strip()
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    s = _FRACTION_RE.sub(lambda m: "." + (m.group(1) + "000000")[:6], s, count=1)
    ts = datetime.fromisoformat(s)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_ts(ts: datetime | None) -> str | None:
    if ts is None:
        return None
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


class LoadStatus(str, enum.Enum):
    OK = "ok"
    TIMEOUT = "timeout"
    FAILED = "failed"


@dataclass(frozen=True)
class RequestRecord:
    url: str
    method: str = "GET"
    initiated_at: datetime | None = None
    received: bool = False
    response_status: int | None = None
    content_type: str | None = None

    def to_dict(self) -> dict:
        return {
            "url": self.url,
            "method": self.method,
            "initiated_at": format_ts(self.initiated_at),
            "received": self.received,
            "response_status": self.response_status,
            "content_type": self.content_type,
        }

    @classmethod
    def from_dict(cls, d: dict) -> RequestRecord:
        return cls(
            url=d["url"],
            method=d.get("method", "GET"),
            initiated_at=parse_ts(d.get("initiated_at")),
            received=bool(d.get("received", False)),
            response_status=d.get("response_status"),
            content_type=d.get("content_type"),
        )


@dataclass(frozen=True)
class CookieRecord:
    name: str
    value: str
    domain: str
    path: str = "/"
    expiry: datetime | None = None
    secure: bool = False
    http_only: bool = False

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("cookie name must be non-empty")
        domain = self.domain.lstrip(".").lower()
        if not domain:
            raise ValueError("cookie domain must be non-empty")
        object.__setattr__(self, "domain", domain)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "domain": self.domain,
            "path": self.path,
            "expiry": format_ts(self.expiry),
            "secure": self.secure,
            "http_only": self.http_only,
        }

    @classmethod
    def from_dict(cls, d: dict) -> CookieRecord:
        return cls(
            name=d["name"],
            value=d.get("value", ""),
            domain=d["domain"],
            path=d.get("path", "/"),
            expiry=parse_ts(d.get("expiry")),
            secure=bool(d.get("secure", False)),
            http_only=bool(d.get("http_only", False)),
        )


@dataclass(frozen=True)
class PageLoadResult:
    seed: SeedUrl
    final_url: str
    title: str = ""
    meta_description: str = ""
    requests: tuple[RequestRecord, ...] = ()
    cookies: tuple[CookieRecord, ...] = ()
    load_status: LoadStatus = LoadStatus.OK
    captured_at: datetime | None = None
    diagnostic: str = ""

    @property
    def page_url(self) -> str:
        """Key under which the page is stored: the normalized seed address."""
        return self.seed.normalized or self.final_url or self.seed.raw

    def to_dict(self) -> dict:
        return {
            "seed": self.seed.to_dict(),
            "final_url": self.final_url,
            "title": self.title,
            "meta_description": self.meta_description,
            "requests": [r.to_dict() for r in self.requests],
            "cookies": [c.to_dict() for c in self.cookies],
            "load_status": self.load_status.value,
            "captured_at": format_ts(self.captured_at),
            "diagnostic": self.diagnostic,
        }

    @classmethod
    def from_dict(cls, d: dict) -> PageLoadResult:
        return cls(
            seed=SeedUrl.from_dict(d["seed"]),
            final_url=d.get("final_url", ""),
            title=d.get("title", ""),
            meta_description=d.get("meta_description", ""),
            requests=tuple(RequestRecord.from_dict(r) for r in d.get("requests", [])),
            cookies=tuple(CookieRecord.from_dict(c) for c in d.get("cookies", [])),
            load_status=LoadStatus(d.get("load_status", "ok")),
            captured_at=parse_ts(d.get("captured_at")),
            diagnostic=d.get("diagnostic", ""),
        )
