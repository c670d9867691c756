"""Set-Cookie header parsing (RFC 6265, the subset a census needs)."""

from __future__ import annotations

from datetime import datetime, timedelta, timezone
from email.utils import parsedate_to_datetime
from urllib.parse import urlsplit

from .models import CookieRecord

__all__ = ["domain_matches", "parse_set_cookie", "split_set_cookie_value"]


def _default_path(request_path: str) -> str:
    if not request_path.startswith("/") or request_path.count("/") == 1:
        return "/"
    return request_path[: request_path.rfind("/")]


def domain_matches(host: str, domain: str) -> bool:
    return host == domain or host.endswith("." + domain)


def split_set_cookie_value(value: str) -> list[str]:
    """HAR exporters join repeated Set-Cookie headers with newlines."""
    return [part for part in value.split("\n") if part.strip()]


def parse_set_cookie(
    header: str, request_url: str, received_at: datetime | None = None
) -> CookieRecord | None:
    """Parse one Set-Cookie value. Returns None for headers a browser would ignore."""
    pairs = header.split(";")
    name, sep, value = pairs[0].partition("=")
    name = name.strip()
    if not sep or not name:
        return None
    value = value.strip()
    if len(value) >= 2 and value[0] == value[-1] == '"':
        value = value[1:-1]

    parts = urlsplit(request_url)
    host = (parts.hostname or "").rstrip(".")
    domain = host
    path = _default_path(parts.path)
    expiry = None
    max_age = None
    secure = http_only = False

    for attr in pairs[1:]:
        key, _, val = attr.partition("=")
        key = key.strip().lower()
        val = val.strip()
        if key == "domain" and val:
            domain = val.lstrip(".").lower()
        elif key == "path" and val.startswith("/"):
            path = val
        elif key == "expires":
            try:
                expiry = parsedate_to_datetime(val)
            except (TypeError, ValueError, IndexError):
                pass
            else:
                if expiry.tzinfo is None:
                    expiry = expiry.replace(tzinfo=timezone.utc)
        elif key == "max-age":
            try:
                max_age = int(val)
            except ValueError:
                pass
        elif key == "secure":
            secure = True
        elif key == "httponly":
            http_only = True

    if max_age is not None and received_at is not None:
        expiry = received_at + timedelta(seconds=max_age)
    if not domain or (host and not domain_matches(host, domain)):
        return None
    return CookieRecord(name, value, domain, path, expiry, secure, http_only)
