"""HTTP-archive (HAR 1.2) ingestion into PageLoadResults."""

from __future__ import annotations

import json
from pathlib import Path
from urllib.parse import urljoin, urlsplit

from ..seeds import normalize_url
from .models import CookieRecord, LoadStatus, PageLoadResult, RequestRecord, parse_ts
from .setcookie import parse_set_cookie, split_set_cookie_value

__all__ = ["HarError", "ingest_har", "iter_har_files", "load_har"]

_NO_PAGE = object()


class HarError(ValueError):
    pass


def _require(obj, key, where):
    if not isinstance(obj, dict) or key not in obj or obj[key] is None:
        raise HarError(f"{where}: missing required field {key!r}")
    return obj[key]


def _header(headers, name):
    name = name.lower()
    return [h.get("value", "") for h in headers if str(h.get("name", "")).lower() == name]


def _entry_records(index, entry):
    where = f"entry {index}"
    request = _require(entry, "request", where)
    url = _require(request, "url", where + " request")
    method = _require(request, "method", where + " request")
    started = parse_ts(_require(entry, "startedDateTime", where))
    parts = urlsplit(url)
    if parts.scheme not in ("http", "https") or not parts.hostname:
        raise HarError(f"{where}: request url is not absolute: {url!r}")

    response = entry.get("response") or {}
    status = response.get("status")
    received = isinstance(status, int) and status > 0
    mime = (response.get("content") or {}).get("mimeType") or None
    record = RequestRecord(
        url=url,
        method=method,
        initiated_at=started,
        received=received,
        response_status=status if received else None,
        content_type=mime if received else None,
    )

    cookies = []
    for value in _header(response.get("headers") or [], "set-cookie"):
        for line in split_set_cookie_value(value):
            cookie = parse_set_cookie(line, url, started)
            if cookie is not None:
                cookies.append(cookie)
    location = None
    if received and 300 <= status < 400:
        loc = response.get("redirectURL") or next(
            iter(_header(response.get("headers") or [], "location")), ""
        )
        if loc:
            location = urljoin(url, loc)
    return record, cookies, location


def _final_url(records, locations):
    current = 0
    seen = {0}
    while locations[current]:
        target = locations[current]
        nxt = next(
            (i for i in range(current + 1, len(records)) if records[i].url == target and i not in seen),
            None,
        )
        if nxt is None:
            return target
        seen.add(nxt)
        current = nxt
    return records[current].url


def _jar(cookies: list[CookieRecord]) -> tuple[CookieRecord, ...]:
    jar: dict[tuple[str, str, str], CookieRecord] = {}
    for cookie in cookies:
        jar[(cookie.domain, cookie.path, cookie.name)] = cookie
    return tuple(jar[k] for k in sorted(jar))


def ingest_har(document: dict) -> list[PageLoadResult]:
    """Map a HAR document to one PageLoadResult per page.

    Entries are grouped by ``pageref``; a document without ``log.pages`` is
    treated as a single page. The first entry of a page is its document
    request and redirects from it are followed to find the final URL.
    """
    log = _require(document, "log", "document")
    entries = log.get("entries")
    if not isinstance(entries, list) or not entries:
        raise HarError("document: log.entries is empty; a page load always has a document request")
    pages = log.get("pages") or []

    parsed = [_entry_records(i, e) for i, e in enumerate(entries)]
    groups: dict[object, list[int]] = {}
    if pages:
        ids = []
        for j, page in enumerate(pages):
            ids.append(_require(page, "id", f"page {j}"))
            groups[ids[-1]] = []
        for i, entry in enumerate(entries):
            ref = entry.get("pageref")
            key = ref if ref in groups else ids[0]
            groups[key].append(i)
    else:
        ids = [_NO_PAGE]
        groups[_NO_PAGE] = list(range(len(entries)))

    results = []
    for j, page_id in enumerate(ids):
        idx = groups[page_id]
        if not idx:
            raise HarError(f"page {j} ({page_id!r}) has no entries")
        page = pages[j] if pages else {}
        records = [parsed[i][0] for i in idx]
        locations = [parsed[i][2] for i in idx]
        cookies = [c for i in idx for c in parsed[i][1]]
        captured = parse_ts(page.get("startedDateTime")) or records[0].initiated_at
        results.append(
            PageLoadResult(
                seed=normalize_url(records[0].url),
                final_url=_final_url(records, locations),
                title=page.get("title") or "",
                meta_description=page.get("_metaDescription") or "",
                requests=tuple(records),
                cookies=_jar(cookies),
                load_status=LoadStatus.OK,
                captured_at=captured,
            )
        )
    return results


def load_har(path: str | Path) -> list[PageLoadResult]:
    try:
        document = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise HarError(f"{path}: not valid JSON ({exc})") from None
    try:
        return ingest_har(document)
    except HarError as exc:
        raise HarError(f"{path}: {exc}") from None


def iter_har_files(directory: str | Path) -> list[Path]:
    """HAR files in a directory, sorted by name for stable processing order."""
    return sorted(p for p in Path(directory).iterdir() if p.suffix.lower() == ".har" and p.is_file())
