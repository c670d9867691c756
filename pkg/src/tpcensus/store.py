"""Crawl store: per-page third-party elements and cookies, with JSONL persistence.

The store lives in memory and persists to a single line-delimited file that
doubles as the interchange format. Every record is one JSON object tagged by
``kind`` (``meta``, ``page``, ``element``, ``cookie``); records are written in
sorted key order so identical contents always serialize to identical bytes.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .capture.models import LoadStatus, PageLoadResult, format_ts, parse_ts
from .elements import (
    DEFAULT_EXTENSION_TYPES,
    UrlParseError,
    is_third_party,
    page_domain,
    page_host,
    parse_request_url,
)
from .psl import InvalidHost, NoRegisteredDomain, PublicSuffixRuleSet, is_ip_host, registered_domain

__all__ = [
    "FORMAT_NAME",
    "FORMAT_VERSION",
    "CookieRow",
    "CrawlStore",
    "ElementRow",
    "IngestSummary",
    "PageRow",
    "StoreError",
    "export_store",
    "import_store",
    "page_tld",
]

FORMAT_NAME = "tpcensus-store"
FORMAT_VERSION = 1


class StoreError(RuntimeError):
    pass


def page_tld(host: str) -> str:
    """Grouping label for per-TLD tables: the final host label, or ``ip``."""
    if not host:
        return ""
    if is_ip_host(host):
        return "ip"
    return host.rstrip(".").rsplit(".", 1)[-1].lower()


@dataclass(frozen=True)
class PageRow:
    url: str
    raw: str
    rank: int | None
    final_url: str
    title: str
    meta_description: str
    load_status: str
    captured_at: str | None
    page_domain: str
    tld: str
    n_requests: int
    n_third_party_requests: int
    n_unattributable: int
    n_bare_suffix_cookies: int = 0
    diagnostic: str = ""

    @property
    def analyzed(self) -> bool:
        return self.load_status != LoadStatus.FAILED.value


@dataclass(frozen=True)
class ElementRow:
    page_url: str
    registered_domain: str
    element_path: str
    filename: str
    extension: str
    element_type: str
    full_url: str
    n_requests: int

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.page_url, self.registered_domain, self.element_path)

    @property
    def identity(self) -> tuple[str, str]:
        return (self.registered_domain, self.element_path)


@dataclass(frozen=True)
class CookieRow:
    page_url: str
    domain: str
    registered_domain: str
    name: str
    value: str
    path: str = "/"
    expiry: str | None = None
    secure: bool = False
    http_only: bool = False

    @property
    def key(self) -> tuple[str, str, str, str]:
        return (self.page_url, self.domain, self.name, self.value)


@dataclass(frozen=True)
class IngestSummary:
    n_third_party_requests: int
    n_third_party_cookies: int


@dataclass
class CrawlStore:
    pages: dict[str, PageRow] = field(default_factory=dict)
    # both keyed by page url first so a page's records can be replaced wholesale
    elements: dict[str, dict[tuple, ElementRow]] = field(default_factory=dict)
    cookies: dict[str, dict[tuple, CookieRow]] = field(default_factory=dict)
    psl_version: str = ""
    registry_version: str = ""
    retry_queue: list[PageLoadResult] = field(default_factory=list, repr=False)

    @property
    def metadata(self) -> dict:
        """Run timestamp is the latest capture time, so reruns stay byte-identical."""
        stamps = sorted((p.captured_at for p in self.pages.values() if p.captured_at), key=parse_ts)
        return {
            "psl_version": self.psl_version,
            "registry_version": self.registry_version,
            "run_timestamp": stamps[-1] if stamps else None,
        }

    def __len__(self) -> int:
        return len(self.pages)

    @property
    def diagnostics(self) -> dict[str, int]:
        return {
            "cookie_bare_suffix": sum(p.n_bare_suffix_cookies for p in self.pages.values()),
            "unattributable_requests": sum(p.n_unattributable for p in self.pages.values()),
        }

    def analyzed_pages(self) -> list[PageRow]:
        return [self.pages[k] for k in sorted(self.pages) if self.pages[k].analyzed]

    def failed_pages(self) -> list[PageRow]:
        return [self.pages[k] for k in sorted(self.pages) if not self.pages[k].analyzed]

    def elements_for(self, page_url: str) -> list[ElementRow]:
        table = self.elements.get(page_url, {})
        return [table[k] for k in sorted(table)]

    def cookies_for(self, page_url: str) -> list[CookieRow]:
        table = self.cookies.get(page_url, {})
        return [table[k] for k in sorted(table)]

    def iter_elements(self):
        for url in sorted(self.elements):
            yield from self.elements_for(url)

    def iter_cookies(self):
        for url in sorted(self.cookies):
            yield from self.cookies_for(url)

    def put_page_result(
        self, result: PageLoadResult, rules: PublicSuffixRuleSet, extension_map=DEFAULT_EXTENSION_TYPES
    ) -> IngestSummary:
        """Store one page's third-party elements and cookies; first-party ones are dropped.

        Re-ingesting a page replaces its previous records, so repeats never
        inflate counts. On failure the result is parked in ``retry_queue``.
        """
        try:
            return self._put(result, rules, extension_map)
        except Exception as exc:
            self.retry_queue.append(result)
            raise StoreError(f"could not store {result.page_url}: {exc}") from exc

    def _put(self, result, rules, extension_map) -> IngestSummary:
        url = result.page_url
        location = result.final_url or url
        own = page_domain(location, rules)
        if not self.psl_version:
            self.psl_version = rules.version

        elements: dict[tuple, ElementRow] = {}
        n_third = n_unattributable = 0
        for req in result.requests:
            try:
                parsed = parse_request_url(req.url, rules, extension_map)
            except (UrlParseError, NoRegisteredDomain, InvalidHost):
                n_unattributable += 1
                continue
            if not is_third_party(own, parsed.registered_domain):
                continue
            n_third += 1
            key = (url, parsed.registered_domain, parsed.element_path)
            prev = elements.get(key)
            full_url = parsed.full_url if prev is None else min(prev.full_url, parsed.full_url)
            elements[key] = ElementRow(
                page_url=url,
                registered_domain=parsed.registered_domain,
                element_path=parsed.element_path,
                filename=parsed.filename,
                extension=parsed.extension,
                element_type=parsed.element_type.value,
                full_url=full_url,
                n_requests=(prev.n_requests if prev else 0) + 1,
            )

        cookies: dict[tuple, CookieRow] = {}
        n_bare = 0
        for cookie in result.cookies:
            try:
                domain = registered_domain(cookie.domain, rules)
            except (NoRegisteredDomain, InvalidHost):
                n_bare += 1
                continue
            if not is_third_party(own, domain):
                continue
            row = CookieRow(
                page_url=url,
                domain=cookie.domain,
                registered_domain=domain,
                name=cookie.name,
                value=cookie.value,
                path=cookie.path,
                expiry=format_ts(cookie.expiry),
                secure=cookie.secure,
                http_only=cookie.http_only,
            )
            cookies[row.key] = row

        page = PageRow(
            url=url,
            raw=result.seed.raw,
            rank=result.seed.rank,
            final_url=result.final_url,
            title=result.title,
            meta_description=result.meta_description,
            load_status=result.load_status.value,
            captured_at=format_ts(result.captured_at),
            page_domain=own,
            tld=page_tld(page_host(location)),
            n_requests=len(result.requests),
            n_third_party_requests=n_third,
            n_unattributable=n_unattributable,
            n_bare_suffix_cookies=n_bare,
            diagnostic=result.diagnostic,
        )
        self.pages[url] = page
        self.elements[url] = elements
        self.cookies[url] = cookies
        return IngestSummary(n_third, len(cookies))

    # persistence

    def records(self) -> list[dict]:
        meta = {"kind": "meta", "format": FORMAT_NAME, "version": FORMAT_VERSION, **self.metadata}
        out = [meta]
        out += [{"kind": "page", **asdict(self.pages[k])} for k in sorted(self.pages)]
        out += [{"kind": "element", **asdict(e)} for e in self.iter_elements()]
        out += [{"kind": "cookie", **asdict(c)} for c in self.iter_cookies()]
        return out

    def dumps(self) -> str:
        return "".join(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n" for r in self.records())

    def save(self, path: str | Path) -> None:
        """Atomic write of the line-delimited export."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(self.dumps())
            os.replace(tmp, path)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise

    @classmethod
    def loads(cls, text: str) -> CrawlStore:
        store = cls()
        seen_meta = False
        builders = {"page": (PageRow, store.pages), "element": (ElementRow, store.elements),
                    "cookie": (CookieRow, store.cookies)}
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                kind = rec.pop("kind")
            except (json.JSONDecodeError, KeyError, TypeError, AttributeError) as exc:
                raise StoreError(f"line {lineno}: malformed record ({exc})") from None
            if kind == "meta":
                if rec.get("format") != FORMAT_NAME:
                    raise StoreError(f"line {lineno}: not a {FORMAT_NAME} file")
                if rec.get("version") != FORMAT_VERSION:
                    raise StoreError(f"line {lineno}: unsupported version {rec.get('version')!r}")
                store.psl_version = rec.get("psl_version") or ""
                store.registry_version = rec.get("registry_version") or ""
                seen_meta = True
                continue
            if kind not in builders:
                raise StoreError(f"line {lineno}: unknown record kind {kind!r}")
            row_type, table = builders[kind]
            try:
                row = row_type(**rec)
            except TypeError as exc:
                raise StoreError(f"line {lineno}: bad {kind} record ({exc})") from None
            if kind == "page":
                table[row.url] = row
            else:
                table.setdefault(row.page_url, {})[row.key] = row
        if not seen_meta:
            raise StoreError("missing meta record")
        return store

    @classmethod
    def open(cls, path: str | Path) -> CrawlStore:
        """Load an existing store file, or start an empty store if absent."""
        path = Path(path)
        if not path.exists():
            return cls()
        return cls.loads(path.read_text(encoding="utf-8"))


def export_store(store: CrawlStore, path: str | Path) -> Path:
    store.save(path)
    return Path(path)


def import_store(path: str | Path) -> CrawlStore:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise StoreError(f"{path}: {exc}") from None
    return CrawlStore.loads(text)
