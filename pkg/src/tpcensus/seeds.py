"""Seed list validation, normalization and deduplication."""

from __future__ import annotations

import enum
import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path
from urllib.parse import urlsplit

__all__ = [
    "DEFAULT_BINARY_EXTENSIONS",
    "RejectReason",
    "SeedStatus",
    "SeedUrl",
    "filter_seed_list",
    "normalize_url",
    "read_seed_file",
]

DEFAULT_BINARY_EXTENSIONS = frozenset(
    {"pdf", "xls", "xlsx", "doc", "docx", "ppt", "pptx", "zip", "gz", "exe", "dmg"}
)

_SCHEME_RE = re.compile(r"^([A-Za-z][A-Za-z0-9+.\-]*)://")
_HOST_RE = re.compile(r"^[^\s/\\?#@:]+$")
_RANKED_RE = re.compile(r"^\s*(\d+)\s*,\s*(\S.*?)\s*$")


class SeedStatus(str, enum.Enum):
    ACCEPTED = "accepted"
    REJECTED = "rejected"


class RejectReason(str, enum.Enum):
    MALFORMED = "malformed"
    BINARY_EXTENSION = "binary_extension"
    DUPLICATE = "duplicate"


@dataclass(frozen=True)
class SeedUrl:
    raw: str
    normalized: str | None
    rank: int | None = None
    status: SeedStatus = SeedStatus.ACCEPTED
    reject_reason: RejectReason | None = None

    @property
    def accepted(self) -> bool:
        return self.status is SeedStatus.ACCEPTED

    def to_dict(self) -> dict:
        return {
            "raw": self.raw,
            "normalized": self.normalized,
            "rank": self.rank,
            "status": self.status.value,
            "reject_reason": self.reject_reason.value if self.reject_reason else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> SeedUrl:
        reason = d.get("reject_reason")
        return cls(
            raw=d["raw"],
            normalized=d.get("normalized"),
            rank=d.get("rank"),
            status=SeedStatus(d.get("status", "accepted")),
            reject_reason=RejectReason(reason) if reason else None,
        )


def _reject(raw, normalized, rank, reason) -> SeedUrl:
    return SeedUrl(raw, normalized, rank, SeedStatus.REJECTED, reason)


def normalize_url(
    raw: str,
    rank: int | None = None,
    *,
    blocked_extensions: Iterable[str] = DEFAULT_BINARY_EXTENSIONS,
) -> SeedUrl:
    """Normalize one seed address. Rejections are encoded in the result, never raised.

    The scheme defaults to http, the host is lowercased, the fragment is
    dropped and an empty path becomes "/". Path and query are kept verbatim.
    """
    text = raw.strip()
    if text.startswith("//"):
        text = "http:" + text
    elif not _SCHEME_RE.match(text):
        text = "http://" + text
    try:
        parts = urlsplit(text)
        port = parts.port
    except ValueError:
        return _reject(raw, None, rank, RejectReason.MALFORMED)
    scheme = parts.scheme.lower()
    host = (parts.hostname or "").rstrip(".")
    if scheme not in ("http", "https") or not host:
        return _reject(raw, None, rank, RejectReason.MALFORMED)
    if ":" in host:  # IPv6 literal, brackets stripped by urlsplit
        host = f"[{host}]"
    elif not _HOST_RE.match(host) or "" in host.split("."):
        return _reject(raw, None, rank, RejectReason.MALFORMED)

    netloc = host if port is None else f"{host}:{port}"
    path = parts.path or "/"
    normalized = f"{scheme}://{netloc}{path}"
    if parts.query:
        normalized += "?" + parts.query

    filename = path.rsplit("/", 1)[-1]
    if "." in filename[1:]:
        ext = filename.rsplit(".", 1)[1].lower()
        if ext in set(blocked_extensions):
            return _reject(raw, normalized, rank, RejectReason.BINARY_EXTENSION)
    return SeedUrl(raw, normalized, rank)


def filter_seed_list(
    seeds: Sequence[str],
    ranks: Sequence[int | None] | None = None,
    *,
    blocked_extensions: Iterable[str] = DEFAULT_BINARY_EXTENSIONS,
) -> list[SeedUrl]:
    """Normalize every seed, keeping order; later copies of an accepted URL are rejected."""
    blocked = frozenset(blocked_extensions)
    seen: set[str] = set()
    out = []
    for i, raw in enumerate(seeds):
        rank = ranks[i] if ranks is not None else None
        seed = normalize_url(raw, rank, blocked_extensions=blocked)
        if seed.accepted:
            if seed.normalized in seen:
                seed = _reject(raw, seed.normalized, rank, RejectReason.DUPLICATE)
            else:
                seen.add(seed.normalized)
        out.append(seed)
    return out


def read_seed_file(path: str | Path) -> tuple[list[str], list[int]]:
    """Read a seed list: one URL per line or Alexa-style ``rank,url``.

    Blank lines and ``#`` comments are skipped. Lines without an explicit
    rank get their 1-based position among the remaining lines.
    """
    urls: list[str] = []
    ranks: list[int] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            m = _RANKED_RE.match(stripped)
            if m:
                ranks.append(int(m.group(1)))
                urls.append(m.group(2))
            else:
                ranks.append(len(urls) + 1)
                urls.append(stripped)
    return urls, ranks
