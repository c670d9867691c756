"""Curated domain -> company registry with parent-company resolution."""

from __future__ import annotations

import csv
import hashlib
import io
import re
from collections.abc import Iterable
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

__all__ = [
    "MAX_PARENT_HOPS",
    "UNATTRIBUTED",
    "Owner",
    "OwnershipEntry",
    "OwnershipError",
    "OwnershipRegistry",
    "ReachRow",
    "corporate_reach",
    "default_registry",
    "load_ownership_db",
    "parse_ownership_csv",
    "resolve_owner",
]

MAX_PARENT_HOPS = 3
UNATTRIBUTED = "unattributed"
_HOSTED_FOR_RE = re.compile(r"hosted-for=([^;]+)")
_VERSION_RE = re.compile(r"^#\s*version:\s*(\S+)", re.IGNORECASE)


class OwnershipError(ValueError):
    pass


@dataclass(frozen=True)
class OwnershipEntry:
    domain: str
    company: str
    parent: str | None = None
    notes: str | None = None
    row: int = 0

    @property
    def hosted_for(self) -> str | None:
        """Content owner named by a ``hosted-for=`` annotation in the notes."""
        if not self.notes:
            return None
        m = _HOSTED_FOR_RE.search(self.notes)
        return m.group(1).strip() if m else None


@dataclass(frozen=True)
class Owner:
    company: str
    ultimate_parent: str
    hosted_for: str | None = None

    @property
    def label(self) -> str:
        """Display form, e.g. ``Akamai/Facebook`` for hosted content."""
        return f"{self.ultimate_parent}/{self.hosted_for}" if self.hosted_for else self.ultimate_parent


class OwnershipRegistry:
    """Immutable after construction; lookups of unknown domains return None."""

    def __init__(self, entries: Iterable[OwnershipEntry], version: str = ""):
        self._by_domain: dict[str, OwnershipEntry] = {}
        parents: dict[str, tuple[str, int]] = {}
        for entry in entries:
            prior = self._by_domain.get(entry.domain)
            if prior is not None:
                raise OwnershipError(
                    f"duplicate domain {entry.domain!r} on rows {prior.row} and {entry.row}"
                )
            self._by_domain[entry.domain] = entry
            if entry.parent:
                seen = parents.get(entry.company)
                if seen is not None and seen[0] != entry.parent:
                    raise OwnershipError(
                        f"company {entry.company!r} has parent {seen[0]!r} on row {seen[1]} "
                        f"and {entry.parent!r} on row {entry.row}"
                    )
                parents[entry.company] = (entry.parent, entry.row)
        self._parents = {company: parent for company, (parent, _) in parents.items()}
        self._ultimate = {company: self._walk(company) for company in self.companies()}
        self.version = version

    def _walk(self, company: str) -> str:
        chain = [company]
        while chain[-1] in self._parents:
            nxt = self._parents[chain[-1]]
            if nxt in chain:
                raise OwnershipError("cyclic parent chain: " + " -> ".join(chain + [nxt]))
            chain.append(nxt)
            if len(chain) - 1 > MAX_PARENT_HOPS:
                raise OwnershipError(
                    f"parent chain longer than {MAX_PARENT_HOPS} hops: " + " -> ".join(chain)
                )
        return chain[-1]

    def __len__(self) -> int:
        return len(self._by_domain)

    def __contains__(self, domain: str) -> bool:
        return self._entry(domain) is not None

    def _entry(self, domain: str) -> OwnershipEntry | None:
        # Exact match first. A listed domain that is itself a public suffix
        # (akamaihd.net, amazonaws.com) also covers the registered domains
        # beneath it, which would otherwise never match.
        entry = self._by_domain.get(domain)
        while entry is None and "." in domain:
            domain = domain.split(".", 1)[1]
            entry = self._by_domain.get(domain)
        return entry

    def __iter__(self):
        return iter(sorted(self._by_domain.values(), key=lambda e: e.domain))

    def companies(self) -> set[str]:
        names = {e.company for e in self._by_domain.values()}
        return names | set(self._parents.values())

    def ultimate_parent(self, company: str) -> str:
        return self._ultimate.get(company, company)

    def lookup(self, domain: str) -> Owner | None:
        entry = self._entry(domain)
        if entry is None:
            return None
        return Owner(entry.company, self.ultimate_parent(entry.company), entry.hosted_for)


def parse_ownership_csv(text: str) -> OwnershipRegistry:
    """Parse ``domain,company,parent,notes`` CSV text. ``#`` lines are comments.

    The parent column accepts either a bare company name or ``parent=Name``.
    """
    version = ""
    data_lines = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.lstrip().startswith("#"):
            m = _VERSION_RE.match(line.strip())
            if m and not version:
                version = m.group(1)
            continue
        if line.strip():
            data_lines.append((lineno, line))
    if not version:
        version = "sha256:" + hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]

    entries = []
    header_seen = False
    for lineno, line in data_lines:
        row = next(csv.reader(io.StringIO(line), skipinitialspace=True))
        row = [cell.strip() for cell in row]
        if not header_seen and row and row[0].lower() == "domain":
            header_seen = True
            continue
        if len(row) < 2 or not row[0] or not row[1]:
            raise OwnershipError(f"row {lineno}: need at least domain and company")
        if len(row) > 4:
            raise OwnershipError(f"row {lineno}: too many columns")
        row += [""] * (4 - len(row))
        domain, company, parent, notes = row
        domain = domain.lower().strip(".")
        if "" in domain.split(".") or any(ch.isspace() for ch in domain):
            raise OwnershipError(f"row {lineno}: invalid domain {domain!r}")
        if parent.lower().startswith("parent="):
            parent = parent.split("=", 1)[1].strip()
        entries.append(
            OwnershipEntry(domain, company, parent or None, notes or None, row=lineno)
        )
    return OwnershipRegistry(entries, version)


def load_ownership_db(path: str | Path) -> OwnershipRegistry:
    return parse_ownership_csv(Path(path).read_text(encoding="utf-8"))


def default_registry() -> OwnershipRegistry:
    """The bundled seed registry of attributions named in the source study."""
    text = resources.files("tpcensus.data").joinpath("ownership.csv").read_text(encoding="utf-8")
    return parse_ownership_csv(text)


def resolve_owner(domain: str, registry: OwnershipRegistry) -> Owner | None:
    """Registered-domain lookup. ``None`` means unattributed."""
    return registry.lookup(domain)


@dataclass(frozen=True)
class ReachRow:
    company: str
    n_pages: int
    pct_pages: float


def corporate_reach(page_domains, registry: OwnershipRegistry) -> list[ReachRow]:
    """Share of pages contacting each ultimate-parent company.

    ``page_domains`` is a filtered store view, or a mapping from every
    successfully analyzed page to the third-party registered domains it
    contacted. A page counts once per company however many of its domains
    resolve there.
    """
    if hasattr(page_domains, "page_domains"):
        page_domains = page_domains.page_domains()
    n_pages = len(page_domains)
    if n_pages == 0:
        raise ValueError("corporate reach needs at least one analyzed page")
    counts: dict[str, int] = {}
    for domains in page_domains.values():
        companies = set()
        for domain in domains:
            owner = registry.lookup(domain)
            if owner is not None:
                companies.add(owner.ultimate_parent)
        for company in companies:
            counts[company] = counts.get(company, 0) + 1
    rows = [ReachRow(c, k, 100.0 * k / n_pages) for c, k in counts.items()]
    rows.sort(key=lambda r: (-r.n_pages, r.company))
    return rows
