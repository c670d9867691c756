"""Third-party cookie selection and surveillance-indicator flagging."""

from __future__ import annotations

import csv
import io
import re
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path

from .capture.models import CookieRecord, LoadStatus, PageLoadResult
from .elements import page_domain
from .ownership import OwnershipRegistry
from .psl import InvalidHost, NoRegisteredDomain, PublicSuffixRuleSet, default_rules, registered_domain

__all__ = [
    "DEFAULT_INDICATORS",
    "IndicatorRule",
    "SurveillanceFlag",
    "flag_surveillance_cookies",
    "indicator_page_counts",
    "load_indicators",
    "match_indicators",
    "third_party_cookies",
]


@dataclass(frozen=True)
class IndicatorRule:
    cookie_name: str
    match_kind: str  # "owner" or "domain"
    match_value: str
    label: str = ""

    def __post_init__(self) -> None:
        if self.match_kind not in ("owner", "domain"):
            raise ValueError(f"match kind must be 'owner' or 'domain', got {self.match_kind!r}")
        if not self.label:
            stem = self.match_value.lower().split(".")[0]
            label = re.sub(r"[^a-z0-9]+", "_", f"{stem}_{self.cookie_name.lower()}").strip("_")
            object.__setattr__(self, "label", label)

    def matches(self, name: str, domain: str, registry: OwnershipRegistry) -> bool:
        if name != self.cookie_name:
            return False
        if self.match_kind == "domain":
            return domain == self.match_value.lower()
        owner = registry.lookup(domain)
        return owner is not None and self.match_value in (owner.company, owner.ultimate_parent)


DEFAULT_INDICATORS: tuple[IndicatorRule, ...] = (
    IndicatorRule("PREF", "owner", "Google", "google_pref"),
    IndicatorRule("id", "domain", "doubleclick.net", "doubleclick_id"),
)


def load_indicators(path: str | Path) -> tuple[IndicatorRule, ...]:
    """Read ``cookie_name, match_kind, match_value[, label]`` lines (``#`` comments)."""
    rules = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        row = [c.strip() for c in next(csv.reader(io.StringIO(line), skipinitialspace=True))]
        if len(row) not in (3, 4) or not all(row[:3]):
            raise ValueError(f"{path}:{lineno}: expected 'cookie_name, match_kind, match_value'")
        try:
            rules.append(IndicatorRule(*row))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return tuple(rules)


@dataclass(frozen=True)
class SurveillanceFlag:
    page_url: str
    cookie_name: str
    cookie_domain: str
    indicator: str


def third_party_cookies(
    page_domain: str,
    cookies: Iterable[CookieRecord],
    rules: PublicSuffixRuleSet,
    diagnostics: Counter | None = None,
) -> list[CookieRecord]:
    """Cookies whose registered domain differs from the page's.

    Cookies scoped to a bare public suffix cannot be attributed; they are
    dropped and tallied under ``cookie_bare_suffix`` in ``diagnostics``.
    """
    out = []
    for cookie in cookies:
        try:
            domain = registered_domain(cookie.domain, rules)
        except (NoRegisteredDomain, InvalidHost):
            if diagnostics is not None:
                diagnostics["cookie_bare_suffix"] += 1
            continue
        if domain != page_domain:
            out.append(cookie)
    return out


def match_indicators(
    name: str, domain: str, registry: OwnershipRegistry, indicators: Sequence[IndicatorRule] = DEFAULT_INDICATORS
) -> list[str]:
    """Labels of every indicator a cookie (by registered domain) trips."""
    return [rule.label for rule in indicators if rule.matches(name, domain, registry)]


def flag_surveillance_cookies(
    results: Iterable[PageLoadResult],
    ownership: OwnershipRegistry,
    rules: PublicSuffixRuleSet | None = None,
    indicators: Sequence[IndicatorRule] = DEFAULT_INDICATORS,
) -> list[SurveillanceFlag]:
    """One flag per matching third-party cookie; see ``indicator_page_counts`` for page totals."""
    rules = rules or default_rules()
    flags = []
    for result in results:
        if result.load_status is LoadStatus.FAILED:
            continue
        own = page_domain(result.final_url or result.page_url, rules)
        for cookie in third_party_cookies(own, result.cookies, rules):
            domain = registered_domain(cookie.domain, rules)
            for label in match_indicators(cookie.name, domain, ownership, indicators):
                flags.append(SurveillanceFlag(result.page_url, cookie.name, cookie.domain, label))
    return flags


def indicator_page_counts(flags: Iterable[SurveillanceFlag]) -> dict[str, int]:
    pages: dict[str, set[str]] = {}
    for flag in flags:
        pages.setdefault(flag.indicator, set()).add(flag.page_url)
    return {label: len(urls) for label, urls in sorted(pages.items())}
