"""Single-site filtering and every aggregate statistic of the census report."""

from __future__ import annotations

import json
from collections.abc import Iterable, Sequence
from dataclasses import asdict, dataclass, field

from .capture.driver import TIMEOUT_MODE
from .cookies import DEFAULT_INDICATORS, IndicatorRule, match_indicators
from .elements import ElementType
from .ownership import UNATTRIBUTED, OwnershipRegistry, ReachRow, corporate_reach
from .store import CookieRow, CrawlStore, ElementRow, PageRow

__all__ = [
    "MIN_PAGES_PER_DOMAIN",
    "REPORT_SCHEMA_VERSION",
    "CensusReport",
    "FilteredView",
    "ReportError",
    "SummaryStats",
    "TldRow",
    "TopElement",
    "build_report",
    "filter_single_site_domains",
    "render_report",
    "summary_stats",
    "surveillance_stats",
    "tld_breakdown",
    "top_elements",
    "type_distribution",
]

REPORT_SCHEMA_VERSION = "1.0"
MIN_PAGES_PER_DOMAIN = 2


class ReportError(ValueError):
    pass


def _pct(count: int, total: int) -> float:
    return 100.0 * count / total if total else 0.0


@dataclass(frozen=True)
class FilteredView:
    """Analyzed pages with their third-party records, minus single-site domains."""

    pages: tuple[PageRow, ...]
    failed: tuple[PageRow, ...]
    elements: dict[str, tuple[ElementRow, ...]]
    cookies: dict[str, tuple[CookieRow, ...]]
    excluded_domains: tuple[str, ...] = ()
    min_pages: int = MIN_PAGES_PER_DOMAIN
    metadata: dict = field(default_factory=dict)

    def page_domains(self) -> dict[str, set[str]]:
        """Retained third-party registered domains contacted by each analyzed page."""
        return {p.url: {e.registered_domain for e in self.elements[p.url]} for p in self.pages}

    def domain_page_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for p in self.pages:
            domains = {e.registered_domain for e in self.elements[p.url]}
            domains |= {c.registered_domain for c in self.cookies[p.url]}
            for d in domains:
                counts[d] = counts.get(d, 0) + 1
        return counts


def _view_from_store(store: CrawlStore) -> FilteredView:
    pages = tuple(store.analyzed_pages())
    return FilteredView(
        pages=pages,
        failed=tuple(store.failed_pages()),
        elements={p.url: tuple(store.elements_for(p.url)) for p in pages},
        cookies={p.url: tuple(store.cookies_for(p.url)) for p in pages},
        metadata=dict(store.metadata),
    )


def filter_single_site_domains(
    source: CrawlStore | FilteredView, min_pages: int = MIN_PAGES_PER_DOMAIN
) -> FilteredView:
    """Drop third-party domains seen on fewer than ``min_pages`` analyzed pages.

    A domain counts as seen on a page if the page requested an element from
    it or holds a third-party cookie scoped to it. Filtering a filtered view
    again changes nothing.
    """
    view = _view_from_store(source) if isinstance(source, CrawlStore) else source
    counts = view.domain_page_counts()
    dropped = {d for d, n in counts.items() if n < min_pages}
    return FilteredView(
        pages=view.pages,
        failed=view.failed,
        elements={u: tuple(e for e in es if e.registered_domain not in dropped) for u, es in view.elements.items()},
        cookies={u: tuple(c for c in cs if c.registered_domain not in dropped) for u, cs in view.cookies.items()},
        excluded_domains=tuple(sorted(set(view.excluded_domains) | dropped)),
        min_pages=min_pages,
        metadata=view.metadata,
    )


@dataclass(frozen=True)
class SummaryStats:
    n_pages_analyzed: int
    n_pages_failed: int
    n_pages_timeout: int
    n_with_3pe: int
    pct_with_3pe: float
    avg_domains_contacted: float
    avg_domains_all_pages: float
    no_qualifying_pages: bool
    n_with_3p_cookie: int
    pct_with_3p_cookie: float
    n_with_3p_js: int
    pct_with_3p_js: float
    n_distinct_domains: int
    n_unique_elements_global: int
    n_unique_elements_per_page: int
    n_unique_cookies: int


def _page_counts(pages: Sequence[PageRow], view: FilteredView):
    n = len(pages)
    with_3pe = with_cookie = with_js = total_domains = 0
    for p in pages:
        elements = view.elements[p.url]
        k = len({e.registered_domain for e in elements})
        total_domains += k
        with_3pe += k > 0
        with_cookie += bool(view.cookies[p.url])
        with_js += any(e.element_type == ElementType.JAVASCRIPT.value for e in elements)
    return n, with_3pe, total_domains, with_cookie, with_js


def summary_stats(view: FilteredView) -> SummaryStats:
    """Corpus-level Table-1 figures. The domain average is over pages with >= 1 domain."""
    if not view.pages:
        raise ReportError("no successfully analyzed pages")
    n, with_3pe, total_domains, with_cookie, with_js = _page_counts(view.pages, view)
    elements = [e for p in view.pages for e in view.elements[p.url]]
    cookies = [c for p in view.pages for c in view.cookies[p.url]]
    return SummaryStats(
        n_pages_analyzed=n,
        n_pages_failed=len(view.failed),
        n_pages_timeout=sum(p.load_status == "timeout" for p in view.pages),
        n_with_3pe=with_3pe,
        pct_with_3pe=_pct(with_3pe, n),
        avg_domains_contacted=total_domains / with_3pe if with_3pe else 0.0,
        avg_domains_all_pages=total_domains / n,
        no_qualifying_pages=with_3pe == 0,
        n_with_3p_cookie=with_cookie,
        pct_with_3p_cookie=_pct(with_cookie, n),
        n_with_3p_js=with_js,
        pct_with_3p_js=_pct(with_js, n),
        n_distinct_domains=len({e.registered_domain for e in elements} | {c.registered_domain for c in cookies}),
        n_unique_elements_global=len({e.identity for e in elements}),
        n_unique_elements_per_page=len(elements),
        n_unique_cookies=len({(c.registered_domain, c.name, c.value) for c in cookies}),
    )


@dataclass(frozen=True)
class TldRow:
    tld: str
    n: int
    n_with_3pe: int
    pct_3pe: float
    avg_domains: float
    n_with_cookie: int
    pct_cookie: float
    n_with_js: int
    pct_js: float


def tld_breakdown(view: FilteredView) -> list[TldRow]:
    """Per-TLD rows (final host label; raw IPs under ``ip``), largest group first."""
    groups: dict[str, list[PageRow]] = {}
    for p in view.pages:
        groups.setdefault(p.tld, []).append(p)
    rows = []
    for tld, pages in groups.items():
        n, with_3pe, total_domains, with_cookie, with_js = _page_counts(pages, view)
        rows.append(
            TldRow(
                tld=tld,
                n=n,
                n_with_3pe=with_3pe,
                pct_3pe=_pct(with_3pe, n),
                avg_domains=total_domains / with_3pe if with_3pe else 0.0,
                n_with_cookie=with_cookie,
                pct_cookie=_pct(with_cookie, n),
                n_with_js=with_js,
                pct_js=_pct(with_js, n),
            )
        )
    rows.sort(key=lambda r: (-r.n, r.tld))
    return rows


@dataclass(frozen=True)
class TopElement:
    rank: int
    n_pages: int
    pct_pages: float
    filename: str
    element_path: str
    domain: str
    company: str
    element_type: str
    hosted_for: str | None = None


def top_elements(
    view: FilteredView,
    k: int,
    registry: OwnershipRegistry | None = None,
    element_type: str | None = None,
) -> list[TopElement]:
    """Elements (domain + path, arguments ignored) ranked by share of analyzed pages.

    Ties break on (domain, path). ``element_type`` restricts the ranking,
    e.g. to ``image`` for a top-images table.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n_pages = len(view.pages)
    counts: dict[tuple[str, str], int] = {}
    sample: dict[tuple[str, str], ElementRow] = {}
    for p in view.pages:
        for e in view.elements[p.url]:
            if element_type is not None and e.element_type != element_type:
                continue
            counts[e.identity] = counts.get(e.identity, 0) + 1
            sample.setdefault(e.identity, e)
    ranked = sorted(counts, key=lambda ident: (-counts[ident], ident))[:k]
    out = []
    for rank, ident in enumerate(ranked, start=1):
        e = sample[ident]
        owner = registry.lookup(e.registered_domain) if registry is not None else None
        out.append(
            TopElement(
                rank=rank,
                n_pages=counts[ident],
                pct_pages=_pct(counts[ident], n_pages),
                filename=e.filename,
                element_path=e.element_path,
                domain=e.registered_domain,
                company=owner.ultimate_parent if owner else UNATTRIBUTED,
                element_type=e.element_type,
                hosted_for=owner.hosted_for if owner else None,
            )
        )
    return out


def type_distribution(ranked: Sequence[TopElement]) -> dict[str, float]:
    """Share of each element type within a ranked list (not among all requests)."""
    if not ranked:
        raise ReportError("type distribution needs a non-empty ranking")
    counts: dict[str, int] = {}
    for e in ranked:
        counts[e.element_type] = counts.get(e.element_type, 0) + 1
    order = sorted(counts, key=lambda t: (-counts[t], t))
    return {t: _pct(counts[t], len(ranked)) for t in order}


def surveillance_stats(
    view: FilteredView,
    registry: OwnershipRegistry,
    indicators: Sequence[IndicatorRule] = DEFAULT_INDICATORS,
) -> dict:
    """Pages holding each indicator cookie, over analyzed and over all attempted pages."""
    pages_by_label: dict[str, set[str]] = {rule.label: set() for rule in indicators}
    n_cookies: dict[str, int] = {rule.label: 0 for rule in indicators}
    for p in view.pages:
        for c in view.cookies[p.url]:
            for label in match_indicators(c.name, c.registered_domain, registry, indicators):
                pages_by_label[label].add(p.url)
                n_cookies[label] += 1
    n_analyzed = len(view.pages)
    n_attempted = n_analyzed + len(view.failed)
    out = {}
    for label in sorted(pages_by_label):
        k = len(pages_by_label[label])
        out[label] = {
            "n_pages": k,
            "n_cookies": n_cookies[label],
            "pct_pages_analyzed": _pct(k, n_analyzed),
            "pct_pages_attempted": _pct(k, n_attempted),
        }
    return out


@dataclass
class CensusReport:
    summary: SummaryStats
    tld_rows: list[TldRow]
    top_elements: list[TopElement]
    top_images: list[TopElement]
    type_distribution: dict[str, float]
    reach: list[ReachRow]
    surveillance: dict
    metadata: dict

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "summary": asdict(self.summary),
            "tld_rows": [asdict(r) for r in self.tld_rows],
            "top_elements": [asdict(e) for e in self.top_elements],
            "top_images": [asdict(e) for e in self.top_images],
            "type_distribution": dict(self.type_distribution),
            "reach": [asdict(r) for r in self.reach],
            "surveillance": {
                "pct_pref_pages": self.pct_pref_pages,
                "pct_dclk_id_pages": self.pct_dclk_id_pages,
                "indicators": self.surveillance,
            },
            "metadata": self.metadata,
        }

    @property
    def pct_pref_pages(self) -> float:
        return self.surveillance.get("google_pref", {}).get("pct_pages_analyzed", 0.0)

    @property
    def pct_dclk_id_pages(self) -> float:
        return self.surveillance.get("doubleclick_id", {}).get("pct_pages_analyzed", 0.0)


def build_report(
    store: CrawlStore,
    registry: OwnershipRegistry,
    *,
    top_k: int = 100,
    top_images_k: int = 10,
    indicators: Sequence[IndicatorRule] = DEFAULT_INDICATORS,
    min_pages: int = MIN_PAGES_PER_DOMAIN,
) -> CensusReport:
    """Filter, then compute every statistic. Raises ReportError on an empty store."""
    if not store.pages:
        raise ReportError("store is empty")
    view = filter_single_site_domains(store, min_pages)
    summary = summary_stats(view)
    ranked = top_elements(view, top_k, registry)
    images = top_elements(view, top_images_k, registry, element_type=ElementType.IMAGE.value)
    reach = corporate_reach(view, registry)

    retained = sorted({d for ds in view.page_domains().values() for d in ds})
    attributed = sum(d in registry for d in retained)
    metadata = {
        **store.metadata,
        "registry_version": registry.version,
        "registry_size": len(registry),
        "registry_coverage": {
            "n_domains": len(retained),
            "n_attributed": attributed,
            "pct_attributed": _pct(attributed, len(retained)),
        },
        "filter": {
            "single_site_filter": True,
            "min_pages_per_domain": min_pages,
            "n_excluded_domains": len(view.excluded_domains),
            "excluded_domains": list(view.excluded_domains),
            "averages_computed": "after filter",
        },
        "top_k": top_k,
        "top_images_k": top_images_k,
        "capture_timeout_mode": TIMEOUT_MODE,
        "indicators": [asdict(rule) for rule in indicators],
        "denominator": "successfully analyzed pages (ok or timeout); failed pages excluded",
    }
    return CensusReport(
        summary=summary,
        tld_rows=tld_breakdown(view),
        top_elements=ranked,
        top_images=images,
        type_distribution=type_distribution(ranked) if ranked else {},
        reach=reach,
        surveillance=surveillance_stats(view, registry, indicators),
        metadata=metadata,
    )


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _table(headers: list[str], rows: Iterable[list[str]]) -> list[str]:
    rows = [list(map(str, r)) for r in rows]
    widths = [max([len(h)] + [len(r[i]) for r in rows]) for i, h in enumerate(headers)]
    line = "+" + "+".join("-" * (w + 2) for w in widths) + "+"
    out = [line, "| " + " | ".join(h.ljust(w) for h, w in zip(headers, widths)) + " |", line]
    out += ["| " + " | ".join(c.ljust(w) for c, w in zip(r, widths)) + " |" for r in rows]
    out.append(line)
    return out


def _render_text(d: dict) -> str:
    s = d["summary"]
    meta = d["metadata"]
    lines = ["Findings Summary", ""]
    t1 = [["-", "*", s["n_pages_analyzed"], _fmt(s["pct_with_3pe"]), _fmt(s["avg_domains_contacted"]),
           _fmt(s["pct_with_3p_cookie"]), _fmt(s["pct_with_3p_js"])]]
    t1 += [[i, r["tld"], r["n"], _fmt(r["pct_3pe"]), _fmt(r["avg_domains"]), _fmt(r["pct_cookie"]), _fmt(r["pct_js"])]
           for i, r in enumerate(d["tld_rows"], start=1)]
    lines += _table(["Rank", "TLD", "N", "% W/3PE", "Ave. Domains Contacted", "% W/Cookie", "% W/JS"], t1)
    lines.append(
        f"Pages failed: {s['n_pages_failed']}  timed out (kept): {s['n_pages_timeout']}  "
        f"no qualifying pages: {'yes' if s['no_qualifying_pages'] else 'no'}  "
        f"unconditional avg domains: {_fmt(s['avg_domains_all_pages'])}"
    )
    lines.append(
        f"Distinct domains: {s['n_distinct_domains']}  unique elements (global): {s['n_unique_elements_global']}  "
        f"unique elements (per page): {s['n_unique_elements_per_page']}  unique cookies: {s['n_unique_cookies']}"
    )

    def company(e):
        return f"{e['company']}/{e['hosted_for']}" if e.get("hosted_for") else e["company"]

    lines += ["", "Top Image Characteristics", ""]
    lines += _table(["Rank", "% Sites", "File Name", "Domain", "Company"],
                    [[e["rank"], _fmt(e["pct_pages"]) + "%", e["filename"], e["domain"], company(e)]
                     for e in d["top_images"]])
    lines += ["", f"Top {meta['top_k']} Elements", ""]
    lines += _table(["Rank", "% Sites", "File Name", "Domain", "Company", "Type"],
                    [[e["rank"], _fmt(e["pct_pages"]) + "%", e["filename"], e["domain"], company(e), e["element_type"]]
                     for e in d["top_elements"]])
    lines += ["", "Element Types (top elements)", ""]
    types = sorted(d["type_distribution"].items(), key=lambda kv: (-kv[1], kv[0]))
    lines += _table(["Type", "%"], [[t, _fmt(v)] for t, v in types])
    lines += ["", "Corporate Reach", ""]
    lines += _table(["Company", "Pages", "% Sites"], [[r["company"], r["n_pages"], _fmt(r["pct_pages"])]
                                                     for r in d["reach"]])
    lines += ["", "Surveillance Cookie Indicators", ""]
    lines += _table(["Indicator", "Pages", "% Analyzed", "% Attempted"],
                    [[k, v["n_pages"], _fmt(v["pct_pages_analyzed"]), _fmt(v["pct_pages_attempted"])]
                     for k, v in sorted(d["surveillance"]["indicators"].items())])
    cov = meta["registry_coverage"]
    flt = meta["filter"]
    lines += [
        "",
        f"PSL version: {meta['psl_version']}",
        f"Registry version: {meta['registry_version']} ({meta['registry_size']} domains; "
        f"{cov['n_attributed']}/{cov['n_domains']} retained domains attributed)",
        f"Single-site filter: min {flt['min_pages_per_domain']} pages per domain, "
        f"{flt['n_excluded_domains']} domains excluded",
        f"Run timestamp: {meta['run_timestamp']}",
        f"Report schema: {d['schema_version']}",
    ]
    return "\n".join(lines) + "\n"


def render_report(report: CensusReport | dict, format: str = "json") -> str:
    """Render as stable JSON or as Table-1/Table-2 style text. Both read one dict."""
    d = report.to_dict() if isinstance(report, CensusReport) else report
    if format == "json":
        return json.dumps(d, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if format == "text":
        return _render_text(d)
    raise ValueError(f"unknown report format {format!r}")
