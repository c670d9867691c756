"""Census of third-party HTTP requests, cookies and scripts across web pages."""

from .capture import (
    CookieRecord,
    LoadStatus,
    PageLoadResult,
    ReplayDriver,
    RequestRecord,
    capture_corpus,
    ingest_har,
    load_har,
    load_page,
)
from .cookies import (
    DEFAULT_INDICATORS,
    IndicatorRule,
    SurveillanceFlag,
    flag_surveillance_cookies,
    load_indicators,
    third_party_cookies,
)
from .elements import ElementType, ParsedElement, classify_extension, is_third_party, parse_request_url
from .ownership import (
    OwnershipRegistry,
    corporate_reach,
    default_registry,
    load_ownership_db,
    resolve_owner,
)
from .psl import (
    NoRegisteredDomain,
    PublicSuffixRuleSet,
    default_rules,
    load_psl,
    parse_psl,
    public_suffix,
    registered_domain,
)
from .report import (
    CensusReport,
    build_report,
    filter_single_site_domains,
    render_report,
    summary_stats,
    tld_breakdown,
    top_elements,
    type_distribution,
)
from .seeds import SeedUrl, filter_seed_list, normalize_url, read_seed_file
from .store import CrawlStore, export_store, import_store

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_INDICATORS",
    "CensusReport",
    "CookieRecord",
    "CrawlStore",
    "ElementType",
    "IndicatorRule",
    "LoadStatus",
    "NoRegisteredDomain",
    "OwnershipRegistry",
    "PageLoadResult",
    "ParsedElement",
    "PublicSuffixRuleSet",
    "ReplayDriver",
    "RequestRecord",
    "SeedUrl",
    "SurveillanceFlag",
    "build_report",
    "capture_corpus",
    "classify_extension",
    "corporate_reach",
    "default_registry",
    "default_rules",
    "export_store",
    "filter_seed_list",
    "filter_single_site_domains",
    "flag_surveillance_cookies",
    "import_store",
    "ingest_har",
    "is_third_party",
    "load_har",
    "load_indicators",
    "load_ownership_db",
    "load_page",
    "load_psl",
    "normalize_url",
    "parse_psl",
    "parse_request_url",
    "public_suffix",
    "read_seed_file",
    "registered_domain",
    "render_report",
    "resolve_owner",
    "summary_stats",
    "third_party_cookies",
    "tld_breakdown",
    "top_elements",
    "type_distribution",
]
