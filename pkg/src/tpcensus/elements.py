"""Request URL decomposition, element typing and the first/third-party test."""

from __future__ import annotations

import enum
from collections.abc import Mapping
from dataclasses import dataclass
from urllib.parse import urlsplit

from .psl import InvalidHost, NoRegisteredDomain, PublicSuffixRuleSet, registered_domain

__all__ = [
    "DEFAULT_EXTENSION_TYPES",
    "ElementType",
    "ParsedElement",
    "UrlParseError",
    "classify_extension",
    "is_third_party",
    "load_extension_map",
    "page_domain",
    "page_host",
    "parse_request_url",
]


class UrlParseError(ValueError):
    pass


class ElementType(str, enum.Enum):
    IMAGE = "image"
    JAVASCRIPT = "javascript"
    CSS = "css"
    FONT = "font"
    JSON = "json"
    DYNAMIC = "dynamic"
    UNKNOWN = "unknown"


def _types(kind: ElementType, *exts: str) -> dict[str, ElementType]:
    return {ext: kind for ext in exts}


DEFAULT_EXTENSION_TYPES: Mapping[str, ElementType] = {
    **_types(ElementType.IMAGE, "png", "gif", "jpg", "jpeg", "webp", "svg", "ico"),
    **_types(ElementType.JAVASCRIPT, "js"),
    **_types(ElementType.CSS, "css"),
    **_types(ElementType.FONT, "woff", "woff2", "ttf", "otf", "eot"),
    **_types(ElementType.JSON, "json"),
    **_types(ElementType.DYNAMIC, "php", "cgi", "pl", "asp", "aspx", "jsp"),
}


def load_extension_map(path) -> dict[str, ElementType]:
    """Read ``extension,type`` lines; entries override the defaults."""
    mapping = dict(DEFAULT_EXTENSION_TYPES)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            ext, sep, kind = (part.strip() for part in line.partition(","))
            if not sep or not ext:
                raise ValueError(f"{path}:{lineno}: expected 'extension,type'")
            mapping[ext.lower()] = ElementType(kind)
    return mapping


def classify_extension(
    extension: str, mapping: Mapping[str, ElementType] = DEFAULT_EXTENSION_TYPES
) -> ElementType:
    return mapping.get(extension, ElementType.UNKNOWN)


@dataclass(frozen=True)
class ParsedElement:
    full_url: str
    registered_domain: str
    element_path: str
    filename: str
    args: str
    extension: str
    element_type: ElementType
    origin: str = ""  # scheme://netloc

    @property
    def identity(self) -> tuple[str, str]:
        """Ranking key: arguments never distinguish two elements."""
        return (self.registered_domain, self.element_path)


def _split_origin(url: str) -> tuple[str, str, str]:
    """Split a fragment-free URL into (origin, path, args) without re-encoding."""
    start = url.index("://") + 3
    end = len(url)
    for sep in "/?":
        pos = url.find(sep, start)
        if pos != -1:
            end = min(end, pos)
    rest = url[end:]
    path, q, query = rest.partition("?")
    return url[:end], path, q + query


def parse_request_url(
    url: str,
    rules: PublicSuffixRuleSet,
    mapping: Mapping[str, ElementType] = DEFAULT_EXTENSION_TYPES,
) -> ParsedElement:
    """Break a request URL into domain, element path, filename, arguments and extension.

    Raises UrlParseError for non-absolute URLs; NoRegisteredDomain propagates
    from the domain lookup when the host is a bare public suffix.
    """
    url = url.split("#", 1)[0]
    try:
        parts = urlsplit(url)
        host = parts.hostname
    except ValueError as exc:
        raise UrlParseError(f"cannot parse {url!r}: {exc}") from None
    if not parts.scheme or "://" not in url or not host:
        raise UrlParseError(f"not an absolute URL: {url!r}")

    origin, path, args = _split_origin(url)
    domain = registered_domain(host, rules)
    filename = path.rsplit("/", 1)[-1]
    extension = filename.rsplit(".", 1)[1].lower() if "." in filename[1:] else ""
    return ParsedElement(
        full_url=url,
        registered_domain=domain,
        element_path=path,
        filename=filename,
        args=args,
        extension=extension,
        element_type=classify_extension(extension, mapping),
        origin=origin,
    )


def page_host(url: str) -> str:
    host = urlsplit(url).hostname or ""
    return host.rstrip(".")


def page_domain(url: str, rules: PublicSuffixRuleSet) -> str:
    """Registered domain of a page address; a bare-suffix or empty host stands for itself."""
    host = page_host(url)
    try:
        return registered_domain(host, rules)
    except (NoRegisteredDomain, InvalidHost):
        return host


def is_third_party(page_domain: str, request_domain: str) -> bool:
    return page_domain != request_domain
