"""Public Suffix List parsing and registered-domain lookup.

Rules are stored in a reversed-label trie so a lookup walks the host from its
top-level label downward. Precedence follows the published algorithm: an
exception rule wins outright, otherwise the longest matching rule, otherwise
the implicit ``*`` rule (the host's last label).
"""

from __future__ import annotations

import enum
import hashlib
import ipaddress
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

__all__ = [
    "InvalidHost",
    "NoRegisteredDomain",
    "PslParseError",
    "PublicSuffixRule",
    "PublicSuffixRuleSet",
    "RuleKind",
    "default_rules",
    "is_ip_host",
    "load_psl",
    "parse_psl",
    "public_suffix",
    "registered_domain",
]

_PRIVATE_BEGIN = "===BEGIN PRIVATE DOMAINS==="
_VERSION_RE = re.compile(r"^//\s*VERSION:\s*(\S+)")


class PslParseError(ValueError):
    def __init__(self, lineno: int, line: str, reason: str):
        super().__init__(f"line {lineno}: {reason}: {line!r}")
        self.lineno = lineno
        self.line = line


class InvalidHost(ValueError):
    """Host is empty or has empty labels."""


class NoRegisteredDomain(ValueError):
    """Host is itself a public suffix, so no registrable part exists."""

    def __init__(self, host: str):
        super().__init__(f"{host!r} is a public suffix")
        self.host = host


class RuleKind(enum.Enum):
    NORMAL = "normal"
    WILDCARD = "wildcard"
    EXCEPTION = "exception"


@dataclass(frozen=True)
class PublicSuffixRule:
    labels: tuple[str, ...]  # TLD first
    kind: RuleKind = RuleKind.NORMAL

    def __str__(self) -> str:
        text = ".".join(reversed(self.labels))
        return "!" + text if self.kind is RuleKind.EXCEPTION else text


class _Node:
    __slots__ = ("children", "terminal", "exception")

    def __init__(self) -> None:
        self.children: dict[str, _Node] = {}
        self.terminal = False
        self.exception = False


@dataclass
class PublicSuffixRuleSet:
    """Immutable-after-parse collection of rules with a lookup trie."""

    rules: frozenset[PublicSuffixRule]
    version: str = ""
    _root: _Node = field(default_factory=_Node, repr=False, compare=False)

    def __post_init__(self) -> None:
        for rule in self.rules:
            node = self._root
            for label in rule.labels:
                node = node.children.setdefault(label, _Node())
            if rule.kind is RuleKind.EXCEPTION:
                node.exception = True
            else:
                node.terminal = True

    def __len__(self) -> int:
        return len(self.rules)

    def __repr__(self) -> str:
        return f"PublicSuffixRuleSet({len(self.rules)} rules, version={self.version!r})"

    def suffix_length(self, labels: list[str]) -> int:
        """Number of trailing labels of ``labels`` (host order) forming the public suffix."""
        node = self._root
        best = 1
        depth = 0
        for label in reversed(labels):
            depth += 1
            wild = node.children.get("*")
            if wild is not None and wild.terminal:
                best = max(best, depth)
            child = node.children.get(label)
            if child is None:
                break
            if child.exception:
                return depth - 1
            if child.terminal:
                best = max(best, depth)
            node = child
        return best


def _idna_alias(labels: tuple[str, ...]) -> tuple[str, ...] | None:
    if all(label.isascii() for label in labels):
        return None
    out = []
    for label in labels:
        if label.isascii():
            out.append(label)
            continue
        try:
            out.append(label.encode("idna").decode("ascii"))
        except UnicodeError:
            return None
    return tuple(out)


def _parse_rule(line: str, lineno: int) -> PublicSuffixRule:
    if any(ch.isspace() for ch in line):
        raise PslParseError(lineno, line, "embedded whitespace")
    kind = RuleKind.NORMAL
    body = line
    if body.startswith("!"):
        kind = RuleKind.EXCEPTION
        body = body[1:]
    labels = body.lower().split(".")
    if any(label == "" for label in labels):
        raise PslParseError(lineno, line, "empty label")
    stars = [i for i, label in enumerate(labels) if "*" in label]
    if stars:
        if kind is RuleKind.EXCEPTION:
            raise PslParseError(lineno, line, "wildcard in exception rule")
        if stars != [0] or labels[0] != "*":
            raise PslParseError(lineno, line, "wildcard must be the leaf-most label")
        kind = RuleKind.WILDCARD
    elif kind is RuleKind.EXCEPTION and len(labels) < 2:
        raise PslParseError(lineno, line, "exception rule needs at least two labels")
    return PublicSuffixRule(tuple(reversed(labels)), kind)


def parse_psl(text: str, *, include_private: bool = True) -> PublicSuffixRuleSet:
    """Parse public_suffix_list.dat content.

    Rules with non-ASCII labels are also registered under their punycode
    spelling, so ASCII-form hosts match without converting the host.
    """
    rules: set[PublicSuffixRule] = set()
    version = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("//"):
            m = _VERSION_RE.match(line)
            if m and not version:
                version = m.group(1)
            if _PRIVATE_BEGIN in line and not include_private:
                break
            continue
        rule = _parse_rule(line, lineno)
        rules.add(rule)
        alias = _idna_alias(rule.labels)
        if alias is not None:
            rules.add(PublicSuffixRule(alias, rule.kind))
    if not version:
        version = "sha256:" + hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]
    return PublicSuffixRuleSet(frozenset(rules), version)


def load_psl(path: str | Path, *, include_private: bool = True) -> PublicSuffixRuleSet:
    return parse_psl(Path(path).read_text(encoding="utf-8"), include_private=include_private)


_DEFAULT: dict[bool, PublicSuffixRuleSet] = {}


def default_rules(*, include_private: bool = True) -> PublicSuffixRuleSet:
    """The bundled PSL snapshot, parsed once per process."""
    if include_private not in _DEFAULT:
        text = resources.files("tpcensus.data").joinpath("public_suffix_list.dat").read_text(encoding="utf-8")
        _DEFAULT[include_private] = parse_psl(text, include_private=include_private)
    return _DEFAULT[include_private]


def is_ip_host(host: str) -> bool:
    try:
        ipaddress.ip_address(host.strip("[]"))
    except ValueError:
        return False
    return True


def _split_host(host: str) -> list[str]:
    if not host:
        raise InvalidHost("empty host")
    host = host.lower()
    if host.endswith("."):
        host = host[:-1]
    labels = host.split(".")
    if any(label == "" for label in labels):
        raise InvalidHost(f"empty label in {host!r}")
    return labels


def public_suffix(host: str, rules: PublicSuffixRuleSet) -> str:
    """Matched suffix of ``host``; empty for an IP address."""
    if is_ip_host(host):
        return ""
    labels = _split_host(host)
    n = rules.suffix_length(labels)
    return ".".join(labels[-n:]) if n else ""


def registered_domain(host: str, rules: PublicSuffixRuleSet) -> str:
    """Public suffix of ``host`` plus one more label.

    IP-address hosts are returned unchanged. Raises NoRegisteredDomain when
    the host has no label beyond its suffix.
    """
    if is_ip_host(host):
        return host.strip("[]").lower()
    labels = _split_host(host)
    n = rules.suffix_length(labels)
    if len(labels) <= n:
        raise NoRegisteredDomain(".".join(labels))
    return ".".join(labels[-(n + 1):])
