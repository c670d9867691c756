"""Command-line driver: ingest-seeds | crawl | import-har | report | ownership validate.

Exit codes: 0 success, 1 usage error, 2 input error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from collections import Counter
from pathlib import Path

from .capture import (
    DEFAULT_TIMEOUT,
    DEFAULT_USER_AGENT,
    DriverUnavailable,
    HarError,
    ReplayDriver,
    capture_corpus,
    iter_har_files,
    load_har,
)
from .cookies import DEFAULT_INDICATORS, load_indicators
from .ownership import OwnershipError, default_registry, load_ownership_db
from .psl import PslParseError, default_rules, load_psl
from .report import ReportError, build_report, render_report
from .seeds import SeedUrl, filter_seed_list, read_seed_file
from .store import CrawlStore, StoreError

log = logging.getLogger("tpcensus")

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_RUNTIME = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _env(name: str):
    return os.environ.get(name) or None


def seeds_path_for(store_path: str | Path) -> Path:
    """Where ingest-seeds records its audit next to a store file."""
    p = Path(store_path)
    return p.with_name(p.name + ".seeds.jsonl")


def _require_store(args) -> Path:
    if not args.store:
        raise CliError("no store given (use --store or XRAY_STORE)", EXIT_USAGE)
    return Path(args.store)


def _rules(args):
    if not args.psl:
        return default_rules()
    try:
        return load_psl(args.psl)
    except OSError as exc:
        raise CliError(f"cannot read PSL file {args.psl}: {exc.strerror or exc}") from None
    except PslParseError as exc:
        raise CliError(f"{args.psl}: {exc}") from None


def _registry(args):
    if not args.registry:
        return default_registry()
    path = Path(args.registry)
    if not path.is_file():
        raise CliError(f"registry file not found: {path}")
    try:
        return load_ownership_db(path)
    except OwnershipError as exc:
        raise CliError(f"{path}: {exc}") from None


def _open_store(path: Path) -> CrawlStore:
    try:
        return CrawlStore.open(path)
    except StoreError as exc:
        raise CliError(f"{path}: {exc}") from None


def _read_seeds(path) -> list[SeedUrl]:
    try:
        urls, ranks = read_seed_file(path)
    except OSError as exc:
        raise CliError(f"cannot read seed file {path}: {exc.strerror or exc}") from None
    return filter_seed_list(urls, ranks)


def cmd_ingest_seeds(args) -> int:
    store = _require_store(args)
    if not args.seeds:
        raise CliError("--seeds is required", EXIT_USAGE)
    seeds = _read_seeds(args.seeds)
    out = seeds_path_for(store)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("".join(json.dumps(s.to_dict(), sort_keys=True) + "\n" for s in seeds), encoding="utf-8")
    accepted = sum(s.accepted for s in seeds)
    reasons = Counter(s.reject_reason.value for s in seeds if not s.accepted)
    if not seeds:
        log.warning("seed file %s holds no addresses", args.seeds)
    detail = ", ".join(f"{k} {v}" for k, v in sorted(reasons.items()))
    print(f"accepted {accepted}, rejected {len(seeds) - accepted}" + (f" ({detail})" if detail else ""))
    return EXIT_OK


def _accepted_seeds(args, store: Path) -> list[SeedUrl]:
    if args.seeds:
        seeds = _read_seeds(args.seeds)
    else:
        path = seeds_path_for(store)
        if not path.exists():
            raise CliError(f"no seeds: run ingest-seeds first or pass --seeds ({path} missing)")
        seeds = [SeedUrl.from_dict(json.loads(line)) for line in path.read_text(encoding="utf-8").splitlines() if line]
    return [s for s in seeds if s.accepted]


def _driver(args):
    if bool(args.har_dir) == bool(args.driver):
        raise CliError("exactly one of --har-dir or --driver is required", EXIT_USAGE)
    if args.har_dir:
        try:
            driver = ReplayDriver(args.har_dir)
        except (OSError, HarError) as exc:
            raise CliError(f"cannot load HAR directory {args.har_dir}: {exc}") from None
    else:
        from .capture.cdp import CdpDriver

        driver = CdpDriver(args.driver)
    try:
        driver.check()
    except DriverUnavailable as exc:
        raise CliError(f"capture driver unavailable: {exc}", EXIT_RUNTIME) from None
    return driver


def cmd_crawl(args) -> int:
    store_path = _require_store(args)
    if args.timeout < 1 or args.pool < 1:
        raise CliError("--timeout and --pool must be >= 1", EXIT_USAGE)
    seeds = _accepted_seeds(args, store_path)
    driver = _driver(args)
    rules = _rules(args)
    store = _open_store(store_path)

    tally = Counter()

    def ingest(result):
        tally[result.load_status.value] += 1
        store.put_page_result(result, rules)

    capture_corpus(
        seeds, driver, pool_size=args.pool, timeout=float(args.timeout), user_agent=args.user_agent,
        dnt=args.dnt, politeness_delay=args.politeness_delay, on_result=ingest,
    )
    store.save(store_path)
    print(f"ok {tally['ok']}, timeout {tally['timeout']}, failed {tally['failed']}")
    return EXIT_OK


def cmd_import_har(args) -> int:
    store_path = _require_store(args)
    files = [Path(f) for f in args.files]
    if args.har_dir:
        files += iter_har_files(args.har_dir)
    if not files:
        raise CliError("no HAR files given", EXIT_USAGE)
    rules = _rules(args)
    store = _open_store(store_path)
    n_pages = 0
    for path in files:
        try:
            results = load_har(path)
        except (OSError, HarError) as exc:
            raise CliError(str(exc)) from None
        for result in results:
            store.put_page_result(result, rules)
            n_pages += 1
    store.save(store_path)
    print(f"imported {n_pages} pages from {len(files)} files")
    return EXIT_OK


def cmd_report(args) -> int:
    store_path = _require_store(args)
    if not store_path.exists():
        raise CliError(f"store not found: {store_path}")
    registry = _registry(args)
    indicators = DEFAULT_INDICATORS
    if args.indicators:
        try:
            indicators = load_indicators(args.indicators)
        except (OSError, ValueError) as exc:
            raise CliError(f"indicator file {args.indicators}: {exc}") from None
    if args.top_k < 1:
        raise CliError("--top-k must be >= 1", EXIT_USAGE)
    store = _open_store(store_path)
    try:
        report = build_report(store, registry, top_k=args.top_k, indicators=indicators)
    except ReportError as exc:
        raise CliError(f"{store_path}: {exc}") from None
    text = render_report(report, args.format)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_ownership_validate(args) -> int:
    registry = _registry(args)
    companies = {e.company for e in registry}
    parents = {registry.ultimate_parent(c) for c in companies}
    print(f"{len(registry)} domains, {len(companies)} companies, {len(parents)} ultimate parents "
          f"(version {registry.version})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tpcensus", description="Third-party request census over a corpus of web pages.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, *names):
        if "store" in names:
            p.add_argument("--store", default=_env("XRAY_STORE"), help="store file (env XRAY_STORE)")
        if "psl" in names:
            p.add_argument("--psl", default=_env("XRAY_PSL"), help="public_suffix_list.dat (env XRAY_PSL)")
        if "registry" in names:
            p.add_argument("--registry", default=_env("XRAY_REGISTRY"), help="ownership CSV (env XRAY_REGISTRY)")

    p = sub.add_parser("ingest-seeds", help="normalize and deduplicate the seed list")
    common(p, "store")
    p.add_argument("--seeds", required=True)
    p.set_defaults(func=cmd_ingest_seeds)

    p = sub.add_parser("crawl", help="capture every accepted seed")
    common(p, "store", "psl")
    p.add_argument("--seeds", help="seed file (default: the list recorded by ingest-seeds)")
    p.add_argument("--har-dir", help="replay recorded HAR files instead of a live browser")
    p.add_argument("--driver", default=_env("XRAY_DRIVER"), help="DevTools endpoint, e.g. http://127.0.0.1:9222")
    p.add_argument("--timeout", type=int, default=int(DEFAULT_TIMEOUT), help="page load window in seconds")
    p.add_argument("--pool", type=int, default=4, help="concurrent page sessions")
    p.add_argument("--politeness-delay", type=float, default=0.0, help="seconds between loads of the same host")
    p.add_argument("--user-agent", default=DEFAULT_USER_AGENT)
    p.add_argument("--dnt", action="store_true", help="send DNT: 1")
    p.set_defaults(func=cmd_crawl)

    p = sub.add_parser("import-har", help="ingest HAR files directly")
    common(p, "store", "psl")
    p.add_argument("files", nargs="*")
    p.add_argument("--har-dir")
    p.set_defaults(func=cmd_import_har)

    p = sub.add_parser("report", help="compute and render the census report")
    common(p, "store", "registry")
    p.add_argument("--indicators", help="surveillance indicator rules file")
    p.add_argument("--format", choices=("json", "text"), default="text")
    p.add_argument("--top-k", type=int, default=100)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("ownership", help="ownership registry tools")
    osub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    v = osub.add_parser("validate", help="load and check a registry file")
    common(v, "registry")
    v.set_defaults(func=cmd_ownership_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help and usage errors
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"tpcensus: {exc}", file=sys.stderr)
        return exc.code
    except (StoreError, OSError) as exc:
        print(f"tpcensus: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
