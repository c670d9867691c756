"""Acceptance criteria 1-10, one marked test (or group) per criterion.

The terminal summary prints one ``ACCEPT n PASS|FAIL`` line per criterion.
"""

import json
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracle import recount
from test_psl import derived_vectors, lookup

from tpcensus import (
    CookieRecord,
    CrawlStore,
    LoadStatus,
    PageLoadResult,
    ReplayDriver,
    RequestRecord,
    build_report,
    capture_corpus,
    export_store,
    filter_seed_list,
    filter_single_site_domains,
    flag_surveillance_cookies,
    import_store,
    ingest_har,
    is_third_party,
    parse_request_url,
    read_seed_file,
    render_report,
)
from tpcensus.elements import page_domain
from tpcensus.seeds import normalize_url

acceptance = pytest.mark.acceptance


def crawl(corpus_dir, rules, pool_size=1):
    seeds = [s for s in filter_seed_list(*read_seed_file(corpus_dir / "seeds.txt")) if s.accepted]
    driver = ReplayDriver(corpus_dir)
    driver.check()
    store = CrawlStore()
    capture_corpus(seeds, driver, pool_size=pool_size, timeout=5,
                   on_result=lambda r: store.put_page_result(r, rules))
    return store


@acceptance(1, "worked example decomposition, exact, < 1 ms")
def test_c1_worked_example(rules):
    url = "http://sub.example.com/tracking_pixel.png?id=8675309"
    parse_request_url(url, rules)  # warm up
    t0 = time.perf_counter()
    e = parse_request_url(url, rules)
    elapsed = time.perf_counter() - t0
    assert (e.registered_domain, e.filename, e.args, e.extension) == (
        "example.com", "tracking_pixel.png", "?id=8675309", "png")
    assert elapsed < 1e-3


@acceptance(2, "PSL conformance, >= 100 vectors, < 1 s")
def test_c2_psl_vectors(rules):
    vectors = derived_vectors()
    assert len(vectors) >= 100
    assert ("b.test.ck", "b.test.ck") in vectors  # *.ck wildcard
    assert ("www.www.ck", "www.ck") in vectors  # !www.ck exception
    t0 = time.perf_counter()
    wrong = [(h, want, lookup(h, rules)) for h, want in vectors if lookup(h, rules) != want]
    elapsed = time.perf_counter() - t0
    assert wrong == []
    assert elapsed < 1.0


@acceptance(3, "first/third-party examples")
def test_c3_party_rule(rules):
    page = page_domain("http://example.com/", rules)
    assert page == "example.com"
    images = parse_request_url("http://images.example.com/header.png", rules).registered_domain
    ga = parse_request_url("http://www.google-analytics.com/ga.js", rules).registered_domain
    assert not is_third_party(page, images)
    assert is_third_party(page, ga)


@acceptance(4, "oracle equivalence on 50-page corpus, zero tolerance, < 30 s")
def test_c4_oracle_equivalence(corpus, corpus_dir, rules, registry):
    t0 = time.perf_counter()
    store = crawl(corpus_dir, rules)
    report = build_report(store, registry).to_dict()
    elapsed = time.perf_counter() - t0

    reg = {e.domain: (registry.ultimate_parent(e.company), e.hosted_for) for e in registry}
    n_failed = len(store.failed_pages())
    want = recount(list(corpus.hars.values()), n_failed, reg)

    s = report["summary"]
    assert (s["n_pages_analyzed"], s["n_pages_failed"]) == (want["n_analyzed"], want["n_failed"])
    assert n_failed == 3
    for key in ("pct_with_3pe", "avg_domains_contacted", "pct_with_3p_cookie", "pct_with_3p_js"):
        assert s[key] == want[key], key
    got_rows = [{k: r[k] for k in ("tld", "n", "pct_3pe", "avg_domains", "pct_cookie", "pct_js")}
                for r in report["tld_rows"]]
    assert got_rows == want["tld_rows"]
    assert [(e["domain"], e["element_path"], e["n_pages"], e["pct_pages"]) for e in report["top_elements"]] \
        == want["top"]
    assert report["type_distribution"] == want["type_distribution"]
    assert [(r["company"], r["n_pages"], r["pct_pages"]) for r in report["reach"]] == want["reach"]
    assert report["surveillance"]["pct_pref_pages"] == want["pct_pref_pages"]
    assert report["surveillance"]["pct_dclk_id_pages"] == want["pct_dclk_id_pages"]
    assert report["metadata"]["filter"]["excluded_domains"] == want["excluded"]
    assert elapsed < 30


_domains = st.sampled_from(["a.net", "b.net", "c.org", "d.io", "e.co.uk", "f.com", "g.de", "h.jp"])
_page = st.tuples(st.sets(_domains, max_size=4), st.sets(_domains, max_size=2))


def _store(rules, pages, failed):
    store = CrawlStore()
    for i, (reqs, cookie_domains) in enumerate(pages):
        url = f"http://site{i}.example/"
        records = tuple(RequestRecord(u, "GET", None, True, 200, None)
                        for u in [url, *(f"http://{d}/t.js" for d in sorted(reqs))])
        cookies = tuple(CookieRecord("c", "1", d) for d in sorted(cookie_domains))
        store.put_page_result(PageLoadResult(normalize_url(url), url, requests=records, cookies=cookies,
                                             load_status=LoadStatus.OK), rules)
    for i in range(failed):
        url = f"http://down{i}.example/"
        store.put_page_result(PageLoadResult(normalize_url(url), "", load_status=LoadStatus.FAILED,
                                             requests=(RequestRecord(url + "x.js", "GET", None, False, None, None),)),
                              rules)
    return store


@acceptance(5, "single-site filter property over >= 1000 corpora")
@settings(max_examples=1000, deadline=None)
@given(st.lists(_page, max_size=8), st.integers(0, 2))
def test_c5_filter_property(rules, pages, failed):
    view = filter_single_site_domains(_store(rules, pages, failed))
    seen: dict[str, int] = {}
    for p in view.pages:
        domains = {e.registered_domain for e in view.elements[p.url]}
        domains |= {c.registered_domain for c in view.cookies[p.url]}
        for d in domains:
            seen[d] = seen.get(d, 0) + 1
    assert all(n >= 2 for n in seen.values())
    again = filter_single_site_domains(view)
    assert again.elements == view.elements and again.cookies == view.cookies
    assert again.excluded_domains == view.excluded_domains


@acceptance(6, "surveillance cookies: exactly 3 flags")
def test_c6_three_flags(rules, registry):
    def page(url, name, domain):
        return PageLoadResult(normalize_url(url), url,
                              requests=(RequestRecord(url, "GET", None, True, 200, "text/html"),),
                              cookies=(CookieRecord(name, "v", domain),), load_status=LoadStatus.OK)

    flags = flag_surveillance_cookies([
        page("http://a.example/", "PREF", "google.com"),
        page("http://b.example/", "PREF", "google.de"),
        page("http://c.example/", "id", "doubleclick.net"),
        page("http://d.example/", "PREF", "unowned.example"),
    ], registry, rules)
    assert sorted((f.cookie_domain, f.indicator) for f in flags) == [
        ("doubleclick.net", "doubleclick_id"), ("google.com", "google_pref"), ("google.de", "google_pref")]


@acceptance(7, "pool sizes 1/4/16 give byte-identical stores and reports")
def test_c7_determinism(corpus_dir, rules, registry):
    outputs = set()
    for size in (1, 4, 16):
        store = crawl(corpus_dir, rules, pool_size=size)
        report = build_report(store, registry)
        outputs.add((store.dumps(), render_report(report, "json"), render_report(report, "text")))
    assert len(outputs) == 1


@acceptance(8, "export -> import -> report is byte-identical")
def test_c8_round_trip(corpus_dir, rules, registry, tmp_path):
    store = crawl(corpus_dir, rules)
    before = build_report(store, registry)
    back = import_store(export_store(store, tmp_path / "store.jsonl"))
    after = build_report(back, registry)
    assert render_report(after, "json") == render_report(before, "json")
    assert render_report(after, "text") == render_report(before, "text")


@acceptance(9, "text report renders Table 1 and Table 2 columns from fixtures")
def test_c9_table_shape(corpus_dir, rules, registry):
    text = render_report(build_report(crawl(corpus_dir, rules), registry), "text")
    lines = text.splitlines()

    def header_with(*cols):
        return [ln for ln in lines if all(f" {c} " in ln for c in cols)]

    assert header_with("Rank", "TLD", "N", "% W/3PE", "Ave. Domains Contacted", "% W/Cookie", "% W/JS")
    assert header_with("Rank", "% Sites", "File Name", "Domain", "Company")
    assert "Google" in text and "ga.js" in text


@acceptance(10, "throughput: >= 10,000 replayed pages in < 10 min")
def test_c10_throughput(rules, registry):
    from corpus import generate_corpus

    big = generate_corpus(seed=7, n_pages=10_000)
    t0 = time.perf_counter()
    results = [r for doc in big.hars.values() for r in ingest_har(doc)]
    seeds = [r.seed for r in results]
    driver = ReplayDriver(results=results)
    store = CrawlStore()
    done = capture_corpus(seeds, driver, pool_size=4, timeout=5,
                          on_result=lambda r: store.put_page_result(r, rules))
    report = build_report(store, registry)
    elapsed = time.perf_counter() - t0
    print(f"\nthroughput: {len(done)} pages in {elapsed:.1f} s ({len(done) / elapsed * 3600:,.0f} pages/hour)")
    assert len(done) >= 10_000 and report.summary.n_pages_analyzed >= 10_000
    assert elapsed < 600
    json.loads(render_report(report, "json"))
