import threading
import time
from datetime import datetime, timezone

import pytest
from fake_cdp import FakeBrowser, Site

from tpcensus.capture import (
    CaptureDriver,
    DriverSession,
    DriverUnavailable,
    FailedEvent,
    HarError,
    LoadEvent,
    LoadStatus,
    PageInfo,
    PageLoadResult,
    PolitenessGate,
    ReplayDriver,
    RequestEvent,
    ResponseEvent,
    capture_corpus,
    ingest_har,
    load_har,
    load_page,
)
from tpcensus.capture.cdp import CdpDriver
from tpcensus.seeds import filter_seed_list, normalize_url

T0 = "2014-05-01T00:00:00.000Z"


def entry(url, status=200, headers=(), pageref="page_1", redirect=""):
    return {"pageref": pageref, "startedDateTime": T0,
            "request": {"method": "GET", "url": url},
            "response": {"status": status, "headers": list(headers),
                         "content": {"mimeType": "text/html"}, "redirectURL": redirect}}


def har(entries, pages=({"id": "page_1", "title": "Home"},)):
    return {"log": {"version": "1.2", "pages": list(pages), "entries": entries}}


# HAR ingestion


def test_har_five_entries_three_hosts():
    doc = har([entry("http://example.com/"), entry("http://example.com/a.js"),
               entry("http://cdn.example.com/b.css"), entry("https://www.google-analytics.com/ga.js"),
               entry("https://www.google-analytics.com/__utm.gif?x=1")])
    [r] = ingest_har(doc)
    assert len(r.requests) == 5
    assert r.load_status is LoadStatus.OK and r.title == "Home"
    assert r.requests[0].url == "http://example.com/" and r.final_url == "http://example.com/"


def test_har_set_cookie_mapping():
    doc = har([entry("http://www.google.com/", headers=[
        {"name": "Set-Cookie", "value": "PREF=abc; domain=.google.com"}])])
    [r] = ingest_har(doc)
    assert [(c.name, c.domain) for c in r.cookies] == [("PREF", "google.com")]


def test_har_newline_joined_cookies_and_jar():
    doc = har([entry("http://a.com/", headers=[{"name": "set-cookie", "value": "x=1\ny=2"}]),
               entry("http://a.com/b", headers=[{"name": "Set-Cookie", "value": "x=3"}])])
    [r] = ingest_har(doc)
    assert {(c.name, c.value) for c in r.cookies} == {("x", "3"), ("y", "2")}


def test_har_zero_entries():
    with pytest.raises(HarError, match="empty"):
        ingest_har(har([]))


def test_har_missing_field_names_index():
    bad = entry("http://a.com/")
    del bad["request"]["method"]
    with pytest.raises(HarError, match="entry 1"):
        ingest_har(har([entry("http://a.com/"), bad]))


def test_har_redirect_chain_and_unanswered():
    doc = har([entry("http://a.com/", status=301, redirect="https://www.a.com/"),
               entry("https://www.a.com/", status=302,
                     headers=[{"name": "Location", "value": "/home"}]),
               entry("https://www.a.com/home"),
               entry("https://t.net/px.gif", status=0)])
    [r] = ingest_har(doc)
    assert r.final_url == "https://www.a.com/home"
    assert r.seed.normalized == "http://a.com/"
    last = r.requests[-1]
    assert not last.received and last.response_status is None


def test_har_multi_page_and_no_pages(tmp_path):
    doc = har([entry("http://a.com/", pageref="p1"), entry("http://b.com/", pageref="p2"),
               entry("http://b.com/x.js", pageref="p2")],
              pages=[{"id": "p1", "title": "A"}, {"id": "p2", "title": "B"}])
    a, b = ingest_har(doc)
    assert (len(a.requests), len(b.requests), b.title) == (1, 2, "B")
    assert len(ingest_har({"log": {"entries": [entry("http://c.com/")]}})) == 1
    p = tmp_path / "bad.har"
    p.write_text("{not json", encoding="utf-8")
    with pytest.raises(HarError, match="bad.har"):
        load_har(p)


# load_page state machine with scripted sessions


class ScriptedSession(DriverSession):
    def __init__(self, events, info=PageInfo(), hang_after=False, cookies=(), fail_info=False):
        self.events = list(events)
        self.info = info
        self.hang_after = hang_after
        self._cookies = list(cookies)
        self.fail_info = fail_info
        self.closed = False

    def navigate(self, url):
        self.url = url

    def next_event(self, timeout):
        if self.events:
            return self.events.pop(0)
        time.sleep(min(timeout, 0.05))
        return None

    def page_info(self, timeout):
        if self.fail_info:
            raise RuntimeError("renderer crashed")
        return self.info

    def cookies(self, timeout):
        return self._cookies

    def close(self):
        self.closed = True


class ScriptedDriver(CaptureDriver):
    def __init__(self, session=None, error=None):
        self.session = session
        self.error = error

    def check(self):
        if self.error:
            raise DriverUnavailable(self.error)

    def open_session(self, **kw):
        if self.error:
            raise DriverUnavailable(self.error)
        return self.session


SEED = normalize_url("http://example.com/")


def doc_events(*extra):
    return [RequestEvent("d", "http://example.com/"), ResponseEvent("d", 200, "text/html"), *extra]


def test_load_ok_static_page():
    s = ScriptedSession(doc_events(LoadEvent()), PageInfo("http://example.com/", "Ex", "desc"))
    r = load_page(SEED, ScriptedDriver(s), timeout=2, settle=0.05)
    assert r.load_status is LoadStatus.OK
    assert [q.url for q in r.requests] == ["http://example.com/"]
    assert (r.title, r.meta_description) == ("Ex", "desc")
    assert s.closed


def test_timeout_keeps_partial():
    s = ScriptedSession(doc_events(RequestEvent("s", "http://t.net/a.js")))
    start = time.monotonic()
    r = load_page(SEED, ScriptedDriver(s), timeout=0.3, grace=0.2)
    assert time.monotonic() - start < 0.3 + 0.2 + 0.1
    assert r.load_status is LoadStatus.TIMEOUT
    assert len(r.requests) == 2 and not r.requests[1].received
    assert "0.3" in r.diagnostic


def test_document_failure():
    s = ScriptedSession([RequestEvent("d", "http://example.com/"), FailedEvent("d", "net::ERR_CONNECTION_REFUSED")])
    r = load_page(SEED, ScriptedDriver(s), timeout=5)
    assert r.load_status is LoadStatus.FAILED and "REFUSED" in r.diagnostic


def test_driver_unavailable_is_failed_result():
    r = load_page(SEED, ScriptedDriver(error="no browser"), timeout=1)
    assert r.load_status is LoadStatus.FAILED and "no browser" in r.diagnostic


def test_post_load_read_failure_marks_failed():
    s = ScriptedSession(doc_events(LoadEvent()), fail_info=True)
    r = load_page(SEED, ScriptedDriver(s), timeout=2, settle=0.05)
    assert r.load_status is LoadStatus.FAILED and "crashed" in r.diagnostic


def test_redirect_hops_recorded():
    events = [RequestEvent("d", "http://example.com/"),
              RequestEvent("d", "https://www.example.com/", redirect_status=301),
              ResponseEvent("d", 200), LoadEvent()]
    r = load_page(SEED, ScriptedDriver(ScriptedSession(events)), timeout=2, settle=0.05)
    assert [(q.url, q.response_status) for q in r.requests] == [
        ("http://example.com/", 301), ("https://www.example.com/", 200)]


def test_invalid_timeout():
    with pytest.raises(ValueError):
        load_page(SEED, ScriptedDriver(ScriptedSession([])), timeout=0)


# replay driver and pool


def test_replay_known_and_unknown(corpus):
    results = [r for doc in corpus.hars.values() for r in ingest_har(doc)]
    driver = ReplayDriver(results=results)
    ok = load_page(normalize_url(corpus.seeds[0]), driver)
    assert ok.load_status is LoadStatus.OK and ok == results[0]
    gone = load_page(normalize_url("http://gone-one.com/"), driver)
    assert gone.load_status is LoadStatus.FAILED
    assert gone.captured_at == driver.replay_time


def test_replay_missing_dir(tmp_path):
    with pytest.raises(DriverUnavailable):
        ReplayDriver(tmp_path / "nope").check()


def test_pool_order_and_serialized_callback(corpus):
    results = [r for doc in corpus.hars.values() for r in ingest_har(doc)]
    driver = ReplayDriver(results=results)
    seeds = filter_seed_list(corpus.seeds)
    seen_threads = set()
    got = []

    def on_result(r):
        seen_threads.add(threading.get_ident())
        got.append(r.page_url)

    out = capture_corpus(seeds, driver, pool_size=8, on_result=on_result)
    assert [r.page_url for r in out] == [s.normalized for s in seeds]
    assert seen_threads == {threading.get_ident()}
    assert sorted(got) == sorted(s.normalized for s in seeds)
    assert sum(r.load_status is LoadStatus.FAILED for r in out) == 3


def test_politeness_gate_spacing():
    clock = [0.0]
    sleeps = []
    gate = PolitenessGate(2.0, clock=lambda: clock[0], sleep=sleeps.append)
    gate.wait("a.com")
    gate.wait("a.com")
    gate.wait("b.com")
    gate.wait("a.com")
    assert sleeps == [2.0, 4.0]


def test_page_result_dict_round_trip(corpus):
    for doc in list(corpus.hars.values())[:5]:
        for r in ingest_har(doc):
            assert PageLoadResult.from_dict(r.to_dict()) == r


# live driver against a fake DevTools endpoint

SITES = [
    Site("http://three.example.com/", ["https://a.net/1.js", "https://b.org/2.js", "https://c.io/3.js"],
         title="Three", meta="three scripts",
         cookies=[{"name": "PREF", "value": "x", "domain": ".google.com", "path": "/", "expires": 1700000000.5}]),
    Site("http://static.example.com/", title="Static"),
    Site("http://hang.example.com/", ["https://slow.net/s.js"], hang=True),
    Site("http://moved.example.com/", redirect_to="https://www.moved.example.com/"),
    Site("http://down.example.com/", unreachable=True),
]


@pytest.fixture(scope="module")
def browser():
    with FakeBrowser(SITES) as fb:
        yield fb


def test_cdp_three_scripts(browser):
    r = load_page(normalize_url("http://three.example.com/"), CdpDriver(browser.endpoint), timeout=5)
    assert r.load_status is LoadStatus.OK
    assert len(r.requests) >= 4
    assert (r.title, r.meta_description) == ("Three", "three scripts")
    [c] = r.cookies
    assert c.domain == "google.com" and c.expiry == datetime.fromtimestamp(1700000000.5, timezone.utc)


def test_cdp_static_page(browser):
    r = load_page(normalize_url("http://static.example.com/"), CdpDriver(browser.endpoint), timeout=5)
    assert [q.url for q in r.requests] == ["http://static.example.com/"]


def test_cdp_redirect(browser):
    r = load_page(normalize_url("http://moved.example.com/"), CdpDriver(browser.endpoint), timeout=5)
    assert r.final_url == "https://www.moved.example.com/"
    assert [q.response_status for q in r.requests] == [301, 200]


def test_cdp_timeout_within_grace(browser):
    start = time.monotonic()
    r = load_page(normalize_url("http://hang.example.com/"), CdpDriver(browser.endpoint), timeout=1, grace=1)
    assert time.monotonic() - start < 1 + 1
    assert r.load_status is LoadStatus.TIMEOUT and len(r.requests) == 2


def test_cdp_unreachable_run_continues(browser):
    seeds = filter_seed_list(["http://three.example.com/", "http://down.example.com/", "http://static.example.com/",
                              "http://moved.example.com/", "http://nowhere.example.com/"])
    out = capture_corpus(seeds, CdpDriver(browser.endpoint), pool_size=3, timeout=5)
    assert [r.load_status.value for r in out] == ["ok", "failed", "ok", "ok", "failed"]


def test_cdp_ua_dnt_and_context_cleanup(browser):
    load_page(normalize_url("http://static.example.com/"), CdpDriver(browser.endpoint), timeout=5,
              user_agent="TestAgent/1", dnt=True)
    assert browser.user_agents[-1] == "TestAgent/1"
    assert browser.extra_headers[-1] == {"DNT": "1"}
    assert browser.open_contexts == set()


def test_cdp_endpoint_down():
    driver = CdpDriver("http://127.0.0.1:9", connect_timeout=0.5)
    with pytest.raises(DriverUnavailable):
        driver.check()
    r = load_page(SEED, driver, timeout=1)
    assert r.load_status is LoadStatus.FAILED
