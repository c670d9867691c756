"""
Capturing live pages through a headless browser
===============================================

Start Chromium with a debugging port first, e.g.::

    chromium --headless=new --remote-debugging-port=9222

then run ``python3 demos/live_capture.py [endpoint] [url ...]``. Each page
gets a fresh browser context, so cookies never leak between sites.
"""

import sys

from tpcensus import CrawlStore, build_report, capture_corpus, default_registry, default_rules, render_report
from tpcensus.capture.cdp import CdpDriver
from tpcensus.capture.driver import DriverUnavailable
from tpcensus.seeds import filter_seed_list

endpoint = sys.argv[1] if len(sys.argv) > 1 else "http://127.0.0.1:9222"
urls = sys.argv[2:] or ["http://example.com/", "http://example.org/"]

driver = CdpDriver(endpoint)
try:
    driver.check()
except DriverUnavailable as exc:
    sys.exit(f"no browser at {endpoint} ({exc}); start one with --remote-debugging-port")

# %%
# Capture with a short timeout. A page that keeps loading past it is kept
# as a partial capture and marked "timeout", not thrown away.

rules = default_rules()
store = CrawlStore()
seeds = [s for s in filter_seed_list(urls) if s.accepted]
for r in capture_corpus(seeds, driver, pool_size=2, timeout=15, on_result=lambda r: store.put_page_result(r, rules)):
    print(f"{r.load_status.value:8} {len(r.requests):4} requests  {len(r.cookies):3} cookies  {r.final_url or r.seed.raw}")

# %%
# With only a couple of pages the single-site filter drops most domains;
# the numbers get meaningful from a few dozen sites upward.

print(render_report(build_report(store, default_registry(), top_k=10), "text"))
