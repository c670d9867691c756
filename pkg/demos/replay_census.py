"""
A census from recorded HAR files
================================

No browser needed: a handful of hand-built HAR archives stand in for a
crawl. The same pipeline runs on real exports from browser devtools.

Run with ``python3 demos/replay_census.py``.
"""

import json
import tempfile
from pathlib import Path

from tpcensus.cli import main

SITES = {
    "news-daily.com": ["http://www.google-analytics.com/ga.js", "http://www.google.com/jsapi", "http://pagead2.googlesyndication.com/show_ads.js",
                       "http://static.news-daily.com/logo.png"],
    "shopper.co.uk": ["http://www.google-analytics.com/ga.js", "http://www.google.com/jsapi", "http://connect.facebook.net/en_US/all.js",
                      "http://ad.doubleclick.net/pixel.gif"],
    "recipes.org": ["http://ad.doubleclick.net/pixel.gif", "http://connect.facebook.net/en_US/all.js"],
    "plain-site.net": [],
    "blogger-x.de": ["http://www.google-analytics.com/ga.js", "http://only-here.example/widget.js"],
}
COOKIES = {"ad.doubleclick.net": "id=22c4d1; Domain=.doubleclick.net", "www.google.com": "PREF=ID=1a2b; Domain=.google.com"}


def entry(url, t, mime):
    host = url.split("/")[2]
    headers = [{"name": "Content-Type", "value": mime}]
    if host in COOKIES:
        headers.append({"name": "Set-Cookie", "value": COOKIES[host]})
    return {
        "startedDateTime": f"2014-05-01T00:00:{t:02d}.000Z",
        "request": {"method": "GET", "url": url, "headers": []},
        "response": {"status": 200, "headers": headers, "content": {"mimeType": mime}},
        "pageref": "p",
    }


def har(site, subresources):
    page = f"http://{site}/"
    entries = [entry(page, 0, "text/html")] + [entry(u, i + 1, "application/octet-stream")
                                               for i, u in enumerate(subresources)]
    return {"log": {"version": "1.2", "creator": {"name": "demo", "version": "1"},
                    "pages": [{"id": "p", "title": site, "startedDateTime": "2014-05-01T00:00:00.000Z"}],
                    "entries": entries}}


work = Path(tempfile.mkdtemp(prefix="tpcensus-demo-"))
har_dir = work / "har"
har_dir.mkdir()
for site, subs in SITES.items():
    (har_dir / f"{site}.har").write_text(json.dumps(har(site, subs)))
(work / "seeds.csv").write_text("".join(f"{i},{s}\n" for i, s in enumerate(SITES, 1)) + "9,gone-away.com\n")
store = str(work / "store.jsonl")

# %%
# Seeds first, then a replayed crawl. The last seed has no recording and
# shows up as a failed page, outside every denominator.

main(["ingest-seeds", "--seeds", str(work / "seeds.csv"), "--store", store])
main(["crawl", "--store", store, "--har-dir", str(har_dir), "--timeout", "5"])

# %%
# The report. only-here.example appears on one site and is dropped by the
# single-site filter; static.news-daily.com is first-party and never counted.
# facebook.net is not in the shipped registry, so it shows as unattributed
# and the coverage line at the bottom says so.

main(["report", "--store", store, "--top-k", "5"])
print("workspace:", work)
