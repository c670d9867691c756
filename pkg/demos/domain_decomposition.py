"""
Splitting request URLs into domains and elements
================================================

Every request a page makes is reduced to a registered domain (public suffix
plus one label) and an element path. Two requests from the same page are
first-party to each other when those registered domains match.
"""

from tpcensus import default_rules, is_third_party, parse_request_url, public_suffix, registered_domain
from tpcensus.elements import page_domain

rules = default_rules()
print(rules)

# %%
# The worked example: a tracking pixel on a subdomain.

e = parse_request_url("http://sub.example.com/tracking_pixel.png?id=8675309", rules)
print(e.registered_domain, e.element_path, e.filename, e.args, e.extension, e.element_type.value)

# %%
# Multi-label suffixes matter. A naive "last two labels" rule would lump
# every .co.uk site into one domain.

for host in ["www.bbc.co.uk", "news.bbc.co.uk", "a.b.city.kawasaki.jp", "foo.appspot.com", "192.0.2.7"]:
    print(f"{host:24} suffix={public_suffix(host, rules):16} domain={registered_domain(host, rules)}")

# %%
# First party versus third party, relative to the page being visited.

page = page_domain("http://example.com/", rules)
for url in ["http://images.example.com/header.png", "http://www.google-analytics.com/ga.js"]:
    other = parse_request_url(url, rules).registered_domain
    print(url, "->", "third-party" if is_third_party(page, other) else "first-party")
