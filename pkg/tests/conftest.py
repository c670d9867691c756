import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from corpus import generate_corpus  # noqa: E402

from tpcensus import default_rules  # noqa: E402
from tpcensus.ownership import parse_ownership_csv  # noqa: E402

DATA = Path(__file__).parent / "data"
SHIPPED_REGISTRY = Path(__file__).resolve().parents[1] / "src" / "tpcensus" / "data" / "ownership.csv"


@pytest.fixture(scope="session")
def rules():
    return default_rules()


@pytest.fixture(scope="session")
def registry():
    """The shipped registry plus google.de, which the fixtures rely on."""
    text = SHIPPED_REGISTRY.read_text(encoding="utf-8") + "google.de,Google,,test fixture\n"
    return parse_ownership_csv(text)


@pytest.fixture(scope="session")
def corpus():
    return generate_corpus()


@pytest.fixture(scope="session")
def corpus_dir(corpus, tmp_path_factory):
    return corpus.write(tmp_path_factory.mktemp("corpus"))


# one PASS/FAIL line per acceptance criterion

_accept: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    marker = getattr(report, "acceptance", None)
    if marker is None:
        return
    number, title = marker
    entry = _accept.setdefault(number, {"title": title, "ok": True, "ran": False})
    if report.outcome == "failed":
        entry["ok"] = False
    elif report.when == "call" and report.outcome == "passed":
        entry["ran"] = True


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        outcome.get_result().acceptance = tuple(marker.args)


def pytest_terminal_summary(terminalreporter):
    if not _accept:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_accept):
        entry = _accept[number]
        status = "FAIL" if not entry["ok"] else "PASS" if entry["ran"] else "SKIP"
        terminalreporter.write_line(f"ACCEPT {number:2d} {status}  {entry['title']}")
