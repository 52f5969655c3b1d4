import datetime as dt
from pathlib import Path

import pytest

from hwrk.io_ingest import UTC, FaultEvent, FaultLog

FIXTURES = Path(__file__).parent / "fixtures"

_acceptance_results: dict[str, tuple[str, str]] = {}


@pytest.fixture
def write_text(tmp_path):
    def _write(name, text):
        p = tmp_path / name
        p.write_text(text, encoding="utf-8")
        return p

    return _write


def log_from_seconds(seconds):
    origin = dt.datetime(2017, 1, 1, tzinfo=UTC)
    return FaultLog.from_events(FaultEvent(origin + dt.timedelta(seconds=float(s))) for s in seconds)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    cid, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _acceptance_results[cid] = ("PASS" if report.passed else "FAIL", title)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_acceptance_results, key=lambda c: int(c.lstrip("AC"))):
        status, title = _acceptance_results[cid]
        terminalreporter.write_line(f"{cid:>4}  {status}  {title}")
