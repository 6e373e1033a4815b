"""Collects acceptance outcomes and prints one line per criterion."""

import pytest

_RESULTS: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.fixture
def note(request):
    """Attach a short measured detail (timings, counts) to the criterion line."""
    marker = request.node.get_closest_marker("criterion")
    details = []
    if marker is not None:
        _RESULTS.setdefault(marker.args[0], {"title": marker.args[1], "ok": True, "details": details})
        details = _RESULTS[marker.args[0]]["details"]
    return details.append


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call" and not rep.failed:
        return
    entry = _RESULTS.setdefault(marker.args[0], {"title": marker.args[1], "ok": True, "details": []})
    if rep.failed:
        entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        entry = _RESULTS[number]
        status = "PASS" if entry["ok"] else "FAIL"
        detail = "; ".join(entry["details"])
        terminalreporter.write_line(f"criterion {number}: {status}  {entry['title']}" + (f"  [{detail}]" if detail else ""))
