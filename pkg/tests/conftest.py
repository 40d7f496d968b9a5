"""Collects acceptance outcomes and prints one verdict line per criterion."""

import pytest

_RESULTS = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    key, title = mark.args
    entry = _RESULTS.setdefault(key, {"title": title, "ok": True, "tests": []})
    if rep.when == "call" or rep.failed or rep.skipped:
        if rep.failed or rep.skipped:
            entry["ok"] = False
        if rep.when == "call" or rep.failed:
            entry["tests"].append(item.name)


def _order(key):
    return (0, int(key)) if str(key).isdigit() else (1, str(key))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_RESULTS, key=_order):
        e = _RESULTS[key]
        verdict = "PASS" if e["ok"] else "FAIL"
        terminalreporter.write_line(f"{verdict}  [{key}] {e['title']}")
