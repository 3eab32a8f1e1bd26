import pytest

CRITERIA = {
    1: "golden examples replay",
    2: "Gr is not faithful",
    3: "functor laws",
    4: "weight conservation",
    5: "pairing invariance",
    6: "cocycle integrity",
    7: "rank oracle",
    8: "tower round-trip",
    9: "frontend round-trip and CLI exit codes",
}

# nodeid -> [criterion, passed, seconds]
_results = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): the acceptance criterion a test covers")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    entry = _results.setdefault(item.nodeid, [marker.args[0], True, 0.0])
    entry[1] = entry[1] and not report.failed and not report.skipped
    entry[2] += report.duration


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    by_criterion = {}
    for n, passed, seconds in _results.values():
        by_criterion.setdefault(n, []).append((passed, seconds))
    terminalreporter.section("acceptance criteria")
    for n in sorted(by_criterion):
        runs = by_criterion[n]
        verdict = "PASS" if all(p for p, _ in runs) else "FAIL"
        seconds = sum(s for _, s in runs)
        terminalreporter.write_line(
            f"criterion {n}: {verdict}  {CRITERIA.get(n, '')} ({len(runs)} tests, {seconds:.1f} s)"
        )
