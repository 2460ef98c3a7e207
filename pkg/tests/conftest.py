import pytest

_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion checked by the test")


def _criterion(item):
    mark = item.get_closest_marker("criterion")
    return mark.args[0] if mark else None


def pytest_collection_modifyitems(items):
    for item in items:
        name = _criterion(item)
        if name:
            _outcomes.setdefault(name, [])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    name = _criterion(item)
    if name and (rep.when == "call" or rep.failed or rep.skipped):
        _outcomes[name].append((rep.when, rep.outcome, getattr(item, "criterion_note", "")))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for name, results in _outcomes.items():
        if not results:
            status = "NOT RUN"
        elif any(o == "failed" for _, o, _ in results):
            status = "FAIL"
        elif all(o == "skipped" for _, o, _ in results):
            status = "SKIP"
        else:
            status = "PASS"
        notes = "; ".join(n for _, _, n in results if n)
        terminalreporter.write_line(f"{status:4} {name}" + (f"  [{notes}]" if notes else ""))
