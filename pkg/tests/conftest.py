import pytest

_RESULTS = []


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion; the outcome is printed in the terminal summary."""
    entry = {"name": request.node.name, "detail": ""}

    def record(label, detail=""):
        entry["name"] = label
        entry["detail"] = detail

    yield record
    entry["passed"] = not getattr(request.node, "_failed", False)
    _RESULTS.append(entry)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and rep.failed:
        item._failed = True


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for r in _RESULTS:
        status = "PASS" if r["passed"] else "FAIL"
        terminalreporter.write_line(f"[{status}] {r['name']}  {r['detail']}")
