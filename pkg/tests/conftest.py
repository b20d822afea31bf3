import pytest

ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion check")
    config.stash[ACCEPTANCE] = {}


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None and (report.when == "call" or (report.when == "setup" and report.failed)):
        number, title = mark.args
        detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
        results = item.config.stash[ACCEPTANCE]
        ok = results.get(number, (True,))[0] and report.passed
        results[number] = (ok, title, detail)
    return report


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(ACCEPTANCE, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        ok, title, detail = results[number]
        line = f"{'PASS' if ok else 'FAIL'}  C{number:<2d} {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
