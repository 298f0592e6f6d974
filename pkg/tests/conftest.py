import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# acceptance name -> (status, detail lines), in the order tests ran
_ACCEPTANCE: dict[str, tuple[str, list[str]]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    name = mark.args[0]
    status, details = _ACCEPTANCE.get(name, ("PASS", []))
    if rep.failed:
        status = "FAIL"
    elif rep.skipped and status == "PASS":
        status = "SKIP"
    details = details + [v for k, v in item.user_properties if k == "detail"]
    _ACCEPTANCE[name] = (status, details)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance")
    for name, (status, details) in _ACCEPTANCE.items():
        line = f"{status} {name}"
        if details:
            line += ": " + "; ".join(details)
        terminalreporter.write_line(line)
