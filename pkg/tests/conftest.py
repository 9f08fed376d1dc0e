from pathlib import Path

import pytest

GOLDEN_DIR = Path(__file__).parent / "golden"


@pytest.fixture
def golden_lines():
    return (GOLDEN_DIR / "e2e_lines.txt").read_text(encoding="utf-8")


# -- acceptance summary -------------------------------------------------------

_criteria = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    name = report.nodeid.split("::test_criterion_", 1)[1]
    if report.when == "call" or report.failed:
        previous = _criteria.get(name, "PASS")
        _criteria[name] = "FAIL" if report.failed or previous == "FAIL" else "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_criteria, key=lambda n: int(n.split("_", 1)[0])):
        number, _, label = name.partition("_")
        terminalreporter.write_line("%s criterion %s: %s" % (_criteria[name], number, label.replace("_", " ")))
