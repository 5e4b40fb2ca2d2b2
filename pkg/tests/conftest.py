import pathlib
import re
import sys

sys.path.insert(0, str(pathlib.Path(__file__).parent))

_ACCEPTANCE = {}
_PATTERN = re.compile(r"test_criterion_(\d+)")


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid or report.when != "call":
        return
    match = _PATTERN.search(report.nodeid)
    if match:
        _ACCEPTANCE[int(match.group(1))] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    from test_acceptance import CRITERIA

    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        outcome = _ACCEPTANCE[number]
        status = "PASS" if outcome == "passed" else "FAIL"
        name = CRITERIA.get(number, "")
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {name}")
