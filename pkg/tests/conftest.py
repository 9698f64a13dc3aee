import re
import sys
from collections import defaultdict
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA = defaultdict(list)


def pytest_runtest_logreport(report):
    match = re.search(r"test_acceptance\.py::test_criterion_(\d+)_", report.nodeid)
    if match and (report.when == "call" or report.outcome != "passed"):
        _CRITERIA[int(match.group(1))].append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        failed = [name for name, outcome in _CRITERIA[k] if outcome != "passed"]
        status = "FAIL" if failed else "PASS"
        detail = f" (failing: {', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"criterion {k}: {status}{detail}")
