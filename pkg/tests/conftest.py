import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

# one PASS/FAIL line per acceptance criterion at the end of the run
CRITERIA: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, 11):
        if n in CRITERIA:
            ok, detail = CRITERIA[n]
            terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        else:
            terminalreporter.write_line(f"NOT RUN criterion {n}")
