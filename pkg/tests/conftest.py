import sys
from pathlib import Path

import pytest
from hypothesis import settings

# the reference model lives next to the tests
sys.path.insert(0, str(Path(__file__).parent))

# the first call of each compiled kernel includes JIT time
settings.register_profile("default", deadline=None)
settings.load_profile("default")


class AcceptanceRecorder:
    """Collects sub-check verdicts and renders one line per criterion."""

    def __init__(self):
        self.checks = {}

    def record(self, criterion, name, passed, detail=""):
        self.checks.setdefault(criterion, []).append((name, bool(passed), detail))
        line = f"criterion {criterion} {name}: {'PASS' if passed else 'FAIL'} {detail}"
        print(line)
        return passed

    def lines(self, titles):
        out = []
        for criterion in sorted(self.checks):
            subs = self.checks[criterion]
            ok = all(p for _, p, _ in subs)
            failed = "; ".join(f"{n} ({d})" for n, p, d in subs if not p)
            summary = f"{len(subs)} checks" if ok else f"failed: {failed}"
            out.append(f"[{'PASS' if ok else 'FAIL'}] criterion {criterion} "
                       f"{titles.get(criterion, '')}: {summary}")
        return out


ACCEPTANCE = AcceptanceRecorder()


@pytest.fixture(scope="session")
def acceptance():
    return ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE.checks:
        return
    from test_acceptance import TITLES

    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE.lines(TITLES):
        terminalreporter.write_line(line)
