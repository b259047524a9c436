import pytest

from compactgame import sinlog, sinloglog, zero

# filled by test_acceptance.py, printed after the run
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(params=["zero", "sinlog", "sinloglog"])
def family_profile(request):
    return {"zero": zero, "sinlog": sinlog, "sinloglog": sinloglog}[request.param]()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(':'))):
            terminalreporter.write_line(line)
