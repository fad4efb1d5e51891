import pytest

# filled by test_acceptance: (criterion, passed, detail)
ACCEPTANCE = []


@pytest.fixture
def criterion(capsys):
    """Record a pass/fail line for one acceptance criterion, then assert it."""

    def report(n, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}"
        ACCEPTANCE.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
