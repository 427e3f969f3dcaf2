"""Shared pytest wiring: collects the acceptance-gate verdict lines and
prints them after the test summary, where output capture cannot hide them."""

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
