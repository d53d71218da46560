"""Shared pytest hooks.

The acceptance tests double as the sign-off checklist, so the terminal
summary repeats one PASS/FAIL line per criterion; the outcome is visible
without digging through the full -v listing.
"""

_acceptance_results = []


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        _acceptance_results.append((name, report.outcome))
    elif report.when == "setup" and report.outcome != "passed":
        # A fixture blow-up never reaches "call"; record it as a failure.
        _acceptance_results.append((name, "failed" if report.failed else report.outcome))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    tags = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, outcome in _acceptance_results:
        terminalreporter.write_line(f"{tags.get(outcome, outcome.upper()):>4}  {name}")
