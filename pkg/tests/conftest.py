import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # surface the acceptance pass/fail lines even though test stdout is
    # captured; only populated when test_acceptance ran
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None) if mod else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
