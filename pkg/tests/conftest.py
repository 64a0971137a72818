"""Replays the acceptance checklist after pytest's capture ends."""

import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "CHECKLIST_LINES", None) if mod else None
    if lines:
        terminalreporter.write_sep("-", "acceptance checklist")
        for line in lines:
            terminalreporter.write_line(line)
