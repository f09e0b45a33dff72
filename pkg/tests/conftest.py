import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

# acceptance verdict lines, echoed in the terminal summary so they survive capture
VERDICTS = []


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(VERDICTS, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)
