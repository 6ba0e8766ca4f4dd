"""Test-suite path setup so sibling helper modules import by name."""

import sys
from pathlib import Path

_HERE = Path(__file__).resolve().parent
if str(_HERE) not in sys.path:
    sys.path.insert(0, str(_HERE))

import accept  # noqa: E402  (needs the path tweak above)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo one line per acceptance criterion after the test summary."""
    if accept.LINES:
        terminalreporter.section("acceptance criteria")
        for line in accept.LINES:
            terminalreporter.write_line(line)
