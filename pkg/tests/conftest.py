import os

import pytest

from proxguide.core import RngStream

os.environ.setdefault("PROXGUIDE_OUTPUT_DIR", os.path.join(os.path.dirname(__file__), "..", "results", "tests"))


@pytest.fixture
def rng():
    return RngStream(12345)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
