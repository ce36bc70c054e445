import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from acceptance_report import LINES as ACCEPTANCE_LINES  # noqa: E402
from nlcoop.conflict import build_conflict_graph  # noqa: E402
from nlcoop.mis import enumerate_all_mis  # noqa: E402
from nlcoop.netmodel import derive_links  # noqa: E402
from nlcoop.scenarios import generate_grid_scenario, toy_scenario  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def toy():
    sc = toy_scenario()
    g = build_conflict_graph(sc, derive_links(sc))
    return sc, g, enumerate_all_mis(g)


@pytest.fixture(scope="session")
def grid():
    return generate_grid_scenario()
