import pytest

from tapelab.core import RngStream
from tapelab.sokoban import parse


@pytest.fixture
def corridor():
    # player, box, goal in an open row: solved by one push R
    return parse(
        """
#####
#@$G#
#####
"""
    )


@pytest.fixture
def room():
    return parse(
        """
#######
#.....#
#.@...#
#..$..#
#...G.#
#.....#
#######
"""
    )


@pytest.fixture
def cornered():
    # box wedged in a non-goal corner
    return parse(
        """
#####
#$.G#
#.@.#
#####
"""
    )


@pytest.fixture
def rng():
    return RngStream(12345, "test")


def pytest_terminal_summary(terminalreporter):
    from verdicts import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(LINES):
            terminalreporter.write_line(LINES[n])
