import pytest

from raylab.level import parse_text_level
from raylab.sim import SimConstants, make_world

DT = 1.0 / 60.0

# Open 8x6 room, spawn in a corner.
ROOM = (
    "********\n"
    "*P     *\n"
    "*      *\n"
    "*      *\n"
    "*      *\n"
    "********\n"
)

# Straight corridor with a door midway.
DOOR_HALL = (
    "***********\n"
    "*P   H    *\n"
    "***********\n"
)

# Runway, launch pad at col 6, a two-cell pit, then landing floor.
PAD_RUN = (
    "************\n"
    "*P    JXX  *\n"
    "************\n"
)

# Isolated pit next to the spawn.
PIT_ROOM = (
    "*****\n"
    "*P  *\n"
    "*X  *\n"
    "*   *\n"
    "*****\n"
)


@pytest.fixture
def consts():
    return SimConstants()


def world_from(text, seed=0):
    return make_world(parse_text_level(text), seed=seed)


@pytest.fixture
def room_world():
    return world_from(ROOM)
