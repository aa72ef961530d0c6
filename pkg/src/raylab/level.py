"""Text level format and seeded procedural maze generation.

A level is a rectangular grid of cells.  The human-readable text format
uses one character per cell:

    ``*`` wall          ``P`` spawn point
    `` `` floor         ``G`` goal
    ``H`` door in an east-west wall run (slides horizontally)
    ``I`` door in a north-south wall run
    ``A`` apple pickup  ``M`` melon pickup   ``L`` lemon pickup
    ``J`` launch pad    ``X`` pit

Files use the ``.maze.txt`` extension, UTF-8, LF line endings.  Short
lines are right-padded with wall so ragged hand-edited files still load.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum

from .rng import Rng


class CellKind(Enum):
    WALL = "*"
    FLOOR = " "
    DOOR_EW = "H"
    DOOR_NS = "I"
    SPAWN = "P"
    GOAL = "G"
    PICKUP_APPLE = "A"
    PICKUP_MELON = "M"
    PICKUP_LEMON = "L"
    LAUNCH_PAD = "J"
    PIT = "X"


CHAR_TO_KIND = {k.value: k for k in CellKind}
DOOR_KINDS = (CellKind.DOOR_EW, CellKind.DOOR_NS)
PICKUP_KINDS = (CellKind.PICKUP_APPLE, CellKind.PICKUP_MELON, CellKind.PICKUP_LEMON)


class LevelError(Exception):
    """Base class for level validation failures."""


class EmptyLevel(LevelError):
    pass


class IllegalCharacter(LevelError):
    def __init__(self, row: int, col: int, char: str):
        super().__init__(f"illegal character {char!r} at row {row}, col {col}")
        self.row, self.col, self.char = row, col, char


class NoSpawnPoint(LevelError):
    pass


class UnreachableCell(LevelError):
    def __init__(self, row: int, col: int):
        super().__init__(f"cell at row {row}, col {col} is unreachable from any spawn")
        self.row, self.col = row, col


class UnenclosedBorder(LevelError):
    pass


class UnrepresentableCell(LevelError):
    pass


class BadDimensions(LevelError):
    pass


@dataclass(frozen=True)
class Cell:
    kind: CellKind
    variant: int = 0

    def is_wall(self) -> bool:
        return self.kind is CellKind.WALL

    def is_door(self) -> bool:
        return self.kind in DOOR_KINDS

    def is_traversable(self) -> bool:
        """Walkable for path purposes; doors count (they open on approach)."""
        return self.kind is not CellKind.WALL


@dataclass(eq=False)  # identity hashing; structural comparison via structurally_equal
class LevelGrid:
    width: int
    height: int
    cells: list[Cell]  # row-major, len == width * height
    spawn_points: list[tuple[int, int]] = field(default_factory=list)
    name: str = "unnamed"

    def cell(self, row: int, col: int) -> Cell:
        return self.cells[row * self.width + col]

    def set_cell(self, row: int, col: int, cell: Cell) -> None:
        self.cells[row * self.width + col] = cell

    def in_bounds(self, row: int, col: int) -> bool:
        return 0 <= row < self.height and 0 <= col < self.width

    def iter_cells(self):
        for r in range(self.height):
            for c in range(self.width):
                yield r, c, self.cells[r * self.width + c]

    def find_cells(self, kind: CellKind) -> list[tuple[int, int]]:
        return [(r, c) for r, c, cell in self.iter_cells() if cell.kind is kind]

    def floor_cells(self) -> list[tuple[int, int]]:
        """All traversable cells in scan order."""
        return [(r, c) for r, c, cell in self.iter_cells() if cell.is_traversable()]

    def doors(self) -> list[tuple[int, int]]:
        return [(r, c) for r, c, cell in self.iter_cells() if cell.is_door()]

    def structurally_equal(self, other: "LevelGrid") -> bool:
        return (
            self.width == other.width
            and self.height == other.height
            and [c.kind for c in self.cells] == [c.kind for c in other.cells]
            and self.spawn_points == other.spawn_points
        )


def _variant_for(row: int, col: int) -> int:
    # Stable per-position texture variation; independent of any RNG so
    # parse output is a pure function of the text.
    h = (row * 0x9E3779B1 + col * 0x85EBCA77) & 0xFFFFFFFF
    return (h >> 16) & 0x7


def validate_level(level: LevelGrid) -> None:
    """Check the LevelGrid invariants, raising the first violation found."""
    if level.width < 3 or level.height < 3:
        raise BadDimensions(f"level must be at least 3x3, got {level.width}x{level.height}")
    for r in range(level.height):
        for c in range(level.width):
            if r in (0, level.height - 1) or c in (0, level.width - 1):
                if not level.cell(r, c).is_wall():
                    raise UnenclosedBorder(f"non-wall border cell at row {r}, col {c}")
    if not level.spawn_points:
        raise NoSpawnPoint("level has no spawn point")
    for r, c in level.spawn_points:
        if level.cell(r, c).kind is not CellKind.SPAWN:
            raise NoSpawnPoint(f"spawn list entry ({r},{c}) is not a spawn cell")
    unreachable = _unreachable_cells(level)
    if unreachable:
        r, c = unreachable[0]
        raise UnreachableCell(r, c)


def _unreachable_cells(level: LevelGrid) -> list[tuple[int, int]]:
    seen = set()
    queue = deque(level.spawn_points)
    seen.update(level.spawn_points)
    while queue:
        r, c = queue.popleft()
        for dr, dc in ((-1, 0), (0, 1), (1, 0), (0, -1)):
            nr, nc = r + dr, c + dc
            if (nr, nc) not in seen and level.in_bounds(nr, nc) and level.cell(nr, nc).is_traversable():
                seen.add((nr, nc))
                queue.append((nr, nc))
    return [(r, c) for r, c, cell in level.iter_cells() if cell.is_traversable() and (r, c) not in seen]


def parse_text_level(text: str, name: str = "unnamed") -> LevelGrid:
    """Parse the one-character-per-cell text format into a validated grid."""
    lines = text.split("\n")
    # A single trailing newline yields one empty last element; drop it.
    if lines and lines[-1] == "":
        lines.pop()
    lines = [line.rstrip() for line in lines]
    if not lines or all(line == "" for line in lines):
        raise EmptyLevel("level text is empty")

    height = len(lines)
    width = max(len(line) for line in lines)
    cells: list[Cell] = []
    spawns: list[tuple[int, int]] = []
    for r, line in enumerate(lines):
        for c in range(width):
            ch = line[c] if c < len(line) else "*"  # pad ragged lines with wall
            kind = CHAR_TO_KIND.get(ch)
            if kind is None:
                raise IllegalCharacter(r, c, ch)
            cells.append(Cell(kind, _variant_for(r, c)))
            if kind is CellKind.SPAWN:
                spawns.append((r, c))

    level = LevelGrid(width=width, height=height, cells=cells, spawn_points=spawns, name=name)
    validate_level(level)
    return level


def serialize_text_level(level: LevelGrid) -> str:
    """Inverse of parse: trailing spaces trimmed, final newline included."""
    out_lines = []
    for r in range(level.height):
        chars = []
        for c in range(level.width):
            kind = level.cell(r, c).kind
            if kind.value not in CHAR_TO_KIND:
                raise UnrepresentableCell(str(kind))
            chars.append(kind.value)
        out_lines.append("".join(chars).rstrip())
    return "\n".join(out_lines) + "\n"


class GoalPolicy(Enum):
    FARTHEST_FROM_SPAWN = "farthest_from_spawn"
    UNIFORM_RANDOM_FLOOR = "uniform_random_floor"


@dataclass(frozen=True)
class MazeParams:
    width: int
    height: int
    seed: int
    goal_policy: GoalPolicy = GoalPolicy.FARTHEST_FROM_SPAWN


def bfs_distances(level: LevelGrid, start: tuple[int, int]) -> dict[tuple[int, int], int]:
    """4-connected BFS distance from ``start`` to every traversable cell."""
    dist = {start: 0}
    queue = deque([start])
    while queue:
        r, c = queue.popleft()
        for dr, dc in ((-1, 0), (0, 1), (1, 0), (0, -1)):
            nr, nc = r + dr, c + dc
            if (nr, nc) not in dist and level.in_bounds(nr, nc) and level.cell(nr, nc).is_traversable():
                dist[(nr, nc)] = dist[(r, c)] + 1
                queue.append((nr, nc))
    return dist


def generate_maze(params: MazeParams) -> LevelGrid:
    """Perfect maze on the odd-coordinate lattice via randomized DFS.

    Rooms sit at odd (row, col) coordinates; carving removes the wall cell
    between two adjacent rooms.  The result is a spanning tree of the room
    graph: connected and acyclic.  Output is a pure function of params.
    """
    w, h = params.width, params.height
    if w < 5 or h < 5 or w % 2 == 0 or h % 2 == 0:
        raise BadDimensions(f"maze dimensions must be odd and >= 5, got {w}x{h}")

    rng = Rng(params.seed)
    cells = [Cell(CellKind.WALL, _variant_for(r, c)) for r in range(h) for c in range(w)]
    level = LevelGrid(width=w, height=h, cells=cells, name=f"maze_{w}x{h}_{params.seed}")

    def carve(r, c):
        level.set_cell(r, c, Cell(CellKind.FLOOR, _variant_for(r, c)))

    rooms_w = (w - 1) // 2
    rooms_h = (h - 1) // 2
    start_room = (rng.randrange(rooms_h), rng.randrange(rooms_w))
    to_grid = lambda room: (room[0] * 2 + 1, room[1] * 2 + 1)

    visited = {start_room}
    stack = [start_room]
    carve(*to_grid(start_room))
    while stack:
        room = stack[-1]
        neighbors = []
        for dr, dc in ((-1, 0), (0, 1), (1, 0), (0, -1)):
            nb = (room[0] + dr, room[1] + dc)
            if 0 <= nb[0] < rooms_h and 0 <= nb[1] < rooms_w and nb not in visited:
                neighbors.append(nb)
        if neighbors:
            nb = rng.choice(neighbors)
            gr, gc = to_grid(room)
            nr, nc = to_grid(nb)
            carve((gr + nr) // 2, (gc + nc) // 2)
            carve(nr, nc)
            visited.add(nb)
            stack.append(nb)
        else:
            stack.pop()

    spawn_room = (rng.randrange(rooms_h), rng.randrange(rooms_w))
    sr, sc = to_grid(spawn_room)
    level.set_cell(sr, sc, Cell(CellKind.SPAWN, _variant_for(sr, sc)))
    level.spawn_points = [(sr, sc)]

    if params.goal_policy is GoalPolicy.FARTHEST_FROM_SPAWN:
        dist = bfs_distances(level, (sr, sc))
        far = max(dist.values())
        # Deterministic tie-break: first in scan order.
        gr, gc = min(p for p, d in dist.items() if d == far)
    else:
        floors = [p for p in level.floor_cells() if p != (sr, sc)]
        gr, gc = floors[rng.randrange(len(floors))]
    level.set_cell(gr, gc, Cell(CellKind.GOAL, _variant_for(gr, gc)))

    validate_level(level)
    return level
