import hashlib
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from functools import cached_property
from typing import Dict, NamedTuple, Optional, Tuple

Position = Tuple[int, int]
Trajectory = Tuple[Position, ...]


class CellKind(IntEnum):
    WALL = 0
    FREE = 1
    START = 2
    GOAL = 3


CELL_SYMBOLS: Dict[str, CellKind] = {
    "#": CellKind.WALL,
    ".": CellKind.FREE,
    "s": CellKind.START,
    "g": CellKind.GOAL,
}


class Action(NamedTuple):
    ax: int
    ay: int


class State(NamedTuple):
    x: int
    y: int
    vx: int
    vy: int

    @property
    def position(self) -> Position:
        return (self.x, self.y)


# Ordre canonique: (ax, ay) lexicographique avec -1 < 0 < 1
ACTIONS: Tuple[Action, ...] = tuple(
    Action(ax, ay) for ax in (-1, 0, 1) for ay in (-1, 0, 1)
)
ACTION_INDEX: Dict[Action, int] = {action: i for i, action in enumerate(ACTIONS)}
IDLE = Action(0, 0)
# The 8 wall-distance directions follow the action order minus (0, 0)
DIRECTIONS: Tuple[Action, ...] = tuple(a for a in ACTIONS if a != IDLE)


class Outcome(str, Enum):
    MOVED = "moved"
    REACHED_GOAL = "goal"
    CRASHED = "crash"


class StepOutcome(NamedTuple):
    kind: Outcome
    next_state: Optional[State]
    applied_velocity: Tuple[int, int]
    trajectory: Trajectory
    noise_applied: bool = False

    @property
    def terminal(self) -> bool:
        return self.kind is not Outcome.MOVED


@dataclass(frozen=True)
class TrackMap:
    """Grille discrétisée; toute case hors de la grille est un mur"""

    width: int
    height: int
    cells: Tuple[Tuple[CellKind, ...], ...]
    map_id: str = "anonymous"
    text: str = field(default="", compare=False, repr=False)

    def cell(self, x: int, y: int) -> CellKind:
        if 0 <= x < self.width and 0 <= y < self.height:
            return self.cells[y][x]
        return CellKind.WALL

    def is_blocked(self, x: int, y: int) -> bool:
        return self.cell(x, y) is CellKind.WALL

    def is_goal(self, x: int, y: int) -> bool:
        return self.cell(x, y) is CellKind.GOAL

    def _cells_of(self, *kinds: CellKind) -> Tuple[Position, ...]:
        # Canonical cell order: smaller y first, then smaller x
        return tuple(
            (x, y)
            for y in range(self.height)
            for x in range(self.width)
            if self.cells[y][x] in kinds
        )

    @cached_property
    def start_cells(self) -> Tuple[Position, ...]:
        return self._cells_of(CellKind.START)

    @cached_property
    def goal_cells(self) -> Tuple[Position, ...]:
        return self._cells_of(CellKind.GOAL)

    @cached_property
    def traversable_cells(self) -> Tuple[Position, ...]:
        return self._cells_of(CellKind.FREE, CellKind.START, CellKind.GOAL)

    @cached_property
    def content_hash(self) -> str:
        rows = ("".join("#.sg"[kind] for kind in row) for row in self.cells)
        return hashlib.sha256("\n".join(rows).encode("utf-8")).hexdigest()

    def __repr__(self) -> str:
        return f"<TrackMap(id={self.map_id}, {self.width}x{self.height})>"
