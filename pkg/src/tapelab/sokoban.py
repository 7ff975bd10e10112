"""Deterministic Sokoban with y-up coordinates, plus a rejection-sampling instance generator.

Cells are ``(x, y)`` pairs, 0-based, with ``U`` increasing y. The perimeter is always
walled. Blocked moves and blocked pushes leave the state untouched but still count as
an action taken.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Iterable

from .core import Budget, BudgetViolation, RngStream, StepOutcome, StepStatus, UNIT_STEP, charge

Cell = tuple[int, int]


class Action(str, Enum):
    U = "U"
    D = "D"
    L = "L"
    R = "R"

    @property
    def delta(self) -> Cell:
        return _DELTAS[self]

    @property
    def opposite(self) -> Action:
        return _OPPOSITE[self]

    def __str__(self) -> str:
        return self.value


_DELTAS = {Action.U: (0, 1), Action.D: (0, -1), Action.L: (-1, 0), Action.R: (1, 0)}
_OPPOSITE = {Action.U: Action.D, Action.D: Action.U, Action.L: Action.R, Action.R: Action.L}

# Fixed global order; also the oracle's tie-break order.
ACTIONS: tuple[Action, ...] = (Action.U, Action.D, Action.L, Action.R)


class InvalidState(ValueError):
    pass


class GenerationExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class SokobanState:
    walls: frozenset[Cell]
    player: Cell
    boxes: tuple[Cell, ...]
    goals: frozenset[Cell]
    width: int
    height: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "walls", frozenset(tuple(c) for c in self.walls))
        object.__setattr__(self, "goals", frozenset(tuple(c) for c in self.goals))
        object.__setattr__(self, "player", tuple(self.player))
        object.__setattr__(self, "boxes", tuple(sorted(tuple(b) for b in self.boxes)))
        self.validate()

    def validate(self) -> None:
        if self.player in self.walls:
            raise InvalidState(f"player {self.player} inside a wall")
        if len(set(self.boxes)) != len(self.boxes):
            raise InvalidState("two boxes share a cell")
        if any(b in self.walls for b in self.boxes):
            raise InvalidState("box inside a wall")
        if self.player in self.boxes:
            raise InvalidState("player and box share a cell")
        if len(self.boxes) != len(self.goals):
            raise InvalidState(f"{len(self.boxes)} boxes but {len(self.goals)} goals")
        if any(g in self.walls for g in self.goals):
            raise InvalidState("goal inside a wall")
        for x in range(self.width):
            for y in (0, self.height - 1):
                if (x, y) not in self.walls:
                    raise InvalidState("perimeter must be fully walled")
        for y in range(self.height):
            for x in (0, self.width - 1):
                if (x, y) not in self.walls:
                    raise InvalidState("perimeter must be fully walled")

    def _moved(self, player: Cell, boxes: tuple[Cell, ...]) -> SokobanState:
        # skips validation: step() only produces legal configurations
        new = object.__new__(SokobanState)
        object.__setattr__(new, "walls", self.walls)
        object.__setattr__(new, "player", player)
        object.__setattr__(new, "boxes", boxes)
        object.__setattr__(new, "goals", self.goals)
        object.__setattr__(new, "width", self.width)
        object.__setattr__(new, "height", self.height)
        return new

    @property
    def key(self) -> tuple[Cell, tuple[Cell, ...]]:
        """Canonical dynamic part; walls, goals and dims are constant within an instance."""
        return (self.player, self.boxes)

    @property
    def level(self) -> tuple[frozenset[Cell], frozenset[Cell], int, int]:
        return (self.walls, self.goals, self.width, self.height)

    @property
    def state_id(self) -> str:
        boxes = ";".join(f"{x},{y}" for x, y in self.boxes)
        return f"p={self.player[0]},{self.player[1]}|b={boxes}"

    def with_dynamic(self, player: Cell, boxes: Iterable[Cell]) -> SokobanState:
        return SokobanState(self.walls, player, tuple(boxes), self.goals, self.width, self.height)

    def to_dict(self) -> dict[str, Any]:
        return {
            "walls": sorted(list(c) for c in self.walls),
            "player": list(self.player),
            "boxes": [list(b) for b in self.boxes],
            "goals": sorted(list(g) for g in self.goals),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> SokobanState:
        walls = [tuple(c) for c in d["walls"]]
        width = d.get("width", max(x for x, _ in walls) + 1)
        height = d.get("height", max(y for _, y in walls) + 1)
        return cls(
            walls=frozenset(walls),
            player=tuple(d["player"]),
            boxes=tuple(tuple(b) for b in d["boxes"]),
            goals=frozenset(tuple(g) for g in d["goals"]),
            width=width,
            height=height,
        )


def step(state: SokobanState, action: Action) -> tuple[SokobanState, bool, bool]:
    """Apply one action. Returns ``(next_state, moved, pushed)``."""
    dx, dy = _DELTAS[action]
    px, py = state.player
    dest = (px + dx, py + dy)
    if dest in state.walls:
        return state, False, False
    boxes = state.boxes
    if dest in boxes:
        beyond = (dest[0] + dx, dest[1] + dy)
        if beyond in state.walls or beyond in boxes:
            return state, False, False
        new_boxes = tuple(sorted(beyond if b == dest else b for b in boxes))
        return state._moved(dest, new_boxes), True, True
    return state._moved(dest, boxes), True, False


def is_solved(state: SokobanState) -> bool:
    goals = state.goals
    return all(b in goals for b in state.boxes)


def apply_actions(state: SokobanState, actions: Iterable[Action]) -> SokobanState:
    for a in actions:
        state = step(state, Action(a))[0]
    return state


class SokobanEnv:
    """Stateful episode wrapper: every action, blocked or not, costs one budget step."""

    def __init__(self, state: SokobanState, budget: Budget):
        self.state = state
        self.budget = budget

    def act(self, action: Action) -> StepOutcome:
        # raises BudgetViolation before touching the state
        self.budget = charge(self.budget, UNIT_STEP)
        self.state, moved, _ = step(self.state, action)
        return StepOutcome(StepStatus.SUCCESS if moved else StepStatus.FAILURE, self.budget)

    @property
    def solved(self) -> bool:
        return is_solved(self.state)


@dataclass(frozen=True)
class SokobanInstance:
    initial: SokobanState
    optimal_length: int
    budget: Budget

    @property
    def slack(self) -> int:
        return self.budget.steps - self.optimal_length

    def to_dict(self) -> dict[str, Any]:
        d = self.initial.to_dict()
        d["optimal_length"] = self.optimal_length
        d["budget"] = self.budget.to_list()
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> SokobanInstance:
        return cls(SokobanState.from_dict(d), int(d["optimal_length"]), Budget(tuple(d["budget"])))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> SokobanInstance:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def with_slack(self, slack: int) -> SokobanInstance:
        return SokobanInstance(self.initial, self.optimal_length, Budget((self.optimal_length + slack,)))


def render(state: SokobanState) -> str:
    """ASCII grid, top row first: # wall, @ player, $ box, G goal, * box on goal, + player on goal."""
    boxes = set(state.boxes)
    rows = []
    for y in range(state.height - 1, -1, -1):
        row = []
        for x in range(state.width):
            c = (x, y)
            if c in state.walls:
                row.append("#")
            elif c in boxes:
                row.append("*" if c in state.goals else "$")
            elif c == state.player:
                row.append("+" if c in state.goals else "@")
            elif c in state.goals:
                row.append("G")
            else:
                row.append(".")
        rows.append("".join(row))
    return "\n".join(rows)


def parse(text: str) -> SokobanState:
    """Inverse of :func:`render`. Rows are given top first; spaces count as floor."""
    lines = [ln for ln in text.strip("\n").splitlines()]
    height = len(lines)
    width = max(len(ln) for ln in lines)
    walls, boxes, goals = set(), [], set()
    player = None
    for row, line in enumerate(lines):
        y = height - 1 - row
        for x, ch in enumerate(line.ljust(width)):
            c = (x, y)
            if ch == "#":
                walls.add(c)
            if ch in "$*":
                boxes.append(c)
            if ch in "G*+":
                goals.add(c)
            if ch in "@+":
                player = c
    if player is None:
        raise InvalidState("no player in grid")
    return SokobanState(frozenset(walls), player, tuple(boxes), frozenset(goals), width, height)


def generate_instance(
    rng: RngStream,
    target_optimal: int,
    boxes: int = 1,
    dims: tuple[int, int] = (7, 7),
    slack: int = 2,
    wall_density: float = 0.2,
    max_attempts: int = 50_000,
) -> SokobanInstance:
    """Rejection-sample a layout whose BFS-optimal solution length is exactly ``target_optimal``."""
    from .oracle import bfs_plan  # local import: oracle depends on this module

    if target_optimal < 1:
        raise ValueError("target_optimal must be >= 1")
    width, height = dims
    interior = [(x, y) for y in range(1, height - 1) for x in range(1, width - 1)]
    if len(interior) < 2 * boxes + 1:
        raise ValueError(f"dims {dims} too small for {boxes} boxes")
    perimeter = {(x, y) for x in range(width) for y in range(height)} - set(interior)

    for _ in range(max_attempts):
        cells = list(interior)
        rng.shuffle(cells)
        n_walls = sum(rng.random() < wall_density for _ in cells)
        n_walls = min(n_walls, len(cells) - (2 * boxes + 1))
        inner_walls = cells[:n_walls]
        free = cells[n_walls:]
        goals = free[:boxes]
        box_cells = free[boxes : 2 * boxes]
        player = free[2 * boxes]
        state = SokobanState(
            frozenset(perimeter | set(inner_walls)), player, tuple(box_cells), frozenset(goals), width, height
        )
        plan = bfs_plan(state, max_depth=target_optimal)
        if plan is not None and len(plan) == target_optimal:
            return SokobanInstance(state, target_optimal, Budget((target_optimal + slack,)))
    raise GenerationExhausted(f"no instance with T*={target_optimal} after {max_attempts} attempts")
