"""Exact breadth-first planner, budget-aware viability, and dead-end detection for Sokoban."""

from __future__ import annotations

import heapq
import math
from collections import defaultdict, deque
from dataclasses import dataclass
from enum import Enum
from typing import Union

from .core import Budget
from .sokoban import ACTIONS, Action, SokobanState, is_solved, step

INF = math.inf

Remaining = Union[Budget, int, float]


class Unsolvable(Exception):
    """No action sequence solves the state (b(s) is infinite)."""


@dataclass(frozen=True)
class OraclePlan:
    actions: tuple[Action, ...]

    @property
    def length(self) -> int:
        return len(self.actions)


class Verdict(str, Enum):
    VIABLE = "Viable"
    NON_VIABLE = "NonViable"


@dataclass(frozen=True)
class ViabilityVerdict:
    verdicts: dict[Action, Verdict]
    distance_after: dict[Action, float]

    def is_viable(self, action: Action) -> bool:
        return self.verdicts[action] is Verdict.VIABLE

    @property
    def viable(self) -> tuple[Action, ...]:
        return tuple(a for a in ACTIONS if self.verdicts[a] is Verdict.VIABLE)

    @property
    def non_viable(self) -> tuple[Action, ...]:
        return tuple(a for a in ACTIONS if self.verdicts[a] is Verdict.NON_VIABLE)


def _steps_left(remaining: Remaining) -> float:
    if isinstance(remaining, Budget):
        return remaining.steps
    return remaining


def _corner_deadlocked(state: SokobanState) -> bool:
    walls, goals = state.walls, state.goals
    for x, y in state.boxes:
        if (x, y) in goals:
            continue
        vertical = (x, y + 1) in walls or (x, y - 1) in walls
        horizontal = (x + 1, y) in walls or (x - 1, y) in walls
        if vertical and horizontal:
            return True
    return False


def bfs_plan(
    state: SokobanState, max_depth: int | None = None, prune_corners: bool = False
) -> list[Action] | None:
    """Plain forward BFS over canonical states, children expanded in U, D, L, R order.

    Returns the lexicographically first shortest plan, or None when no plan exists
    (within ``max_depth`` if given). ``prune_corners`` skips states with a box
    wedged in a non-goal corner; it never changes the answer, only the work done.
    """
    if is_solved(state):
        return []
    parent: dict[tuple, tuple | None] = {state.key: None}
    queue = deque([(state, 0)])
    while queue:
        s, depth = queue.popleft()
        if max_depth is not None and depth >= max_depth:
            continue
        for a in ACTIONS:
            t, _, _ = step(s, a)
            k = t.key
            if k in parent:
                continue
            parent[k] = (s.key, a)
            if is_solved(t):
                plan = []
                cur = k
                while parent[cur] is not None:
                    prev, act = parent[cur]
                    plan.append(act)
                    cur = prev
                return plan[::-1]
            if prune_corners and _corner_deadlocked(t):
                continue
            queue.append((t, depth + 1))
    return None


class Oracle:
    """Shortest-solution distances with a per-level memo table.

    Each level (walls, goals, dims) gets a table mapping canonical ``(player, boxes)``
    keys to the exact BFS distance to a solved state. The first query from an unseen
    state explores everything reachable from it and fills the table by a reverse
    unit-cost Dijkstra pass, so later queries are lookups. Not thread-safe; use one
    instance per worker.
    """

    def __init__(self) -> None:
        self._tables: dict[tuple, dict[tuple, float]] = {}

    def clear(self) -> None:
        self._tables.clear()

    def _table(self, state: SokobanState) -> dict[tuple, float]:
        table = self._tables.get(state.level)
        if table is None:
            table = self._tables[state.level] = {}
        if state.key not in table:
            self._explore(state, table)
        return table

    @staticmethod
    def _explore(start: SokobanState, table: dict[tuple, float]) -> None:
        fresh: dict[tuple, SokobanState] = {start.key: start}
        succ: dict[tuple, list[tuple]] = {}
        stack = [start]
        while stack:
            s = stack.pop()
            keys = []
            for a in ACTIONS:
                t, _, _ = step(s, a)
                k = t.key
                keys.append(k)
                if k not in table and k not in fresh:
                    fresh[k] = t
                    stack.append(t)
            succ[s.key] = keys

        pred: dict[tuple, list[tuple]] = defaultdict(list)
        heap: list[tuple[float, tuple]] = []
        for k, s in fresh.items():
            if is_solved(s):
                heap.append((0, k))
            for sk in succ[k]:
                if sk in fresh:
                    pred[sk].append(k)
                elif table[sk] < INF:
                    heap.append((table[sk] + 1, k))
        heapq.heapify(heap)
        dist: dict[tuple, float] = {}
        while heap:
            d, k = heapq.heappop(heap)
            if k in dist:
                continue
            dist[k] = d
            for p in pred[k]:
                if p not in dist:
                    heapq.heappush(heap, (d + 1, p))
        for k in fresh:
            table[k] = dist.get(k, INF)

    def distance(self, state: SokobanState) -> float:
        """b(s): length of a shortest solution, ``inf`` when unsolvable."""
        return self._table(state)[state.key]

    def first_action(self, state: SokobanState) -> Action | None:
        """First action of :meth:`shortest_plan`; None when solved or unsolvable."""
        table = self._table(state)
        d = table[state.key]
        if d == 0 or d == INF:
            return None
        for a in ACTIONS:
            t, _, _ = step(state, a)
            if table[t.key] == d - 1:
                return a
        raise AssertionError("distance table inconsistent")

    def shortest_plan(self, state: SokobanState) -> OraclePlan:
        if self.distance(state) == INF:
            raise Unsolvable(state.state_id)
        actions = []
        while not is_solved(state):
            a = self.first_action(state)
            actions.append(a)
            state = step(state, a)[0]
        return OraclePlan(tuple(actions))

    def viable_actions(self, state: SokobanState, remaining: Remaining) -> ViabilityVerdict:
        """An action is viable iff one step for it plus b(s') fits in the remaining budget."""
        left = _steps_left(remaining)
        table = self._table(state)
        verdicts, after = {}, {}
        for a in ACTIONS:
            t, _, _ = step(state, a)
            d = table.get(t.key)
            if d is None:
                d = self.distance(t)
            after[a] = d
            verdicts[a] = Verdict.VIABLE if d + 1 <= left else Verdict.NON_VIABLE
        return ViabilityVerdict(verdicts, after)

    def is_viable(self, state: SokobanState, action: Action, remaining: Remaining) -> bool:
        return self.distance(step(state, action)[0]) + 1 <= _steps_left(remaining)

    def is_dead_end(self, state: SokobanState, remaining: Remaining) -> bool:
        return self.distance(state) > _steps_left(remaining)


DEFAULT_ORACLE = Oracle()


def shortest_plan(state: SokobanState, oracle: Oracle | None = None) -> OraclePlan:
    return (oracle or DEFAULT_ORACLE).shortest_plan(state)


def viable_actions(state: SokobanState, remaining: Remaining, oracle: Oracle | None = None) -> ViabilityVerdict:
    return (oracle or DEFAULT_ORACLE).viable_actions(state, remaining)


def is_dead_end(state: SokobanState, remaining: Remaining, oracle: Oracle | None = None) -> bool:
    return (oracle or DEFAULT_ORACLE).is_dead_end(state, remaining)
