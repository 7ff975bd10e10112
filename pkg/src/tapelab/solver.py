"""Exact time-expanded walk selection with optional budget constraints.

A walk of exactly ``horizon`` edges starting at the root and ending in the terminal
set is what the binary edge-at-step program admits: one edge per step, the first
leaving the root, the last entering a terminal, and flow conservation linking
consecutive steps. Label DP over (step, node, consumed budget) is therefore exact.
Ties in objective go to the lexicographically smallest edge-id sequence.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Sequence

from .plan_graph import PlanGraph

TIE_TOL = 1e-9
MAX_ORACLE_NODES = 8
MAX_ORACLE_HORIZON = 6


class InstanceTooLarge(ValueError):
    pass


class SolveStatus(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class Edge:
    src: int
    tgt: int
    cost: tuple[int, ...] = ()
    absorbing: bool = False


@dataclass(frozen=True)
class PathSelectionProblem:
    """Walk-selection instance. ``rewards[v]`` is earned each time a non-absorbing edge enters v.

    With ``absorb_terminals`` every terminal gets a zero-cost, zero-reward self-loop
    (appended after the given edges) so a walk may arrive before the final step.
    """

    num_nodes: int
    edges: tuple[Edge, ...]
    rewards: tuple[float, ...]
    root: int
    terminals: frozenset[int]
    horizon: int
    budget: tuple[int, ...] | None = None
    absorb_terminals: bool = False
    all_edges: tuple[Edge, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "rewards", tuple(float(r) for r in self.rewards))
        object.__setattr__(self, "terminals", frozenset(self.terminals))
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if len(self.rewards) != self.num_nodes:
            raise ValueError("one reward per node required")
        if not 0 <= self.root < self.num_nodes or any(not 0 <= t < self.num_nodes for t in self.terminals):
            raise ValueError("root/terminal out of range")
        dims = None if self.budget is None else len(self.budget)
        if self.budget is not None:
            if any(int(b) != b or b < 0 for b in self.budget):
                raise ValueError("budget components must be non-negative integers")
            object.__setattr__(self, "budget", tuple(int(b) for b in self.budget))
        for e in self.edges:
            if not (0 <= e.src < self.num_nodes and 0 <= e.tgt < self.num_nodes):
                raise ValueError(f"edge {e} out of range")
            if any(int(c) != c or c < 0 for c in e.cost):
                raise ValueError("edge costs must be non-negative integers")
            if dims is not None and len(e.cost) != dims:
                raise ValueError("edge cost dimension differs from budget")
        extra = ()
        if self.absorb_terminals:
            zero = (0,) * (dims if dims is not None else len(self.edges[0].cost) if self.edges else 0)
            extra = tuple(Edge(t, t, zero, absorbing=True) for t in sorted(self.terminals))
        object.__setattr__(self, "all_edges", self.edges + extra)

    def with_horizon(self, horizon: int) -> PathSelectionProblem:
        return replace(self, horizon=horizon)

    def edge_reward(self, eid: int) -> float:
        e = self.all_edges[eid]
        return 0.0 if e.absorbing else self.rewards[e.tgt]

    @classmethod
    def from_graph(
        cls,
        graph: PlanGraph,
        horizon: int,
        budget: Sequence[int] | None = None,
        absorb_terminals: bool = True,
    ) -> PathSelectionProblem:
        edges = tuple(Edge(e.from_id, e.to_id, e.cost.components) for e in graph.edges)
        return cls(
            num_nodes=len(graph.nodes),
            edges=edges,
            rewards=tuple(n.reward for n in graph.nodes),
            root=graph.root_id,
            terminals=graph.terminal_ids,
            horizon=horizon,
            budget=None if budget is None else tuple(budget),
            absorb_terminals=absorb_terminals,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "num_nodes": self.num_nodes,
            "edges": [{"src": e.src, "tgt": e.tgt, "cost": list(e.cost)} for e in self.edges],
            "rewards": list(self.rewards),
            "root": self.root,
            "terminals": sorted(self.terminals),
            "horizon": self.horizon,
            "budget": None if self.budget is None else list(self.budget),
            "absorb_terminals": self.absorb_terminals,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> PathSelectionProblem:
        return cls(
            num_nodes=d["num_nodes"],
            edges=tuple(Edge(e["src"], e["tgt"], tuple(e.get("cost", ()))) for e in d["edges"]),
            rewards=tuple(d["rewards"]),
            root=d["root"],
            terminals=frozenset(d["terminals"]),
            horizon=d["horizon"],
            budget=None if d.get("budget") is None else tuple(d["budget"]),
            absorb_terminals=d.get("absorb_terminals", False),
        )

    @classmethod
    def load(cls, path) -> PathSelectionProblem:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class PathSolution:
    status: SolveStatus
    walk: tuple[int, ...] = ()
    objective: float = -math.inf
    total_cost: tuple[int, ...] = ()
    horizon: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is SolveStatus.OPTIMAL

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": self.status.value,
            "walk": list(self.walk),
            "objective": self.objective if self.optimal else None,
            "total_cost": list(self.total_cost),
            "horizon": self.horizon,
        }


def _walk_objective(problem: PathSelectionProblem, walk: Iterable[int]) -> float:
    return math.fsum(problem.edge_reward(e) for e in walk)


def _walk_cost(problem: PathSelectionProblem, walk: Sequence[int]) -> tuple[int, ...]:
    k = len(problem.budget) if problem.budget is not None else (len(problem.all_edges[0].cost) if problem.all_edges else 0)
    total = [0] * k
    for eid in walk:
        for i, c in enumerate(problem.all_edges[eid].cost):
            total[i] += c
    return tuple(total)


def _solution(problem: PathSelectionProblem, walk: Sequence[int]) -> PathSolution:
    walk = tuple(walk)
    return PathSolution(
        SolveStatus.OPTIMAL, walk, _walk_objective(problem, walk), _walk_cost(problem, walk), problem.horizon
    )


def check_constraints(problem: PathSelectionProblem, walk: Sequence[int]) -> list[str]:
    """Literal check of the binary program on the indicator matrix x[e][l]; returns violated constraints."""
    E, L = len(problem.all_edges), problem.horizon
    x = [[0] * L for _ in range(E)]
    if len(walk) != L:
        return ["walk length != horizon"]
    for l, eid in enumerate(walk):
        if not 0 <= eid < E:
            return [f"edge id {eid} out of range"]
        x[eid][l] = 1
    edges = problem.all_edges
    bad = []
    for l in range(L):
        if sum(x[e][l] for e in range(E)) != 1:
            bad.append(f"single_action[{l}]")
    if sum(x[e][0] for e in range(E) if edges[e].src == problem.root) != 1:
        bad.append("start_node")
    if sum(x[e][L - 1] for e in range(E) if edges[e].tgt in problem.terminals) != 1:
        bad.append("goal_node")
    for v in range(problem.num_nodes):
        for l in range(1, L):
            inflow = sum(x[e][l - 1] for e in range(E) if edges[e].tgt == v)
            outflow = sum(x[e][l] for e in range(E) if edges[e].src == v)
            if inflow != outflow:
                bad.append(f"flow[{v},{l}]")
    if problem.budget is not None:
        for i, cap in enumerate(problem.budget):
            used = sum(edges[e].cost[i] * x[e][l] for e in range(E) for l in range(L))
            if used > cap:
                bad.append(f"budget[{i}]")
    return bad


def solve(problem: PathSelectionProblem) -> PathSolution:
    """Maximum-reward feasible walk by label DP over the time-expanded graph."""
    edges = problem.all_edges
    out: list[list[int]] = [[] for _ in range(problem.num_nodes)]
    for eid, e in enumerate(edges):
        out[e.src].append(eid)
    budget = problem.budget
    L = problem.horizon

    def advance(c: tuple[int, ...], eid: int) -> tuple[int, ...] | None:
        if budget is None:
            return c
        nc = tuple(a + b for a, b in zip(c, edges[eid].cost))
        return nc if all(a <= b for a, b in zip(nc, budget)) else None

    start = (problem.root, (0,) * len(budget) if budget is not None else ())
    layers: list[set] = [{start}]
    for _ in range(L):
        nxt = set()
        for v, c in layers[-1]:
            for eid in out[v]:
                nc = advance(c, eid)
                if nc is not None:
                    nxt.add((edges[eid].tgt, nc))
        layers.append(nxt)

    value: list[dict] = [dict() for _ in range(L + 1)]
    for label in layers[L]:
        if label[0] in problem.terminals:
            value[L][label] = 0.0
    for l in range(L - 1, -1, -1):
        later = value[l + 1]
        here = value[l]
        for v, c in layers[l]:
            best = None
            for eid in out[v]:
                nc = advance(c, eid)
                if nc is None:
                    continue
                sub = later.get((edges[eid].tgt, nc))
                if sub is None:
                    continue
                val = problem.edge_reward(eid) + sub
                if best is None or val > best:
                    best = val
            if best is not None:
                here[(v, c)] = best

    if start not in value[0]:
        return PathSolution(SolveStatus.INFEASIBLE, horizon=L)
    walk = []
    label = start
    for l in range(L):
        target = value[l][label]
        v, c = label
        for eid in out[v]:  # ascending ids: first near-optimal edge gives the lexicographic minimum
            nc = advance(c, eid)
            if nc is None:
                continue
            sub = value[l + 1].get((edges[eid].tgt, nc))
            if sub is not None and problem.edge_reward(eid) + sub >= target - TIE_TOL:
                walk.append(eid)
                label = (edges[eid].tgt, nc)
                break
    return _solution(problem, walk)


def enumerate_oracle(problem: PathSelectionProblem) -> PathSolution:
    """Brute force: every start-anchored, flow-consistent edge sequence, filtered by the literal checker."""
    if problem.num_nodes > MAX_ORACLE_NODES or problem.horizon > MAX_ORACLE_HORIZON:
        raise InstanceTooLarge(f"{problem.num_nodes} nodes / horizon {problem.horizon} exceeds oracle guard")
    edges = problem.all_edges
    L = problem.horizon
    best_walk, best_obj = None, -math.inf

    def extend(prefix: list[int]) -> None:
        nonlocal best_walk, best_obj
        if len(prefix) == L:
            if check_constraints(problem, prefix):
                return
            obj = _walk_objective(problem, prefix)
            if best_walk is None or obj > best_obj + TIE_TOL:
                best_walk, best_obj = list(prefix), obj
            return
        at = problem.root if not prefix else edges[prefix[-1]].tgt
        for eid in range(len(edges)):
            if edges[eid].src == at:
                prefix.append(eid)
                extend(prefix)
                prefix.pop()

    extend([])
    if best_walk is None:
        return PathSolution(SolveStatus.INFEASIBLE, horizon=L)
    return _solution(problem, best_walk)


def _min_hops_to_terminal(problem: PathSelectionProblem) -> float:
    """Fewest edges from the root to any terminal, ignoring budgets (``inf`` if none)."""
    adj: dict[int, list[int]] = {}
    for e in problem.all_edges:
        adj.setdefault(e.src, []).append(e.tgt)
    dist = {problem.root: 0}
    frontier = [problem.root]
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj.get(u, ()):
                if v not in dist:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    hops = [dist[t] for t in problem.terminals if t in dist]
    return max(1, min(hops)) if hops else math.inf


def solve_with_fallback(problem: PathSelectionProblem, fallback_horizons: Sequence[int]) -> PathSolution:
    """Try each horizon in ascending order and return the first optimal walk."""
    if list(fallback_horizons) != sorted(fallback_horizons):
        raise ValueError("fallback horizons must be ascending")
    last = problem.horizon
    reach = _min_hops_to_terminal(problem)
    for h in fallback_horizons:
        if h < reach:  # no walk of this length exists even without the budget
            last = h
            continue
        sol = solve(problem.with_horizon(h))
        if sol.optimal:
            return sol
        last = h
    return PathSolution(SolveStatus.INFEASIBLE, horizon=last)
