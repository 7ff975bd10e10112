"""Noisy plan sampling, state-merging plan graphs, and reward/cost annotation."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from typing import Any, Callable, Hashable, Sequence

from .core import Budget, RngStream
from .errors import ErrorParams, inject_planning_error
from .oracle import DEFAULT_ORACLE, INF, Oracle, Remaining, _steps_left
from .sokoban import ACTIONS, Action, SokobanState, is_solved, render, step


class EmptyPlanSet(ValueError):
    pass


@dataclass(frozen=True)
class AbstractPlan:
    """Predicted states s_0..s_L and the actions between them."""

    states: tuple[SokobanState, ...]
    actions: tuple[Action, ...]

    def __len__(self) -> int:
        return len(self.actions)


def sample_plans(
    state: SokobanState,
    remaining: Remaining,
    M: int,
    params: ErrorParams,
    rng: RngStream,
    oracle: Oracle | None = None,
    available: Sequence[Action] = ACTIONS,
    hallucination_rate: float = 0.0,
) -> list[AbstractPlan]:
    """Roll out the error-injected oracle policy M times from ``state``.

    Each rollout stops at a solved state, when the simulated budget runs out, or once
    the goal is out of reach within what is left. With ``hallucination_rate`` > 0 a
    predicted successor is sometimes replaced by the outcome of a different action,
    so the plan's belief drifts from the true dynamics.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    oracle = oracle or DEFAULT_ORACLE
    budget_left = _steps_left(remaining)
    plans = []
    for _ in range(M):
        s, left = state, budget_left
        states, actions = [s], []
        while left > 0 and not is_solved(s) and not oracle.is_dead_end(s, left):
            intended = oracle.first_action(s)
            a = inject_planning_error(s, intended, left, params, rng, oracle, available)
            nxt = step(s, a)[0]
            if hallucination_rate > 0.0 and rng.bernoulli(hallucination_rate):
                nxt = step(s, rng.choice([b for b in ACTIONS if b != a]))[0]
            actions.append(a)
            states.append(nxt)
            s, left = nxt, left - 1
        plans.append(AbstractPlan(tuple(states), tuple(actions)))
    return plans


@dataclass(frozen=True)
class PlanNode:
    id: int
    key: SokobanState
    reward: float = 0.0
    is_terminal: bool = False


@dataclass(frozen=True)
class PlanEdge:
    from_id: int
    to_id: int
    action: Action
    cost: Budget = Budget((1,))


@dataclass(frozen=True)
class PlanGraph:
    nodes: tuple[PlanNode, ...]
    edges: tuple[PlanEdge, ...]
    root_id: int
    terminal_ids: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        ids = {n.id for n in self.nodes}
        if [n.id for n in self.nodes] != list(range(len(self.nodes))):
            raise ValueError("node ids must be 0..n-1 in order")
        if self.root_id not in ids:
            raise ValueError("root is not a node")
        for e in self.edges:
            if e.from_id not in ids or e.to_id not in ids:
                raise ValueError(f"edge {e} has a dangling endpoint")

    def out_edges(self, node_id: int) -> list[int]:
        return [i for i, e in enumerate(self.edges) if e.from_id == node_id]

    def out_degree(self, node_id: int) -> int:
        """d(v): number of distinct actions proposed at the node."""
        return len({self.edges[i].action for i in self.out_edges(node_id)})

    def node_for(self, state: SokobanState) -> PlanNode | None:
        for n in self.nodes:
            if n.key == state:
                return n
        return None

    def min_depths(self) -> list[float]:
        depth = [INF] * len(self.nodes)
        depth[self.root_id] = 0
        adj: dict[int, list[int]] = {}
        for e in self.edges:
            adj.setdefault(e.from_id, []).append(e.to_id)
        queue = deque([self.root_id])
        while queue:
            u = queue.popleft()
            for v in adj.get(u, ()):
                if depth[v] == INF:
                    depth[v] = depth[u] + 1
                    queue.append(v)
        return depth

    def to_dict(self) -> dict[str, Any]:
        return {
            "root": self.root_id,
            "nodes": [
                {
                    "id": n.id,
                    "observation": render(n.key),
                    "is_goal": n.is_terminal,
                    "reward": n.reward,
                    "state": n.key.to_dict(),
                }
                for n in self.nodes
            ],
            "edges": [
                {"from": e.from_id, "to": e.to_id, "action": e.action.value, "cost": e.cost.to_list()}
                for e in self.edges
            ],
        }


def build_graph(
    plans: Sequence[AbstractPlan], merge_key: Callable[[SokobanState], Hashable] | None = None
) -> PlanGraph:
    """Fold plans into one graph, merging states with equal ``merge_key`` (default: the state)."""
    if not plans:
        raise EmptyPlanSet("no plans to fold")
    merge_key = merge_key or (lambda s: s)
    root_key = merge_key(plans[0].states[0])
    if any(merge_key(p.states[0]) != root_key for p in plans):
        raise ValueError("plans must share their initial state")
    index: dict[Hashable, int] = {}
    nodes: list[PlanNode] = []
    edges: list[PlanEdge] = []
    seen_edges: set[tuple[int, Action, int]] = set()

    def node_id(s: SokobanState) -> int:
        k = merge_key(s)
        if k not in index:
            index[k] = len(nodes)
            nodes.append(PlanNode(len(nodes), s))
        return index[k]

    for plan in plans:
        prev = node_id(plan.states[0])
        for a, s in zip(plan.actions, plan.states[1:]):
            cur = node_id(s)
            triple = (prev, a, cur)
            if triple not in seen_edges:
                seen_edges.add(triple)
                edges.append(PlanEdge(prev, cur, a))
            prev = cur
    return PlanGraph(tuple(nodes), tuple(edges), root_id=0)


def annotate(
    graph: PlanGraph,
    remaining: Remaining,
    mode: str = "oracle",
    oracle: Oracle | None = None,
    rng: RngStream | None = None,
    flip_rate: float = 0.0,
) -> PlanGraph:
    """Score nodes 1 (solved), -1 (goal out of reach within budget) or 0, and cost every edge one step.

    A node's budget is what remains after its shallowest arrival from the root. In
    ``noisy`` mode each unsolved node's dead-end verdict flips with ``flip_rate``.
    """
    if mode not in ("oracle", "noisy"):
        raise ValueError(f"unknown annotation mode {mode!r}")
    if mode == "noisy" and rng is None:
        raise ValueError("noisy annotation needs an rng")
    oracle = oracle or DEFAULT_ORACLE
    left = _steps_left(remaining)
    depths = graph.min_depths()
    nodes = []
    for n in graph.nodes:
        if is_solved(n.key):
            nodes.append(replace(n, reward=1.0, is_terminal=True))
            continue
        dead = oracle.distance(n.key) + depths[n.id] > left
        if mode == "noisy" and rng.bernoulli(flip_rate):
            dead = not dead
        nodes.append(replace(n, reward=-1.0 if dead else 0.0, is_terminal=False))
    edges = tuple(replace(e, cost=Budget((1,))) for e in graph.edges)
    terminals = frozenset(n.id for n in nodes if n.is_terminal)
    return PlanGraph(tuple(nodes), edges, graph.root_id, terminals)
