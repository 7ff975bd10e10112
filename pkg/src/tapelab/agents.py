"""Closed-loop ReAct, Plan-and-Act, Best-of-N, and graph+solver (TAPE) controllers over Sokoban.

Every controller is driven by the BFS oracle with injected planning and sampling
errors. Episodes end on the goal, on an exhausted budget, or as soon as the goal is
out of reach within the remaining budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .core import RngStream, StepRecord, TerminalStatus, TrajectoryRecord
from .errors import ErrorParams, available_actions, inject_planning_error, inject_sampling_error
from .oracle import DEFAULT_ORACLE, Oracle
from .plan_graph import AbstractPlan, annotate, build_graph, sample_plans
from .sokoban import Action, SokobanEnv, SokobanInstance, is_solved
from .solver import PathSelectionProblem, solve_with_fallback


class Framework(str, Enum):
    REACT = "ReAct"
    PLAN_AND_ACT = "PlanAndAct"
    REACT_BEST_OF_N = "ReActBestOfN"
    PLAN_AND_ACT_BEST_OF_N = "PlanAndActBestOfN"
    TAPE = "TAPE"


@dataclass(frozen=True)
class AgentConfig:
    framework: Framework
    error_params: ErrorParams = field(default_factory=ErrorParams)
    M: int = 4
    l_max: int | None = None  # None: horizon follows the remaining budget
    use_solver: bool = True
    use_constrained_execution: bool = True
    use_replanning: bool = True
    scorer: str = "oracle"
    availability: str = "all"
    hallucination_rate: float = 0.0
    annotate_mode: str = "oracle"
    annotate_flip_rate: float = 0.0
    max_replans: int | None = None
    name: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "framework", Framework(self.framework))
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if self.scorer not in ("oracle", "random"):
            raise ValueError(f"unknown scorer {self.scorer!r}")
        if self.l_max is not None and self.l_max < 1:
            raise ValueError("l_max must be >= 1")

    @property
    def label(self) -> str:
        return self.name or self.framework.value


@dataclass(frozen=True)
class EpisodeResult:
    record: TrajectoryRecord
    replans: int = 0
    solver_infeasible_count: int = 0
    steps_used: int = 0
    aligned_steps: int = 0
    followed_steps: int = 0

    @property
    def success(self) -> bool:
        return self.record.success

    @property
    def planning_err_steps(self) -> int:
        return sum(not s.intended_viable for s in self.record.steps)

    @property
    def sampling_err_steps(self) -> int:
        return sum(s.executed_action != s.intended_action for s in self.record.steps)


class _Episode:
    def __init__(self, instance: SokobanInstance, oracle: Oracle):
        self.instance = instance
        self.oracle = oracle
        self.env = SokobanEnv(instance.initial, instance.budget)
        self.steps: list[StepRecord] = []

    @property
    def state(self):
        return self.env.state

    @property
    def left(self) -> int:
        return self.env.budget.steps

    def terminal(self) -> TerminalStatus | None:
        if self.env.solved:
            return TerminalStatus.GOAL_REACHED
        if self.left == 0:
            return TerminalStatus.BUDGET_EXHAUSTED
        if self.oracle.is_dead_end(self.state, self.left):
            return TerminalStatus.DEAD_END
        return None

    def act(self, intended: Action, executed: Action) -> None:
        s = self.state
        verdict = self.oracle.viable_actions(s, self.left)
        self.env.act(executed)
        self.steps.append(
            StepRecord(
                state_id=s.state_id,
                intended_action=intended.value,
                executed_action=executed.value,
                intended_viable=verdict.is_viable(intended),
                executed_viable=verdict.is_viable(executed),
                budget_after=self.env.budget,
            )
        )

    def close(self, status: TerminalStatus, **extra) -> EpisodeResult:
        record = TrajectoryRecord.close(self.steps, status)
        return EpisodeResult(record=record, steps_used=len(self.steps), **extra)


def _pick(cands: Sequence, good: Sequence, scorer: str, rng: RngStream):
    if len(cands) == 1:
        return cands[0]
    if scorer == "random":
        return rng.choice(cands)
    best = max(good)
    return cands[list(good).index(best)]


def _think(ep: _Episode, cfg: AgentConfig, rng: RngStream, best_of: int = 1) -> Action:
    """Noisy one-step intention; with best_of > 1 the scorer picks among independent draws."""
    s, left = ep.state, ep.left
    avail = available_actions(s, cfg.availability)
    target = ep.oracle.first_action(s)
    cands = [
        inject_planning_error(s, target, left, cfg.error_params, rng, ep.oracle, avail) for _ in range(best_of)
    ]
    if best_of == 1:
        return cands[0]
    good = [ep.oracle.is_viable(s, a, left) for a in cands] if cfg.scorer == "oracle" else [0] * len(cands)
    return _pick(cands, good, cfg.scorer, rng)


def _react_step(ep: _Episode, cfg: AgentConfig, rng: RngStream, best_of: int = 1, constrained: bool = False) -> None:
    intended = _think(ep, cfg, rng, best_of)
    if constrained:
        executed = intended
    else:
        avail = available_actions(ep.state, cfg.availability)
        executed = inject_sampling_error(intended, avail, cfg.error_params, rng)
    ep.act(intended, executed)


def _plan_score(plan: AbstractPlan, oracle: Oracle, left: int) -> tuple[bool, int]:
    """(reaches the goal, length of the viable prefix) under the simulated budget."""
    prefix = 0
    for i, (s, a) in enumerate(zip(plan.states, plan.actions)):
        if not oracle.is_viable(s, a, left - i):
            break
        prefix += 1
    return (is_solved(plan.states[-1]) and prefix == len(plan), prefix)


def run_react(instance: SokobanInstance, config: AgentConfig, rng: RngStream, oracle: Oracle | None = None) -> EpisodeResult:
    best_of = config.M if config.framework is Framework.REACT_BEST_OF_N else 1
    ep = _Episode(instance, oracle or DEFAULT_ORACLE)
    while (status := ep.terminal()) is None:
        _react_step(ep, config, rng, best_of)
    return ep.close(status)


def run_plan_and_act(
    instance: SokobanInstance, config: AgentConfig, rng: RngStream, oracle: Oracle | None = None
) -> EpisodeResult:
    best_of = config.M if config.framework is Framework.PLAN_AND_ACT_BEST_OF_N else 1
    ep = _Episode(instance, oracle or DEFAULT_ORACLE)
    avail = available_actions(instance.initial, config.availability)
    plans = sample_plans(
        instance.initial, ep.left, best_of, config.error_params, rng, ep.oracle, avail, config.hallucination_rate
    )
    if best_of == 1:
        plan = plans[0]
    else:
        scores = [_plan_score(p, ep.oracle, ep.left) for p in plans] if config.scorer == "oracle" else [0] * len(plans)
        plan = _pick(plans, scores, config.scorer, rng)

    aligned = followed = 0
    t = 0
    while (status := ep.terminal()) is None:
        on_plan = t < len(plan) and plan.states[t] == ep.state
        aligned += on_plan
        if on_plan and rng.bernoulli(config.error_params.p_follow):
            followed += 1
            ep.act(plan.actions[t], plan.actions[t])
        else:
            _react_step(ep, config, rng, best_of)
        t += 1
    return ep.close(status, aligned_steps=aligned, followed_steps=followed)


def run_best_of_n(instance: SokobanInstance, config: AgentConfig, rng: RngStream, oracle: Oracle | None = None) -> EpisodeResult:
    if config.framework is Framework.REACT_BEST_OF_N:
        return run_react(instance, config, rng, oracle)
    if config.framework is Framework.PLAN_AND_ACT_BEST_OF_N:
        return run_plan_and_act(instance, config, rng, oracle)
    raise ValueError(f"{config.framework} is not a Best-of-N framework")


def run_tape(instance: SokobanInstance, config: AgentConfig, rng: RngStream, oracle: Oracle | None = None) -> EpisodeResult:
    ep = _Episode(instance, oracle or DEFAULT_ORACLE)
    params = config.error_params
    max_replans = config.max_replans if config.max_replans is not None else instance.budget.steps
    replans = infeasible = 0
    constrained = config.use_constrained_execution

    while (status := ep.terminal()) is None:
        if replans > max_replans:
            status = TerminalStatus.HORIZON_EXCEEDED
            break
        s, left = ep.state, ep.left
        avail = available_actions(s, config.availability)
        plans = sample_plans(s, left, config.M, params, rng, ep.oracle, avail, config.hallucination_rate)

        if config.use_solver:
            graph = annotate(
                build_graph(plans), left, config.annotate_mode, ep.oracle, rng, config.annotate_flip_rate
            )
            horizon = left if config.l_max is None else min(config.l_max, left)
            problem = PathSelectionProblem.from_graph(graph, horizon, budget=(left,))
            sol = solve_with_fallback(problem, range(1, horizon + 1))
            if not sol.optimal:
                infeasible += 1
                _react_step(ep, config, rng, constrained=constrained)
                continue
            walk = [
                (graph.edges[eid].action, graph.nodes[graph.edges[eid].to_id].key)
                for eid in sol.walk
                if eid < len(graph.edges)  # drop goal-absorbing loops
            ]
        else:
            plan = plans[0] if len(plans) == 1 else rng.choice(plans)
            walk = list(zip(plan.actions, plan.states[1:]))

        for action, predicted in walk:
            executed = action if constrained else inject_sampling_error(action, avail, params, rng)
            ep.act(action, executed)
            if ep.terminal() is not None:
                break
            avail = available_actions(ep.state, config.availability)
            if ep.state != predicted and config.use_replanning:
                replans += 1
                break

    return ep.close(status, replans=replans, solver_infeasible_count=infeasible)


_RUNNERS = {
    Framework.REACT: run_react,
    Framework.PLAN_AND_ACT: run_plan_and_act,
    Framework.REACT_BEST_OF_N: run_best_of_n,
    Framework.PLAN_AND_ACT_BEST_OF_N: run_best_of_n,
    Framework.TAPE: run_tape,
}


def run_episode(instance: SokobanInstance, config: AgentConfig, rng: RngStream, oracle: Oracle | None = None) -> EpisodeResult:
    return _RUNNERS[config.framework](instance, config, rng, oracle)
