"""Planning/sampling error injection, empirical error estimation, and the abstract per-step chain."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import Budget, RngStream, TrajectoryRecord
from .oracle import DEFAULT_ORACLE, Oracle, Remaining
from .sokoban import ACTIONS, Action, SokobanInstance, SokobanState, step


@dataclass(frozen=True)
class ErrorParams:
    eps_p: float = 0.0
    eps_s: float = 0.0
    p_follow: float = 0.9
    delta_b: float = 1.0
    delta_r: float = 0.0

    def __post_init__(self) -> None:
        for name, value in asdict(self).items():
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value} outside [0, 1]")


def available_actions(state: SokobanState, mode: str = "all") -> tuple[Action, ...]:
    """All four actions by default; ``moving`` keeps only actions that change the state."""
    if mode == "all":
        return ACTIONS
    if mode == "moving":
        return tuple(a for a in ACTIONS if step(state, a)[1])
    raise ValueError(f"unknown availability mode {mode!r}")


def inject_planning_error(
    state: SokobanState,
    intended: Action,
    remaining: Remaining,
    params: ErrorParams,
    rng: RngStream,
    oracle: Oracle | None = None,
    available: Sequence[Action] = ACTIONS,
) -> Action:
    """With prob. eps_p swap the intended action for a non-viable alternative (any alternative if none)."""
    if not rng.bernoulli(params.eps_p):
        return intended
    alternatives = [a for a in available if a != intended]
    if not alternatives:
        return intended
    verdict = (oracle or DEFAULT_ORACLE).viable_actions(state, remaining)
    bad = [a for a in alternatives if not verdict.is_viable(a)]
    return rng.choice(bad or alternatives)


def inject_sampling_error(
    intended: Action, available: Sequence[Action], params: ErrorParams, rng: RngStream
) -> Action:
    """With prob. eps_s execute a uniformly chosen different available action."""
    if not rng.bernoulli(params.eps_s):
        return intended
    alternatives = [a for a in available if a != intended]
    if not alternatives:
        return intended
    return rng.choice(alternatives)


def _rate(num: int, den: int) -> float | None:
    return num / den if den else None


@dataclass(frozen=True)
class ErrorEstimate:
    """Empirical error rates; a rate with a zero denominator is None, never 0."""

    planning_rate: float | None
    sampling_rate: float | None
    delta_b_hat: float | None
    delta_r_hat: float | None
    counts: dict[str, int] = field(default_factory=dict)
    conditional_planning_rate: float | None = None

    def to_dict(self) -> dict:
        c = self.counts
        return {
            "planning_rate": self.planning_rate,
            "sampling_rate": self.sampling_rate,
            "delta_b_hat": self.delta_b_hat,
            "delta_r_hat": self.delta_r_hat,
            "conditional_planning_rate": self.conditional_planning_rate,
            "counts": dict(c),
            "denominators": {
                "planning_rate": c.get("steps", 0),
                "sampling_rate": c.get("steps", 0),
                "delta_b_hat": c.get("viable_flips", 0),
                "delta_r_hat": c.get("nonviable_flips", 0),
                "conditional_planning_rate": c.get("opportunity_steps", 0),
            },
        }


def estimate_errors(
    records: Iterable[TrajectoryRecord], opportunities: Iterable[Sequence[bool]] | None = None
) -> ErrorEstimate:
    """Tally planning, sampling and deviation-consequence rates over every logged step.

    ``opportunities`` optionally gives, per record and step, whether a non-viable
    alternative to the oracle action existed; it yields the planning rate conditioned on
    steps where the injector could actually produce a non-viable intention.
    """
    records = list(records)
    opp_lists = list(opportunities) if opportunities is not None else None
    steps = nonviable = flips = v_flips = v_breaks = nv_flips = nv_recovers = 0
    opp_steps = opp_errors = 0
    for i, rec in enumerate(records):
        opp = opp_lists[i] if opp_lists is not None else None
        for j, s in enumerate(rec.steps):
            steps += 1
            flipped = s.executed_action != s.intended_action
            if not s.intended_viable:
                nonviable += 1
            if flipped:
                flips += 1
                if s.intended_viable:
                    v_flips += 1
                    v_breaks += not s.executed_viable
                else:
                    nv_flips += 1
                    nv_recovers += s.executed_viable
            if opp is not None and opp[j]:
                opp_steps += 1
                opp_errors += not s.intended_viable
    counts = {
        "steps": steps,
        "intended_nonviable": nonviable,
        "flips": flips,
        "viable_flips": v_flips,
        "viable_flip_breaks": v_breaks,
        "nonviable_flips": nv_flips,
        "nonviable_flip_recovers": nv_recovers,
    }
    if opp_lists is not None:
        counts["opportunity_steps"] = opp_steps
        counts["opportunity_nonviable"] = opp_errors
    return ErrorEstimate(
        planning_rate=_rate(nonviable, steps),
        sampling_rate=_rate(flips, steps),
        delta_b_hat=_rate(v_breaks, v_flips),
        delta_r_hat=_rate(nv_recovers, nv_flips),
        counts=counts,
        conditional_planning_rate=_rate(opp_errors, opp_steps) if opp_lists is not None else None,
    )


def planning_opportunities(
    instance: SokobanInstance,
    record: TrajectoryRecord,
    oracle: Oracle | None = None,
    availability: str = "all",
) -> list[bool]:
    """Replay a record and flag steps where some alternative to the oracle action was non-viable."""
    oracle = oracle or DEFAULT_ORACLE
    state, left = instance.initial, instance.budget.steps
    flags = []
    for s in record.steps:
        best = oracle.first_action(state)
        if best is None:
            flags.append(False)
        else:
            verdict = oracle.viable_actions(state, left)
            alts = [a for a in available_actions(state, availability) if a != best]
            flags.append(any(not verdict.is_viable(a) for a in alts))
        state = step(state, Action(s.executed_action))[0]
        left -= 1
    return flags


def replay(instance: SokobanInstance, record: TrajectoryRecord) -> tuple[SokobanState, list[Budget]]:
    """Re-execute a record's actions; returns the final state and the budget after each step."""
    state, budget = instance.initial, instance.budget
    budgets = []
    for s in record.steps:
        state = step(state, Action(s.executed_action))[0]
        budget = Budget((budget.steps - 1,) + budget.components[1:])
        budgets.append(budget)
    return state, budgets


CHAIN_VARIANTS = ("ReAct", "PA", "Ours")


def _chain_step(g: np.random.Generator, params: ErrorParams, variant: str, alpha: float, d: int, n: int):
    if variant == "Ours":
        return ~(g.random((d, n)) < params.eps_p).all(axis=0)
    plan_ok = g.random(n) >= params.eps_p
    if variant == "PA":
        follow = g.random(n) < alpha * params.p_follow
        flip = ~follow & (g.random(n) < params.eps_s)
    else:
        flip = g.random(n) < params.eps_s
    breaks = g.random(n) < params.delta_b
    recovers = g.random(n) < params.delta_r
    return np.where(plan_ok, ~(flip & breaks), flip & recovers)


def _d_sequence(d: int | Sequence[int], T: int) -> list[int]:
    seq = [int(d)] * T if isinstance(d, (int, np.integer)) else [int(x) for x in d]
    if len(seq) != T or any(x < 1 for x in seq):
        raise ValueError("d_sequence needs T entries, each >= 1")
    return seq


def simulate_abstract_chain(
    params: ErrorParams,
    T: int,
    variant: str,
    trials: int,
    rng: RngStream,
    alpha: float = 1.0,
    d: int | Sequence[int] = 1,
) -> float:
    """Monte Carlo success fraction of T independent per-step viability events.

    ReAct: plan viable w.p. 1-eps_p; a viable plan fails only via flip and break,
    a non-viable one survives only via flip and recover. PA: a step is followed
    verbatim (no flip) w.p. alpha*p_follow. Ours: step survives unless all d_t
    candidates are non-viable.
    """
    if T < 1 or trials < 1:
        raise ValueError("T and trials must be >= 1")
    if variant not in CHAIN_VARIANTS:
        raise ValueError(f"variant must be one of {CHAIN_VARIANTS}")
    ds = _d_sequence(d, T) if variant == "Ours" else [1] * T
    g = rng.numpy()
    alive = np.ones(trials, dtype=bool)
    for t in range(T):
        alive &= _chain_step(g, params, variant, alpha, ds[t], trials)
    return float(alive.mean())
