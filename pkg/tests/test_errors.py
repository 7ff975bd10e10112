import math
from collections import Counter

import pytest
from scipy import stats

from tapelab.agents import AgentConfig, Framework, run_episode
from tapelab.core import Budget, RngStream, StepRecord, TerminalStatus, TrajectoryRecord
from tapelab.errors import (
    ErrorParams,
    available_actions,
    estimate_errors,
    inject_planning_error,
    inject_sampling_error,
    planning_opportunities,
    replay,
    simulate_abstract_chain,
)
from tapelab.oracle import DEFAULT_ORACLE, viable_actions
from tapelab.sokoban import ACTIONS, Action, generate_instance, parse


def within_3sigma(hat, p, n):
    return abs(hat - p) <= 3 * math.sqrt(p * (1 - p) / n)


def test_params_validated():
    with pytest.raises(ValueError):
        ErrorParams(eps_p=1.5)


def test_available_actions_modes(corridor):
    assert available_actions(corridor) == ACTIONS
    assert available_actions(corridor, "moving") == (Action.R,)
    with pytest.raises(ValueError):
        available_actions(corridor, "nope")


def test_planning_error_zero_is_identity(room, rng):
    p = ErrorParams(eps_p=0.0)
    assert all(inject_planning_error(room, Action.R, 10, p, rng) is Action.R for _ in range(200))


def test_planning_error_one_forces_nonviable(corridor, rng):
    p = ErrorParams(eps_p=1.0)
    for _ in range(200):
        a = inject_planning_error(corridor, Action.R, 1, p, rng)
        assert not viable_actions(corridor, 1).is_viable(a)


def test_planning_error_uniform_alternative_when_none_nonviable(room, rng):
    # with a huge budget every action is viable in an open room, so any alternative is allowed
    p = ErrorParams(eps_p=1.0)
    assert viable_actions(room, 1000).non_viable == ()
    counts = Counter(inject_planning_error(room, Action.R, 1000, p, rng) for _ in range(3000))
    assert set(counts) == {Action.U, Action.D, Action.L}


def test_planning_error_singleton_available(corridor, rng):
    p = ErrorParams(eps_p=1.0)
    assert inject_planning_error(corridor, Action.R, 1, p, rng, available=(Action.R,)) is Action.R


def test_planning_error_frequency(corridor):
    rng = RngStream(1, "pe")
    p = ErrorParams(eps_p=0.25)
    n = 100_000
    hits = sum(inject_planning_error(corridor, Action.R, 1, p, rng) is not Action.R for _ in range(n))
    assert within_3sigma(hits / n, 0.25, n)


def test_sampling_error_identity_and_singleton(rng):
    p0 = ErrorParams(eps_s=0.0)
    assert all(inject_sampling_error(Action.U, ACTIONS, p0, rng) is Action.U for _ in range(100))
    assert inject_sampling_error(Action.U, (Action.U,), ErrorParams(eps_s=1.0), rng) is Action.U


def test_sampling_error_uniform_chi_square():
    rng = RngStream(2, "se")
    counts = Counter(inject_sampling_error(Action.R, ACTIONS, ErrorParams(eps_s=1.0), rng) for _ in range(100_000))
    assert Action.R not in counts
    obs = [counts[a] for a in (Action.U, Action.D, Action.L)]
    assert stats.chisquare(obs).pvalue > 1e-3


def test_sampling_error_frequency():
    rng = RngStream(3, "se2")
    n = 100_000
    flips = sum(inject_sampling_error(Action.D, ACTIONS, ErrorParams(eps_s=0.2), rng) is not Action.D for _ in range(n))
    assert within_3sigma(flips / n, 0.2, n)


def _rec(pairs, status=TerminalStatus.BUDGET_EXHAUSTED):
    steps = [
        StepRecord("p=0,0|b=", i, e, iv, ev, Budget((len(pairs) - k - 1,)))
        for k, (i, e, iv, ev) in enumerate(pairs)
    ]
    return TrajectoryRecord.close(steps, status)


def test_estimate_all_clean():
    est = estimate_errors([_rec([("R", "R", True, True)] * 5, TerminalStatus.GOAL_REACHED)])
    assert (est.planning_rate, est.sampling_rate, est.delta_b_hat, est.delta_r_hat) == (0.0, 0.0, None, None)


def test_estimate_three_of_ten_nonviable():
    pairs = [("U", "U", False, False)] * 3 + [("R", "R", True, True)] * 7
    est = estimate_errors([_rec(pairs)])
    assert est.planning_rate == pytest.approx(0.3)


def test_estimate_conditional_deltas_and_denominators():
    pairs = [
        ("R", "U", True, False),  # viable flip that breaks
        ("R", "D", True, True),  # viable flip, harmless
        ("L", "R", False, True),  # non-viable flip that recovers
        ("L", "L", False, False),
    ]
    est = estimate_errors([_rec(pairs)], opportunities=[[True, False, True, True]])
    assert est.delta_b_hat == 0.5 and est.delta_r_hat == 1.0
    assert est.sampling_rate == 0.75 and est.planning_rate == 0.5
    assert est.conditional_planning_rate == pytest.approx(2 / 3)
    d = est.to_dict()
    assert d["denominators"] == {
        "planning_rate": 4,
        "sampling_rate": 4,
        "delta_b_hat": 2,
        "delta_r_hat": 1,
        "conditional_planning_rate": 3,
    }


def test_empty_estimate_reports_absent_rates():
    est = estimate_errors([])
    assert est.planning_rate is None and est.sampling_rate is None


def _react_logs(eps_p, eps_s, n_eps, label):
    cfg = AgentConfig(Framework.REACT, ErrorParams(eps_p, eps_s))
    insts = [generate_instance(RngStream(i, f"{label}-map"), 8) for i in range(5)]
    recs, opps = [], []
    for t in range(n_eps):
        inst = insts[t % len(insts)]
        res = run_episode(inst, cfg, RngStream(t, label))
        recs.append(res.record)
        opps.append(planning_opportunities(inst, res.record))
    return insts, recs, opps


def test_estimator_round_trip_on_react():
    _, recs, opps = _react_logs(0.25, 0.2, 3000, "rt")
    est = estimate_errors(recs, opps)
    n_steps = est.counts["steps"]
    n_opp = est.counts["opportunity_steps"]
    assert n_steps >= 10_000
    assert within_3sigma(est.sampling_rate, 0.2, n_steps)
    assert within_3sigma(est.conditional_planning_rate, 0.25, n_opp)


def test_flip_rate_independent_of_intended_viability():
    _, recs, _ = _react_logs(0.5, 0.3, 2000, "ci")
    groups = {True: [0, 0], False: [0, 0]}
    for r in recs:
        for s in r.steps:
            g = groups[s.intended_viable]
            g[0] += 1
            g[1] += s.executed_action != s.intended_action
    (n1, f1), (n0, f0) = groups[True], groups[False]
    pooled = (f1 + f0) / (n1 + n0)
    se = math.sqrt(pooled * (1 - pooled) * (1 / n1 + 1 / n0))
    assert abs(f1 / n1 - f0 / n0) <= 3 * se


def test_replay_reproduces_budgets_and_terminal():
    insts, recs, _ = _react_logs(0.25, 0.2, 40, "rp")
    for t, rec in enumerate(recs):
        inst = insts[t % len(insts)]
        final, budgets = replay(inst, rec)
        assert budgets == [s.budget_after for s in rec.steps]
        status = rec.terminal_status
        if status is TerminalStatus.GOAL_REACHED:
            assert DEFAULT_ORACLE.distance(final) == 0
        elif status is TerminalStatus.DEAD_END:
            assert DEFAULT_ORACLE.is_dead_end(final, budgets[-1].steps if budgets else inst.budget.steps)
        else:
            assert budgets[-1].steps == 0


def test_chain_error_free_is_exactly_one():
    for v in ("ReAct", "PA", "Ours"):
        assert simulate_abstract_chain(ErrorParams(), 7, v, 1000, RngStream(0, v)) == 1.0


def test_chain_react_hand_value():
    p = ErrorParams(eps_p=0.25, eps_s=0.2, delta_b=1.0, delta_r=0.0)
    n = 100_000
    hat = simulate_abstract_chain(p, 4, "ReAct", n, RngStream(0, "c1"))
    assert within_3sigma(hat, 0.6**4, n)


def test_chain_ours_hand_value():
    n = 100_000
    hat = simulate_abstract_chain(ErrorParams(eps_p=0.5), 2, "Ours", n, RngStream(0, "c2"), d=3)
    assert within_3sigma(hat, 0.765625, n)


def test_chain_rejects_bad_arguments():
    with pytest.raises(ValueError):
        simulate_abstract_chain(ErrorParams(), 0, "ReAct", 10, RngStream(0))
    with pytest.raises(ValueError):
        simulate_abstract_chain(ErrorParams(), 2, "Reflexion", 10, RngStream(0))
    with pytest.raises(ValueError):
        simulate_abstract_chain(ErrorParams(), 2, "Ours", 10, RngStream(0), d=[1])
