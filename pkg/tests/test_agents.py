import math

import pytest

from tapelab.agents import AgentConfig, Framework, run_best_of_n, run_episode, run_plan_and_act, run_react, run_tape
from tapelab.core import RngStream, TerminalStatus
from tapelab.errors import ErrorParams, replay
from tapelab.oracle import DEFAULT_ORACLE
from tapelab.sokoban import generate_instance

NOISY = ErrorParams(eps_p=0.25, eps_s=0.2)


def maps(T, n=5, label="ag"):
    return [generate_instance(RngStream(i, f"{label}{T}"), T) for i in range(n)]


def rate(instances, cfg, trials, label):
    wins = 0
    for i, inst in enumerate(instances):
        for t in range(trials):
            wins += run_episode(inst, cfg, RngStream(t, f"{label}/{i}")).success
    return wins / (len(instances) * trials)


@pytest.mark.parametrize("fw", list(Framework))
def test_noise_free_solves_in_t_star(fw):
    for inst in maps(6) + maps(10):
        res = run_episode(inst, AgentConfig(fw, ErrorParams(), M=1), RngStream(0, "nf"))
        assert res.success and res.steps_used == inst.optimal_length and res.replans == 0


def test_config_validation():
    with pytest.raises(ValueError):
        AgentConfig(Framework.TAPE, M=0)
    with pytest.raises(ValueError):
        AgentConfig(Framework.TAPE, scorer="llm")
    with pytest.raises(ValueError):
        AgentConfig("Reflexion")
    assert AgentConfig("TAPE").framework is Framework.TAPE


def test_best_of_n_rejects_other_frameworks():
    with pytest.raises(ValueError):
        run_best_of_n(maps(4, 1)[0], AgentConfig(Framework.REACT), RngStream(0))


def test_react_forced_error_at_step_zero_fails():
    inst = maps(6, 1)[0].with_slack(0)  # zero slack: every non-optimal action is non-viable
    v = DEFAULT_ORACLE.viable_actions(inst.initial, inst.budget)
    assert v.non_viable
    cfg = AgentConfig(Framework.REACT, ErrorParams(eps_p=1.0))
    for t in range(20):
        res = run_react(inst, cfg, RngStream(t, "forced"))
        assert not res.success and not res.record.steps[0].intended_viable


def test_react_degrades_with_t_star():
    cfg = AgentConfig(Framework.REACT, NOISY)
    easy, hard = rate(maps(2), cfg, 200, "e"), rate(maps(10), cfg, 200, "h")
    assert easy < 1.0 and hard < easy


def test_pa_follow_one_eliminates_sampling_error_on_plan():
    cfg = AgentConfig(Framework.PLAN_AND_ACT, ErrorParams(eps_p=0.0, eps_s=0.5, p_follow=1.0))
    for inst in maps(8):
        res = run_plan_and_act(inst, cfg, RngStream(0, "pa1"))
        assert res.success and res.sampling_err_steps == 0


def test_pa_follow_one_measured_rates():
    cfg = AgentConfig(Framework.PLAN_AND_ACT, ErrorParams(eps_p=0.25, eps_s=0.2, p_follow=1.0))
    steps = flips = 0
    for i, inst in enumerate(maps(6)):
        for t in range(200):
            res = run_episode(inst, cfg, RngStream(t, f"pf{i}"))
            steps += res.steps_used
            flips += res.sampling_err_steps
            assert res.followed_steps == res.aligned_steps
    # every off-plan step is a ReAct step, so a little sampling error remains
    assert flips / steps < 0.2 / 2


def test_pa_follow_zero_matches_react_distribution():
    insts = maps(6, 10, "pz")
    pa = rate(insts, AgentConfig(Framework.PLAN_AND_ACT, ErrorParams(0.25, 0.2, p_follow=0.0)), 1000, "z")
    re = rate(insts, AgentConfig(Framework.REACT, NOISY), 1000, "z")
    n = 10_000
    pooled = (pa + re) / 2
    assert abs(pa - re) <= 3 * math.sqrt(2 * pooled * (1 - pooled) / n)


def test_best_of_one_equals_base_framework():
    for base, bon in [(Framework.REACT, Framework.REACT_BEST_OF_N), (Framework.PLAN_AND_ACT, Framework.PLAN_AND_ACT_BEST_OF_N)]:
        for i, inst in enumerate(maps(6)):
            for t in range(20):
                a = run_episode(inst, AgentConfig(base, NOISY), RngStream(t, f"b1{i}"))
                b = run_episode(inst, AgentConfig(bon, NOISY, M=1), RngStream(t, f"b1{i}"))
                assert a.record == b.record


def test_best_of_four_nonviable_intention_rate():
    # where a non-viable alternative exists, all four candidates must fail for the pick to fail
    cfg = AgentConfig(Framework.REACT_BEST_OF_N, NOISY, M=4)
    from tapelab.errors import planning_opportunities

    n = bad = 0
    for i, inst in enumerate(maps(8)):
        for t in range(1500):
            res = run_episode(inst, cfg, RngStream(t, f"bo{i}"))
            for flag, s in zip(planning_opportunities(inst, res.record), res.record.steps):
                n += flag
                bad += flag and not s.intended_viable
        if n >= 30_000:
            break
    target = 0.25**4
    assert abs(bad / n - target) <= 3 * math.sqrt(target * (1 - target) / n)


def test_tape_noise_free_single_plan():
    for inst in maps(10):
        res = run_tape(inst, AgentConfig(Framework.TAPE, ErrorParams(), M=1), RngStream(1, "t"))
        assert res.success and res.steps_used == inst.optimal_length and res.replans == 0


def test_tape_constrained_execution_zero_sampling_error():
    cfg = AgentConfig(Framework.TAPE, NOISY, M=4)
    for i, inst in enumerate(maps(8)):
        for t in range(50):
            res = run_tape(inst, cfg, RngStream(t, f"ce{i}"))
            assert res.sampling_err_steps == 0
            assert all(s.executed_action == s.intended_action for s in res.record.steps)


def test_tape_replans_only_on_mismatch():
    # with constrained execution and true dynamics the prediction never misses
    cfg = AgentConfig(Framework.TAPE, NOISY, M=4)
    for i, inst in enumerate(maps(8)):
        for t in range(30):
            assert run_tape(inst, cfg, RngStream(t, f"rp{i}")).replans == 0
    loose = AgentConfig(Framework.TAPE, ErrorParams(0.25, 0.5), M=4, use_constrained_execution=False)
    total = sum(run_tape(inst, loose, RngStream(t, "lo")).replans for inst in maps(8) for t in range(20))
    assert total > 0
    halluc = AgentConfig(Framework.TAPE, ErrorParams(), M=2, hallucination_rate=0.3)
    total = sum(run_tape(inst, halluc, RngStream(t, "ha")).replans for inst in maps(8) for t in range(20))
    assert total > 0


def test_tape_ablation_all_off_underperforms():
    insts = maps(6, 10, "abl")
    full = rate(insts, AgentConfig(Framework.TAPE, NOISY), 100, "a")
    off = rate(
        insts,
        AgentConfig(Framework.TAPE, NOISY, use_solver=False, use_constrained_execution=False, use_replanning=False),
        100,
        "a",
    )
    assert full - off > 3 * math.sqrt((full * (1 - full) + off * (1 - off)) / 1000)


def test_tape_max_replans_cap():
    cfg = AgentConfig(Framework.TAPE, ErrorParams(0.0, 0.0), M=2, hallucination_rate=0.3, max_replans=0)
    seen = 0
    for inst in maps(8):
        for t in range(20):
            res = run_tape(inst, cfg, RngStream(t, "cap"))
            assert res.replans <= 1
            if res.replans == 1:
                seen += 1
                assert res.record.terminal_status is TerminalStatus.HORIZON_EXCEEDED
    assert seen > 0


@pytest.mark.parametrize("fw", list(Framework))
def test_episode_invariants(fw):
    cfg = AgentConfig(fw, NOISY)
    for i, inst in enumerate(maps(8)):
        for t in range(15):
            res = run_episode(inst, cfg, RngStream(t, f"inv{i}"))
            assert res.steps_used == len(res.record.steps) <= inst.budget.steps
            final, budgets = replay(inst, res.record)
            assert budgets == [s.budget_after for s in res.record.steps]
            left = budgets[-1].steps if budgets else inst.budget.steps
            status = res.record.terminal_status
            if status is TerminalStatus.GOAL_REACHED:
                assert DEFAULT_ORACLE.distance(final) == 0
            elif status is TerminalStatus.DEAD_END:
                assert DEFAULT_ORACLE.is_dead_end(final, left)
            # dead-end absorption: after the first non-viable executed action the goal is never reached
            first_bad = next((k for k, s in enumerate(res.record.steps) if not s.executed_viable), None)
            if first_bad is not None:
                assert not res.success


def test_episode_determinism():
    inst = maps(8, 1)[0]
    for fw in Framework:
        cfg = AgentConfig(fw, NOISY)
        assert run_episode(inst, cfg, RngStream(3, "d")).record == run_episode(inst, cfg, RngStream(3, "d")).record
