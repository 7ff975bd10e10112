import json

import pytest

from tapelab import harness
from tapelab.cli import EXIT_CHECK, EXIT_CONFIG, EXIT_ERROR, EXIT_OK, main
from tapelab.core import Budget, RngStream
from tapelab.sokoban import SokobanInstance, generate_instance, parse


def small_config(tmp_path, experiment="error_table"):
    cfg = harness.preset_config(experiment).model_dump(mode="json", exclude_none=True)
    cfg["maps"]["count"] = 1
    cfg["trials_per_cell"] = 4
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def test_gen_maps(tmp_path, capsys):
    out = tmp_path / "maps"
    assert main(["gen-maps", "--t-star", "3", "5", "--count", "2", "--out", str(out)]) == EXIT_OK
    files = sorted(out.glob("*.json"))
    assert len(files) == 4
    inst = SokobanInstance.load(out / "map_T5_01.json")
    assert inst.optimal_length == 5 and inst.budget.steps == 7


def test_gen_maps_impossible(tmp_path):
    assert main(["gen-maps", "--t-star", "0", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_run_and_check(tmp_path, capsys):
    path = small_config(tmp_path)
    out = tmp_path / "out"
    assert main(["run", str(path), "--out", str(out), "--check"]) == EXIT_OK
    assert (out / "results.csv").exists() and (out / "episodes.jsonl").exists()
    assert "all checks passed" in capsys.readouterr().out


def test_run_check_violation_exit_code(tmp_path, monkeypatch):
    path = small_config(tmp_path)
    monkeypatch.setattr(harness, "check_properties", lambda cfg, table: ["forced"])
    assert main(["run", str(path), "--out", str(tmp_path / "o"), "--check"]) == EXIT_CHECK


def test_run_bad_config(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"experiment": "fig1b_curve", "frameworks": [{"framework": "Nope"}]}))
    assert main(["run", str(path)]) == EXIT_CONFIG
    assert "frameworks.0.framework" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.json")]) == EXIT_CONFIG


def test_bounds(tmp_path, capsys):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"eps_p": [0.1], "eps_s": [0.2], "delta_b": [1.0], "delta_r": [0.0], "T": [1, 2]}))
    assert main(["bounds", "--grid", str(grid)]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 3 and lines[0].startswith("eps_p")
    grid.write_text(json.dumps({"eps_p": [2.0]}))
    assert main(["bounds", "--grid", str(grid)]) == EXIT_CONFIG


def test_solve(tmp_path, capsys):
    problem = {
        "num_nodes": 3,
        "edges": [{"src": 0, "tgt": 1, "cost": [1]}, {"src": 1, "tgt": 2, "cost": [1]}],
        "rewards": [1.0, 0.0, 1.0],
        "root": 0,
        "terminals": [2],
        "horizon": 2,
        "budget": [5],
    }
    path = tmp_path / "p.json"
    path.write_text(json.dumps(problem))
    rc = main(["solve", str(path)])
    out = json.loads(capsys.readouterr().out)
    assert rc == EXIT_OK and out["status"] == "Optimal" and out["walk"] == [0, 1] and out["objective"] == 1.0
    path.write_text("{}")
    assert main(["solve", str(path)]) == EXIT_CONFIG


def test_oracle_solve(tmp_path, capsys):
    inst = generate_instance(RngStream(3, "cli"), 4)
    path = tmp_path / "i.json"
    inst.save(path)
    assert main(["oracle", "solve", str(path), "--show"]) == EXIT_OK
    captured = capsys.readouterr()
    out = json.loads(captured.out)
    assert out["length"] == 4 and len(out["actions"]) == 4
    assert "@" in captured.err or "+" in captured.err


def test_oracle_unsolvable(tmp_path, capsys):
    inst = SokobanInstance(parse("#####\n#$@G#\n#####"), 1, Budget((3,)))
    path = tmp_path / "u.json"
    path.write_text(json.dumps(inst.to_dict()))
    assert main(["oracle", "solve", str(path)]) == EXIT_ERROR
    assert json.loads(capsys.readouterr().out) == {"solvable": False}


def test_estimate_errors(tmp_path, capsys):
    path = small_config(tmp_path)
    out = tmp_path / "out"
    main(["run", str(path), "--out", str(out)])
    capsys.readouterr()
    assert main(["estimate-errors", str(out / "episodes.jsonl")]) == EXIT_OK
    est = json.loads(capsys.readouterr().out)
    assert 0 <= est["planning_rate"] <= 1 and est["denominators"]["sampling_rate"] > 0
    assert main(["estimate-errors", str(tmp_path / "none.jsonl")]) == EXIT_CONFIG


def test_schema_and_preset(capsys):
    assert main(["schema"]) == EXIT_OK
    assert "properties" in json.loads(capsys.readouterr().out)
    assert main(["preset", "ablation_grid"]) == EXIT_OK
    cfg = harness.ExperimentConfig.model_validate(json.loads(capsys.readouterr().out))
    assert len(cfg.frameworks) == 5


def test_unknown_subcommand():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
