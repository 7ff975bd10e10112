"""Command-line entry point: ``tapelab <subcommand>``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from pydantic import ValidationError

from . import harness
from .core import RngStream, records_from_jsonl
from .errors import estimate_errors
from .oracle import Unsolvable, shortest_plan
from .sokoban import GenerationExhausted, SokobanInstance, generate_instance, render
from .solver import PathSelectionProblem, solve

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_CHECK = 3


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _fail(msg: str, code: int) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


def cmd_gen_maps(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for T in args.t_star:
        for i in range(args.count):
            rng = RngStream(args.seed, f"map/T{T}/m{i}")
            try:
                inst = generate_instance(
                    rng, T, boxes=args.boxes, dims=(args.width, args.height), slack=args.slack
                )
            except (GenerationExhausted, ValueError) as exc:
                return _fail(str(exc), EXIT_CONFIG)
            path = out / f"map_T{T}_{i:02d}.json"
            inst.save(path)
            print(path)
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        config = harness.load_config(args.config)
    except harness.ConfigError as exc:
        return _fail(f"invalid config {args.config}:\n{exc}", EXIT_CONFIG)
    out_dir = args.out or config.output_dir
    try:
        table = harness.run_experiment(config, out_dir)
    except harness.ConfigError as exc:
        return _fail(str(exc), EXIT_CONFIG)
    print(f"wrote {len(table.rows)} rows to {out_dir}")
    if args.check:
        problems = harness.check_properties(config, table)
        for p in problems:
            print(f"CHECK FAILED: {p}", file=sys.stderr)
        if problems:
            return EXIT_CHECK
        print("all checks passed")
    return EXIT_OK


def cmd_bounds(args) -> int:
    try:
        grid = harness.BoundsGridModel.model_validate_json(Path(args.grid).read_text(encoding="utf-8"))
    except OSError as exc:
        return _fail(str(exc), EXIT_CONFIG)
    except ValidationError as exc:
        return _fail(f"invalid grid {args.grid}:\n{harness.format_validation_error(exc)}", EXIT_CONFIG)
    text = harness.bounds_csv(grid, args.seed)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_solve(args) -> int:
    try:
        problem = PathSelectionProblem.load(args.problem)
    except (OSError, KeyError, TypeError, ValueError) as exc:
        return _fail(f"bad problem file: {exc}", EXIT_CONFIG)
    _emit(solve(problem).to_dict())
    return EXIT_OK


def cmd_oracle_solve(args) -> int:
    try:
        inst = SokobanInstance.load(args.instance)
    except (OSError, KeyError, TypeError, ValueError) as exc:
        return _fail(f"bad instance file: {exc}", EXIT_CONFIG)
    try:
        plan = shortest_plan(inst.initial)
    except Unsolvable:
        _emit({"solvable": False})
        return EXIT_ERROR
    _emit({"solvable": True, "length": plan.length, "actions": [a.value for a in plan.actions]})
    if args.show:
        print(render(inst.initial), file=sys.stderr)
    return EXIT_OK


def cmd_estimate_errors(args) -> int:
    try:
        records = records_from_jsonl(args.jsonl)
    except (OSError, KeyError, ValueError) as exc:
        return _fail(f"cannot read records: {exc}", EXIT_CONFIG)
    _emit(estimate_errors(records).to_dict())
    return EXIT_OK


def cmd_schema(args) -> int:
    _emit(harness.config_schema())
    return EXIT_OK


def cmd_preset(args) -> int:
    try:
        cfg = harness.preset_config(args.experiment)
    except harness.ConfigError as exc:
        return _fail(str(exc), EXIT_CONFIG)
    _emit(cfg.model_dump(mode="json", exclude_none=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tapelab", description="Oracle-surrogate agent simulation lab on Sokoban.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-maps", help="generate Sokoban instances with a fixed optimal length")
    g.add_argument("--t-star", type=int, nargs="+", default=[6])
    g.add_argument("--count", type=int, default=10)
    g.add_argument("--slack", type=int, default=2)
    g.add_argument("--boxes", type=int, default=1)
    g.add_argument("--width", type=int, default=7)
    g.add_argument("--height", type=int, default=7)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default="maps")
    g.set_defaults(func=cmd_gen_maps)

    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides output_dir)")
    r.add_argument("--check", action="store_true", help="exit 3 if an experiment property is violated")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bounds", help="evaluate closed-form success bounds over a grid")
    b.add_argument("--grid", required=True)
    b.add_argument("--out")
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=cmd_bounds)

    s = sub.add_parser("solve", help="solve a path-selection problem JSON")
    s.add_argument("problem")
    s.set_defaults(func=cmd_solve)

    o = sub.add_parser("oracle", help="BFS oracle utilities")
    osub = o.add_subparsers(dest="oracle_command", required=True)
    os_ = osub.add_parser("solve", help="shortest plan for an instance JSON")
    os_.add_argument("instance")
    os_.add_argument("--show", action="store_true", help="render the grid to stderr")
    os_.set_defaults(func=cmd_oracle_solve)

    e = sub.add_parser("estimate-errors", help="empirical error rates from a trajectory JSONL")
    e.add_argument("jsonl")
    e.set_defaults(func=cmd_estimate_errors)

    sc = sub.add_parser("schema", help="print the experiment config JSON schema")
    sc.set_defaults(func=cmd_schema)

    pr = sub.add_parser("preset", help="print a default config for an experiment kind")
    pr.add_argument("experiment", choices=harness.EXPERIMENTS)
    pr.set_defaults(func=cmd_preset)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
