"""Experiment orchestration: config schema, cell grid execution, CSV/JSONL artifacts and paired comparisons."""

from __future__ import annotations

import csv
import io
import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Literal, Sequence

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .agents import AgentConfig, EpisodeResult, Framework, run_episode
from .bounds import BoundInput, u_ours, u_pa, u_react
from .core import RngStream, write_jsonl
from .errors import ErrorParams, planning_opportunities, simulate_abstract_chain
from .oracle import DEFAULT_ORACLE
from .sokoban import SokobanInstance, generate_instance

WORKERS_ENV = "TAPELAB_WORKERS"
SIGMA = 3.0
MIN_PAIRED = 30

EXPERIMENTS = (
    "fig1b_curve",
    "error_table",
    "budget_sweep",
    "m_sensitivity",
    "ablation_grid",
    "bounds_grid",
    "bestofn_compare",
)

EPISODE_COLUMNS = [
    "framework",
    "map_id",
    "trial",
    "T_star",
    "budget",
    "success",
    "steps_used",
    "replans",
    "planning_err_steps",
    "sampling_err_steps",
    "slack",
    "M",
    "terminal_status",
    "solver_infeasible",
    "aligned_steps",
    "followed_steps",
    "opportunity_steps",
    "opportunity_err_steps",
]

RESULT_COLUMNS = [
    "experiment",
    "framework",
    "T_star",
    "slack",
    "budget",
    "M",
    "n",
    "success_mean",
    "success_stderr",
    "planning_error",
    "planning_error_stderr",
    "conditional_planning_error",
    "sampling_error",
    "sampling_error_stderr",
    "steps_used_mean",
    "steps_per_budget",
    "replans_mean",
    "solver_infeasible_mean",
    "alignment_rate",
]

BOUND_COLUMNS = ["eps_p", "eps_s", "delta_b", "delta_r", "T", "alpha", "p_follow", "d", "U_ReAct", "U_PA", "U_ours"]
CHAIN_COLUMNS = ["MC_ReAct", "MC_PA", "MC_Ours", "mc_trials"]


class ConfigError(ValueError):
    pass


class InsufficientSamples(ValueError):
    pass


# --------------------------------------------------------------------------- config


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ErrorsModel(_Strict):
    eps_p: float = Field(0.25, ge=0.0, le=1.0)
    eps_s: float = Field(0.20, ge=0.0, le=1.0)
    p_follow: float = Field(0.9, ge=0.0, le=1.0)
    delta_b: float = Field(1.0, ge=0.0, le=1.0)
    delta_r: float = Field(0.0, ge=0.0, le=1.0)

    def params(self) -> ErrorParams:
        return ErrorParams(self.eps_p, self.eps_s, self.p_follow, self.delta_b, self.delta_r)


class FrameworkModel(_Strict):
    framework: Framework
    name: str | None = None
    M: int = Field(4, ge=1)
    l_max: int | None = Field(None, ge=1)
    use_solver: bool = True
    use_constrained_execution: bool = True
    use_replanning: bool = True
    scorer: Literal["oracle", "random"] = "oracle"
    availability: Literal["all", "moving"] = "all"
    hallucination_rate: float = Field(0.0, ge=0.0, le=1.0)
    annotate_mode: Literal["oracle", "noisy"] = "oracle"
    annotate_flip_rate: float = Field(0.0, ge=0.0, le=1.0)
    max_replans: int | None = Field(None, ge=0)
    errors: ErrorsModel | None = None

    @property
    def label(self) -> str:
        return self.name or self.framework.value

    def agent(self, default_errors: ErrorsModel, M: int | None = None, label: str | None = None) -> AgentConfig:
        return AgentConfig(
            framework=self.framework,
            error_params=(self.errors or default_errors).params(),
            M=self.M if M is None else M,
            l_max=self.l_max,
            use_solver=self.use_solver,
            use_constrained_execution=self.use_constrained_execution,
            use_replanning=self.use_replanning,
            scorer=self.scorer,
            availability=self.availability,
            hallucination_rate=self.hallucination_rate,
            annotate_mode=self.annotate_mode,
            annotate_flip_rate=self.annotate_flip_rate,
            max_replans=self.max_replans,
            name=label or self.label,
        )


class MapsModel(_Strict):
    count: int = Field(10, ge=1)
    T_star: list[int] = Field(default_factory=lambda: [6])
    slack: list[int] | None = None
    boxes: int = Field(1, ge=1)
    width: int = Field(7, ge=3)
    height: int = Field(7, ge=3)
    wall_density: float = Field(0.2, ge=0.0, le=1.0)
    instance_files: list[str] | None = None

    @model_validator(mode="after")
    def _check(self) -> MapsModel:
        if any(t < 1 for t in self.T_star):
            raise ValueError("T_star entries must be >= 1")
        if self.slack is not None and (not self.slack or any(s < 0 for s in self.slack)):
            raise ValueError("slack must be a non-empty list of non-negative integers")
        for f in self.instance_files or ():
            if not Path(f).is_file():
                raise ValueError(f"instance file not found: {f}")
        return self


class BoundsGridModel(_Strict):
    eps_p: list[float]
    eps_s: list[float]
    delta_b: list[float]
    delta_r: list[float]
    T: list[int]
    alpha: list[float] = Field(default_factory=lambda: [1.0])
    p_follow: list[float] = Field(default_factory=lambda: [0.9])
    d: list[int] = Field(default_factory=lambda: [1])
    mc_trials: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _check(self) -> BoundsGridModel:
        for name in ("eps_p", "eps_s", "delta_b", "delta_r", "alpha", "p_follow"):
            vals = getattr(self, name)
            if not vals or any(not 0.0 <= v <= 1.0 for v in vals):
                raise ValueError(f"{name} must be a non-empty list of probabilities")
        if not self.T or any(t < 1 for t in self.T) or not self.d or any(d < 1 for d in self.d):
            raise ValueError("T and d must be non-empty lists of integers >= 1")
        return self

    def points(self) -> list[BoundInput]:
        grid = itertools.product(
            self.eps_p, self.eps_s, self.delta_b, self.delta_r, self.T, self.alpha, self.p_follow, self.d
        )
        return [BoundInput(ep, es, db, dr, T, a, pf, (d,) * T) for ep, es, db, dr, T, a, pf, d in grid]


class ExperimentConfig(_Strict):
    experiment: Literal[EXPERIMENTS]  # type: ignore[valid-type]
    errors: ErrorsModel = Field(default_factory=ErrorsModel)
    maps: MapsModel = Field(default_factory=MapsModel)
    frameworks: list[FrameworkModel] = Field(default_factory=list)
    M_values: list[int] | None = None
    trials_per_cell: int = Field(100, ge=1)
    master_seed: int = Field(0, ge=0, lt=2**64)
    output_dir: str = "results"
    bounds: BoundsGridModel | None = None

    @model_validator(mode="after")
    def _check(self) -> ExperimentConfig:
        if self.experiment == "bounds_grid":
            if self.bounds is None:
                raise ValueError("bounds_grid needs a 'bounds' section")
            return self
        if not self.frameworks:
            raise ValueError("at least one framework is required")
        if self.M_values is not None and (not self.M_values or any(m < 1 for m in self.M_values)):
            raise ValueError("M_values entries must be >= 1")
        labels = [label for label, _ in self.agents()]
        if len(set(labels)) != len(labels):
            raise ValueError(f"framework labels must be unique, got {labels}")
        return self

    def agents(self) -> list[tuple[str, AgentConfig]]:
        """Framework entries expanded over ``M_values`` when given."""
        out = []
        for fw in self.frameworks:
            if self.M_values is None:
                out.append((fw.label, fw.agent(self.errors)))
            else:
                for m in self.M_values:
                    label = f"{fw.label}[M={m}]"
                    out.append((label, fw.agent(self.errors, M=m, label=label)))
        return out


def format_validation_error(exc) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{loc}: {err['msg']}")
    return "\n".join(lines)


def load_config(path) -> ExperimentConfig:
    """Parse and validate a JSON config; schema violations raise ConfigError naming the offending path."""
    from pydantic import ValidationError

    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        return ExperimentConfig.model_validate_json(text)
    except ValidationError as exc:
        raise ConfigError(format_validation_error(exc)) from exc


def config_schema() -> dict[str, Any]:
    return ExperimentConfig.model_json_schema()


def _tape(name: str, **flags) -> FrameworkModel:
    return FrameworkModel(framework=Framework.TAPE, name=name, **flags)


def preset_config(experiment: str, **overrides) -> ExperimentConfig:
    """Desk-scale default configuration for each experiment kind."""
    F = FrameworkModel
    react, pa, tape = F(framework="ReAct"), F(framework="PlanAndAct"), F(framework="TAPE")
    base: dict[str, Any] = {"experiment": experiment}
    if experiment == "fig1b_curve":
        base.update(maps={"T_star": list(range(2, 13))}, frameworks=[react, pa, tape])
    elif experiment == "error_table":
        base.update(maps={"T_star": [6]}, frameworks=[react, pa, tape])
    elif experiment == "budget_sweep":
        base.update(maps={"T_star": [6], "slack": [2, 4, 8, 16]}, frameworks=[react, pa, tape])
    elif experiment == "m_sensitivity":
        base.update(maps={"T_star": [6]}, frameworks=[tape], M_values=[1, 2, 4, 8])
    elif experiment == "ablation_grid":
        base.update(
            maps={"T_star": [6]},
            frameworks=[
                _tape("TAPE"),
                _tape("TAPE-no-solver", use_solver=False),
                _tape("TAPE-no-constrained-exec", use_constrained_execution=False),
                _tape("TAPE-no-replan", use_replanning=False),
                _tape("TAPE-all-off", use_solver=False, use_constrained_execution=False, use_replanning=False),
            ],
        )
    elif experiment == "bestofn_compare":
        base.update(
            maps={"T_star": [6]},
            frameworks=[react, F(framework="ReActBestOfN"), pa, F(framework="PlanAndActBestOfN"), tape],
        )
    elif experiment == "bounds_grid":
        base.update(
            bounds={
                "eps_p": [0.1, 0.25, 0.5],
                "eps_s": [0.1, 0.2],
                "delta_b": [0.5, 1.0],
                "delta_r": [0.0, 0.5],
                "T": list(range(1, 11)),
                "d": [3],
            }
        )
    else:
        raise ConfigError(f"unknown experiment {experiment!r}")
    base.update(overrides)
    return ExperimentConfig.model_validate(base)


# --------------------------------------------------------------------------- instances


def generate_maps(config: ExperimentConfig) -> list[tuple[int, SokobanInstance]]:
    """(map_id, instance) pairs; generated maps are keyed by (master_seed, T*, map_id)."""
    m = config.maps
    if m.instance_files:
        return [(i, SokobanInstance.load(f)) for i, f in enumerate(m.instance_files)]
    base_slack = m.slack[0] if m.slack else 2
    out = []
    for T in m.T_star:
        for i in range(m.count):
            rng = RngStream(config.master_seed, f"map/T{T}/m{i}")
            inst = generate_instance(
                rng, T, boxes=m.boxes, dims=(m.width, m.height), slack=base_slack, wall_density=m.wall_density
            )
            out.append((i, inst))
    return out


def episode_rng(master_seed: int, T_star: int, map_id: int, trial: int) -> RngStream:
    """Shared by every framework so comparisons are paired on identical randomness."""
    return RngStream(master_seed, f"episode/T{T_star}/m{map_id}/t{trial}")


# --------------------------------------------------------------------------- execution


@dataclass(frozen=True)
class _Task:
    label: str
    agent: AgentConfig
    map_id: int
    instance: SokobanInstance
    slack: int
    trials: int
    master_seed: int


def _episode_row(task: _Task, trial: int, inst: SokobanInstance, res: EpisodeResult) -> dict[str, Any]:
    opp = planning_opportunities(inst, res.record, DEFAULT_ORACLE, task.agent.availability)
    return {
        "framework": task.label,
        "map_id": task.map_id,
        "trial": trial,
        "T_star": inst.optimal_length,
        "budget": inst.budget.steps,
        "success": int(res.success),
        "steps_used": res.steps_used,
        "replans": res.replans,
        "planning_err_steps": res.planning_err_steps,
        "sampling_err_steps": res.sampling_err_steps,
        "slack": task.slack,
        "M": task.agent.M,
        "terminal_status": res.record.terminal_status.value,
        "solver_infeasible": res.solver_infeasible_count,
        "aligned_steps": res.aligned_steps,
        "followed_steps": res.followed_steps,
        "opportunity_steps": sum(opp),
        "opportunity_err_steps": sum(f and not s.intended_viable for f, s in zip(opp, res.record.steps)),
    }


def _run_task(task: _Task) -> list[tuple[dict[str, Any], dict[str, Any]]]:
    inst = task.instance.with_slack(task.slack)
    out = []
    for trial in range(task.trials):
        rng = episode_rng(task.master_seed, inst.optimal_length, task.map_id, trial)
        res = run_episode(inst, task.agent, rng)
        row = _episode_row(task, trial, inst, res)
        out.append((row, {"episode": {k: row[k] for k in EPISODE_COLUMNS}, "record": res.record.to_dict()}))
    return out


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from exc
    return max(1, n)


def _tasks(config: ExperimentConfig, maps: list[tuple[int, SokobanInstance]]) -> list[_Task]:
    tasks = []
    for label, agent in config.agents():
        for map_id, inst in maps:
            slacks = config.maps.slack if config.maps.slack is not None else [inst.slack]
            for s in slacks:
                tasks.append(_Task(label, agent, map_id, inst, s, config.trials_per_cell, config.master_seed))
    return tasks


# --------------------------------------------------------------------------- results

CellKey = tuple[str, int, int]  # (framework label, T*, slack)


def _stderr(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n) if n else float("nan")


@dataclass
class ResultTable:
    """Aggregated rows plus per-episode outcomes keyed for paired comparisons."""

    experiment: str
    rows: list[dict[str, Any]] = field(default_factory=list)
    outcomes: dict[CellKey, dict[tuple[int, int], int]] = field(default_factory=dict)
    episodes: list[dict[str, Any]] = field(default_factory=list)

    def row(self, framework: str, T_star: int | None = None, slack: int | None = None) -> dict[str, Any]:
        hits = [
            r
            for r in self.rows
            if r["framework"] == framework
            and (T_star is None or r["T_star"] == T_star)
            and (slack is None or r["slack"] == slack)
        ]
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} rows match ({framework}, {T_star}, {slack})")
        return hits[0]

    def cell(self, framework: str, T_star: int | None = None, slack: int | None = None) -> CellKey:
        r = self.row(framework, T_star, slack)
        return (r["framework"], r["T_star"], r["slack"])


def aggregate(experiment: str, episode_rows: Sequence[dict[str, Any]], order: Sequence[str]) -> ResultTable:
    """Keyed merge of episode rows into per-cell summary rows; independent of row arrival order."""
    rank = {label: i for i, label in enumerate(order)}
    groups: dict[CellKey, list[dict[str, Any]]] = {}
    for r in episode_rows:
        groups.setdefault((r["framework"], r["T_star"], r["slack"]), []).append(r)
    table = ResultTable(experiment)
    for key in sorted(groups, key=lambda k: (rank.get(k[0], len(rank)), k[0], k[1], k[2])):
        rows = sorted(groups[key], key=lambda r: (r["map_id"], r["trial"]))
        n = len(rows)
        succ = sum(r["success"] for r in rows)
        steps = sum(r["steps_used"] for r in rows)
        budget = sum(r["budget"] for r in rows)
        p_err = sum(r["planning_err_steps"] for r in rows)
        s_err = sum(r["sampling_err_steps"] for r in rows)
        opp = sum(r["opportunity_steps"] for r in rows)
        opp_err = sum(r["opportunity_err_steps"] for r in rows)
        aligned = sum(r["aligned_steps"] for r in rows)
        p = succ / n
        pe = p_err / steps if steps else None
        se = s_err / steps if steps else None
        table.rows.append(
            {
                "experiment": experiment,
                "framework": key[0],
                "T_star": key[1],
                "slack": key[2],
                "budget": key[1] + key[2],
                "M": rows[0]["M"],
                "n": n,
                "success_mean": p,
                "success_stderr": _stderr(p, n),
                "planning_error": pe,
                "planning_error_stderr": None if pe is None else _stderr(pe, steps),
                "conditional_planning_error": opp_err / opp if opp else None,
                "sampling_error": se,
                "sampling_error_stderr": None if se is None else _stderr(se, steps),
                "steps_used_mean": steps / n,
                "steps_per_budget": steps / budget if budget else None,
                "replans_mean": sum(r["replans"] for r in rows) / n,
                "solver_infeasible_mean": sum(r["solver_infeasible"] for r in rows) / n,
                "alignment_rate": aligned / steps if steps else None,
            }
        )
        table.outcomes[key] = {(r["map_id"], r["trial"]): r["success"] for r in rows}
    return table


def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def _csv_text(columns: Sequence[str], rows: Iterable[dict[str, Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def bounds_rows(grid: BoundsGridModel, master_seed: int = 0) -> list[dict[str, Any]]:
    rows = []
    for i, inp in enumerate(grid.points()):
        row = {
            "eps_p": inp.eps_p,
            "eps_s": inp.eps_s,
            "delta_b": inp.delta_b,
            "delta_r": inp.delta_r,
            "T": inp.T,
            "alpha": inp.alpha,
            "p_follow": inp.p_follow,
            "d": inp.d_sequence[0],
            "U_ReAct": u_react(inp),
            "U_PA": u_pa(inp),
            "U_ours": u_ours(inp),
        }
        if grid.mc_trials:
            params = ErrorParams(inp.eps_p, inp.eps_s, inp.p_follow, inp.delta_b, inp.delta_r)
            for variant, col in (("ReAct", "MC_ReAct"), ("PA", "MC_PA"), ("Ours", "MC_Ours")):
                rng = RngStream(master_seed, f"chain/{i}/{variant}")
                row[col] = simulate_abstract_chain(
                    params, inp.T, variant, grid.mc_trials, rng, alpha=inp.alpha, d=inp.d_sequence
                )
            row["mc_trials"] = grid.mc_trials
        rows.append(row)
    return rows


def bounds_csv(grid: BoundsGridModel, master_seed: int = 0) -> str:
    cols = BOUND_COLUMNS + (CHAIN_COLUMNS if grid.mc_trials else [])
    return _csv_text(cols, bounds_rows(grid, master_seed))


def write_artifacts(table: ResultTable, out_dir: Path, records: Sequence[dict[str, Any]] = ()) -> None:
    ordered = sorted(
        zip(table.episodes, records) if records else ((e, None) for e in table.episodes),
        key=lambda er: (er[0]["framework"], er[0]["T_star"], er[0]["slack"], er[0]["map_id"], er[0]["trial"]),
    )
    _write(out_dir / "results.csv", _csv_text(RESULT_COLUMNS, table.rows))
    _write(out_dir / "episodes.csv", _csv_text(EPISODE_COLUMNS, (e for e, _ in ordered)))
    if records:
        write_jsonl(out_dir / "episodes.jsonl", (r for _, r in ordered))


def run_experiment(config: ExperimentConfig, out_dir=None, write: bool = True) -> ResultTable:
    """Execute the (framework x instance x trial) grid and write results.csv, episodes.csv, episodes.jsonl.

    Output bytes depend only on the config: every episode draws from a stream keyed by
    (master_seed, T*, map, trial), and rows are merged by key, not by completion order.
    On KeyboardInterrupt the finished tasks are written before re-raising.
    """
    out = Path(out_dir if out_dir is not None else config.output_dir)
    if config.experiment == "bounds_grid":
        rows = bounds_rows(config.bounds, config.master_seed)
        if write:
            cols = BOUND_COLUMNS + (CHAIN_COLUMNS if config.bounds.mc_trials else [])
            _write(out / "bounds.csv", _csv_text(cols, rows))
        return ResultTable(config.experiment, rows=rows)

    tasks = _tasks(config, generate_maps(config))
    order = [label for label, _ in config.agents()]
    done: list[list[tuple[dict, dict]]] = []

    def finish() -> ResultTable:
        pairs = [p for chunk in done for p in chunk]
        table = aggregate(config.experiment, [e for e, _ in pairs], order)
        table.episodes = [e for e, _ in pairs]
        if write:
            write_artifacts(table, out, [r for _, r in pairs])
        return table

    workers = worker_count()
    try:
        if workers == 1:
            for t in tasks:
                done.append(_run_task(t))
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for chunk in pool.map(_run_task, tasks):
                    done.append(chunk)
    except KeyboardInterrupt:
        finish()
        raise
    return finish()


# --------------------------------------------------------------------------- comparisons


@dataclass(frozen=True)
class Comparison:
    cell_a: CellKey
    cell_b: CellKey
    n: int
    mean_a: float
    mean_b: float
    z: float
    paired: bool

    @property
    def significant(self) -> bool:
        """success(a) > success(b) at 3 sigma."""
        return self.z > SIGMA

    @property
    def not_worse(self) -> bool:
        """success(a) >= success(b) is not rejected at 3 sigma."""
        return self.z >= -SIGMA


def _z(diff: float, se: float) -> float:
    if se > 0:
        return diff / se
    return 0.0 if diff == 0 else math.copysign(math.inf, diff)


def compare_cells(table: ResultTable, cell_a: CellKey, cell_b: CellKey) -> Comparison:
    """z-test of success(a) - success(b): paired on (map, trial) when both cells share keys."""
    if cell_a not in table.outcomes or cell_b not in table.outcomes:
        raise KeyError(f"unknown cell {cell_a if cell_a not in table.outcomes else cell_b}")
    a, b = table.outcomes[cell_a], table.outcomes[cell_b]
    if min(len(a), len(b)) < MIN_PAIRED:
        raise InsufficientSamples(f"need n >= {MIN_PAIRED} per cell, got {len(a)} and {len(b)}")
    if a.keys() == b.keys():
        n = len(a)
        d = [a[k] - b[k] for k in a]
        mean_d = math.fsum(d) / n
        var = math.fsum((x - mean_d) ** 2 for x in d) / (n - 1)
        ma, mb = sum(a.values()) / n, sum(b.values()) / n
        return Comparison(cell_a, cell_b, n, ma, mb, _z(mean_d, math.sqrt(var / n)), True)
    na, nb = len(a), len(b)
    ma, mb = sum(a.values()) / na, sum(b.values()) / nb
    pooled = (ma * na + mb * nb) / (na + nb)
    se = math.sqrt(pooled * (1 - pooled) * (1 / na + 1 / nb))
    return Comparison(cell_a, cell_b, min(na, nb), ma, mb, _z(ma - mb, se), False)


def _by_framework(config: ExperimentConfig) -> dict[Framework, list[str]]:
    out: dict[Framework, list[str]] = {}
    for label, agent in config.agents():
        out.setdefault(agent.framework, []).append(label)
    return out


def check_properties(config: ExperimentConfig, table: ResultTable) -> list[str]:
    """Experiment-specific sanity properties used by ``run --check``; returns violation messages."""
    problems: list[str] = []
    if config.experiment == "bounds_grid":
        for r in table.rows:
            ordered = r["U_ours"] + 1e-12 >= r["U_PA"] >= r["U_ReAct"] - 1e-12
            if not ordered and (1 - r["eps_p"]) * r["delta_b"] >= r["eps_p"] * r["delta_r"]:
                problems.append(f"bound ordering violated at {r}")
        return problems
    if not table.rows:
        return ["no results"]
    fw = _by_framework(config)
    cells = sorted({(r["T_star"], r["slack"]) for r in table.rows})
    agents = dict(config.agents())

    def expect_not_worse(a: str, b: str, T: int, s: int) -> None:
        c = compare_cells(table, (a, T, s), (b, T, s))
        if not c.not_worse:
            problems.append(f"{a} < {b} at T*={T}, slack={s} (z={c.z:.2f})")

    tape = fw.get(Framework.TAPE, [])
    if config.experiment == "fig1b_curve" and tape:
        for T, s in cells:
            for label in agents:
                if label not in tape:
                    expect_not_worse(tape[0], label, T, s)
    elif config.experiment == "budget_sweep":
        for label in tape:
            for T in sorted({c[0] for c in cells}):
                slacks = sorted(s for t, s in cells if t == T)
                for lo, hi in zip(slacks, slacks[1:]):
                    c = compare_cells(table, (label, T, hi), (label, T, lo))
                    if not c.not_worse:
                        problems.append(f"{label} decreases from slack {lo} to {hi} at T*={T} (z={c.z:.2f})")
    elif config.experiment == "error_table":
        for label in tape:
            if agents[label].use_constrained_execution:
                for r in table.rows:
                    if r["framework"] == label and r["sampling_error"] not in (None, 0.0):
                        problems.append(f"{label} sampling error {r['sampling_error']} != 0")
    elif config.experiment == "ablation_grid":
        full = [l for l in tape if (a := agents[l]).use_solver and a.use_constrained_execution and a.use_replanning]
        if full:
            for T, s in cells:
                for label in tape:
                    if label != full[0]:
                        expect_not_worse(full[0], label, T, s)
    elif config.experiment == "bestofn_compare":
        pairs = [(Framework.REACT_BEST_OF_N, Framework.REACT), (Framework.TAPE, Framework.PLAN_AND_ACT_BEST_OF_N)]
        for hi, lo in pairs:
            if fw.get(hi) and fw.get(lo):
                for T, s in cells:
                    expect_not_worse(fw[hi][0], fw[lo][0], T, s)
    return problems
