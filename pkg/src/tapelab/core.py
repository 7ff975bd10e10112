"""Shared goal-MDP plumbing: budgets, step outcomes, trajectory records, seeded streams."""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Iterator, Sequence

import numpy as np


class BudgetViolation(Exception):
    """Raised when a charge would drive some budget component below zero."""


@dataclass(frozen=True)
class Budget:
    components: tuple[int, ...]

    def __post_init__(self) -> None:
        comps = tuple(int(c) for c in self.components)
        if any(c < 0 for c in comps):
            raise ValueError(f"budget components must be >= 0, got {comps}")
        object.__setattr__(self, "components", comps)

    @classmethod
    def of(cls, *components: int) -> Budget:
        return cls(tuple(components))

    @classmethod
    def zeros(cls, k: int) -> Budget:
        return cls((0,) * k)

    def __len__(self) -> int:
        return len(self.components)

    def __getitem__(self, i: int) -> int:
        return self.components[i]

    def __le__(self, other: Budget) -> bool:
        # element-wise; this is a partial order, so there is deliberately no __lt__
        _check_dims(self, other)
        return all(a <= b for a, b in zip(self.components, other.components))

    def __add__(self, other: Budget) -> Budget:
        _check_dims(self, other)
        return Budget(tuple(a + b for a, b in zip(self.components, other.components)))

    @property
    def steps(self) -> int:
        """First component; for Sokoban the remaining action count."""
        return self.components[0]

    def to_list(self) -> list[int]:
        return list(self.components)


def _check_dims(a: Budget, b: Budget) -> None:
    if len(a.components) != len(b.components):
        raise ValueError(f"budget dimension mismatch: {len(a.components)} vs {len(b.components)}")


def charge(budget: Budget, cost: Budget) -> Budget:
    """Subtract ``cost`` from ``budget``; BudgetViolation when cost is not <= budget."""
    _check_dims(budget, cost)
    if not cost <= budget:
        raise BudgetViolation(f"cost {cost.to_list()} exceeds remaining {budget.to_list()}")
    return Budget(tuple(a - c for a, c in zip(budget.components, cost.components)))


UNIT_STEP = Budget((1,))


class StepStatus(str, Enum):
    SUCCESS = "Success"
    FAILURE = "Failure"


@dataclass(frozen=True)
class StepOutcome:
    status: StepStatus
    budget_after: Budget


class TerminalStatus(str, Enum):
    GOAL_REACHED = "GoalReached"
    DEAD_END = "DeadEnd"
    BUDGET_EXHAUSTED = "BudgetExhausted"
    HORIZON_EXCEEDED = "HorizonExceeded"


@dataclass(frozen=True)
class StepRecord:
    state_id: str
    intended_action: str
    executed_action: str
    intended_viable: bool
    executed_viable: bool
    budget_after: Budget

    def to_dict(self) -> dict[str, Any]:
        return {
            "state_id": self.state_id,
            "intended_action": self.intended_action,
            "executed_action": self.executed_action,
            "intended_viable": self.intended_viable,
            "executed_viable": self.executed_viable,
            "budget_after": self.budget_after.to_list(),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> StepRecord:
        return cls(
            state_id=d["state_id"],
            intended_action=d["intended_action"],
            executed_action=d["executed_action"],
            intended_viable=bool(d["intended_viable"]),
            executed_viable=bool(d["executed_viable"]),
            budget_after=Budget(tuple(d["budget_after"])),
        )


@dataclass(frozen=True)
class TrajectoryRecord:
    """Per-episode log. ``success`` must agree with :func:`judge_success`."""

    steps: tuple[StepRecord, ...]
    terminal_status: TerminalStatus
    success: bool

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))
        object.__setattr__(self, "terminal_status", TerminalStatus(self.terminal_status))
        if self.success != _success_of(self.steps, self.terminal_status):
            raise ValueError("success flag disagrees with terminal status and viability flags")

    @classmethod
    def close(cls, steps: Sequence[StepRecord], terminal_status: TerminalStatus) -> TrajectoryRecord:
        return cls(tuple(steps), terminal_status, _success_of(steps, terminal_status))

    @property
    def goal_step(self) -> int | None:
        """Index T_g of the first goal-reaching state, None when never reached."""
        return len(self.steps) if self.terminal_status is TerminalStatus.GOAL_REACHED else None

    def to_dict(self) -> dict[str, Any]:
        return {
            "steps": [s.to_dict() for s in self.steps],
            "terminal_status": self.terminal_status.value,
            "success": self.success,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> TrajectoryRecord:
        return cls(
            steps=tuple(StepRecord.from_dict(s) for s in d["steps"]),
            terminal_status=TerminalStatus(d["terminal_status"]),
            success=bool(d["success"]),
        )


def _success_of(steps: Iterable[StepRecord], status: TerminalStatus) -> bool:
    return status is TerminalStatus.GOAL_REACHED and all(s.executed_viable for s in steps)


def judge_success(record: TrajectoryRecord) -> bool:
    return _success_of(record.steps, record.terminal_status)


def write_jsonl(path, rows: Iterable[dict[str, Any]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True, separators=(",", ":")))
            fh.write("\n")


def read_jsonl(path) -> Iterator[dict[str, Any]]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def records_from_jsonl(path) -> list[TrajectoryRecord]:
    """Load trajectory records; episode-log lines may wrap extra metadata around them."""
    return [TrajectoryRecord.from_dict(row.get("record", row)) for row in read_jsonl(path)]


@dataclass
class RngStream:
    """Counter-based labelled random stream.

    The draw sequence is a pure function of ``(master_seed, stream_label, counter)``;
    children are derived by label so that the order in which episodes run never
    changes what any single episode sees.
    """

    master_seed: int
    stream_label: str = "root"
    counter: int = 0
    _rng: random.Random = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        self._rng = random.Random(int.from_bytes(self._digest(), "big"))

    def _digest(self) -> bytes:
        key = f"{int(self.master_seed)}|{self.stream_label}|{int(self.counter)}"
        return hashlib.sha256(key.encode("utf-8")).digest()

    def derive(self, label: str, counter: int = 0) -> RngStream:
        return RngStream(self.master_seed, f"{self.stream_label}/{label}", counter)

    def random(self) -> float:
        return self._rng.random()

    def bernoulli(self, p: float) -> bool:
        return self._rng.random() < p

    def randrange(self, n: int) -> int:
        return self._rng.randrange(n)

    def choice(self, seq: Sequence[Any]) -> Any:
        if not seq:
            raise IndexError("choice from empty sequence")
        return seq[self._rng.randrange(len(seq))]

    def shuffle(self, items: list[Any]) -> None:
        self._rng.shuffle(items)

    def numpy(self) -> np.random.Generator:
        """A numpy generator keyed by the same triple (independent of scalar draws)."""
        seed = np.random.SeedSequence(int.from_bytes(self._digest(), "big"))
        return np.random.Generator(np.random.PCG64(seed))
