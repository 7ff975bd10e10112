"""Closed-form success-probability upper bounds for ReAct, Plan-and-Act, and graph+solver agents."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

LOG_DOMAIN_T = 100


@dataclass(frozen=True)
class BoundInput:
    eps_p: float
    eps_s: float
    delta_b: float
    delta_r: float
    T: int
    alpha: float = 1.0
    p_follow: float = 0.9
    d_sequence: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        for name in ("eps_p", "eps_s", "delta_b", "delta_r", "alpha", "p_follow"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        ds = tuple(int(d) for d in self.d_sequence) or (1,) * self.T
        if len(ds) != self.T or any(d < 1 for d in ds):
            raise ValueError("d_sequence must have T entries, each >= 1")
        object.__setattr__(self, "d_sequence", ds)

    @property
    def eps_s_pa(self) -> float:
        return (1.0 - self.alpha * self.p_follow) * self.eps_s


def step_factor(eps_p: float, eps_s: float, delta_b: float, delta_r: float) -> float:
    """Per-step probability that the executed action stays viable."""
    return (1.0 - eps_p) * (1.0 - eps_s * delta_b) + eps_p * eps_s * delta_r


def _power(base: float, T: int) -> float:
    if T <= LOG_DOMAIN_T or base <= 0.0:
        return base**T
    return math.exp(T * math.log(base))


def u_react(inp: BoundInput) -> float:
    return _power(step_factor(inp.eps_p, inp.eps_s, inp.delta_b, inp.delta_r), inp.T)


def u_pa(inp: BoundInput) -> float:
    return _power(step_factor(inp.eps_p, inp.eps_s_pa, inp.delta_b, inp.delta_r), inp.T)


def u_ours(inp: BoundInput) -> float:
    factors = [1.0 - inp.eps_p**d for d in inp.d_sequence]
    if inp.T <= LOG_DOMAIN_T:
        return math.prod(factors)
    if any(f <= 0.0 for f in factors):
        return 0.0
    return math.exp(math.fsum(math.log(f) for f in factors))


def monotonicity_condition(inp: BoundInput) -> bool:
    """(1-eps_p) delta_b >= eps_p delta_r: deviations break viability at least as often as they rescue it."""
    return (1.0 - inp.eps_p) * inp.delta_b >= inp.eps_p * inp.delta_r
