"""Step-size and difference-length schedules."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Union


@dataclass(frozen=True)
class Constant:
    value: float

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError("constant schedule needs a positive value")

    def __call__(self, n: int) -> float:
        return self.value

    def to_dict(self) -> dict:
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True)
class PowerLaw:
    """gamma / (n + m)^p."""

    gamma: float
    m: float = 1.0
    p: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0 or self.m < 1:
            raise ValueError("power law needs gamma > 0 and m >= 1")
        if not 0.5 < self.p <= 1.0:
            warnings.warn(
                f"power-law exponent p={self.p} outside (1/2, 1]: steps are not square-summable "
                "with a divergent sum",
                stacklevel=3,
            )

    def __call__(self, n: int) -> float:
        return self.gamma / (n + self.m) ** self.p

    def to_dict(self) -> dict:
        return {"kind": "power_law", "gamma": self.gamma, "m": self.m, "p": self.p}


StepSchedule = Union[Constant, PowerLaw]


@dataclass(frozen=True)
class CoupledSqrt:
    """Difference length L * sqrt(alpha(n)) tied to a step schedule."""

    L: float
    step: StepSchedule

    def __call__(self, n: int) -> float:
        return self.L * math.sqrt(self.step(n))

    def to_dict(self) -> dict:
        return {"kind": "coupled_sqrt", "L": self.L, "step": self.step.to_dict()}


LengthSchedule = Union[Constant, CoupledSqrt]


def schedule_eval(schedule, n: int) -> float:
    if n < 0:
        raise ValueError("n must be non-negative")
    return schedule(n)


def check_length(l: float, f_scale: float = 1.0) -> None:
    """Warn when l^2 is close enough to round-off that difference quotients degrade."""
    if l * l < 1e3 * 2.220446049250313e-16 * max(f_scale, 1e-300):
        warnings.warn(
            f"difference length {l:g} is small relative to round-off at objective scale {f_scale:g}",
            stacklevel=3,
        )


def schedule_from_dict(data: dict):
    kind = data.get("kind")
    if kind == "constant":
        return Constant(float(data["value"]))
    if kind == "power_law":
        return PowerLaw(float(data["gamma"]), float(data.get("m", 1.0)), float(data.get("p", 1.0)))
    if kind == "coupled_sqrt":
        return CoupledSqrt(float(data["L"]), schedule_from_dict(data["step"]))
    raise ValueError(f"unknown schedule kind {kind!r}")
