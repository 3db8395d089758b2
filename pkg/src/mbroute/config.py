from __future__ import annotations

import enum
from dataclasses import dataclass

from mbroute.velocity_graph import DEFAULT_DELTA_V


class Strategy(str, enum.Enum):
    FULL = "FullModel"
    ALL_CHECKED = "AllChecked"
    ADJACENT_ALL = "AdjacentAll"
    ADJACENT_VIOLATED = "AdjacentViolated"
    FIRST_VIOLATION = "FirstViolation"

    @property
    def cli_name(self) -> str:
        return _CLI_NAMES[self]

    @classmethod
    def parse(cls, name: "str | Strategy") -> "Strategy":
        if isinstance(name, Strategy):
            return name
        for s in cls:
            if name in (s.value, s.cli_name, s.name):
                return s
        raise ValueError(f"unknown strategy {name!r}")

    @property
    def lazy(self) -> bool:
        return self is not Strategy.FULL


_CLI_NAMES = {
    Strategy.FULL: "full",
    Strategy.ALL_CHECKED: "all-checked",
    Strategy.ADJACENT_ALL: "adjacent-all",
    Strategy.ADJACENT_VIOLATED: "adjacent-violated",
    Strategy.FIRST_VIOLATION: "first-violation",
}


@dataclass(frozen=True)
class SolveConfig:
    strategy: Strategy = Strategy.ADJACENT_VIOLATED
    gap_abs: float = 10.0
    time_limit: float = 300.0
    delta_v: float = DEFAULT_DELTA_V
    buffer: float = 0.0
    v_floor: float = 0.5
    max_release_paths: int = 64
    violation_tolerance: float = 1e-6
    backend: str = "highs"

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy.parse(self.strategy))
        if not self.gap_abs >= 0:
            raise ValueError(f"gap_abs must be >= 0, got {self.gap_abs!r}")
        if not self.time_limit > 0:
            raise ValueError(f"time_limit must be > 0, got {self.time_limit!r}")
        if not self.delta_v > 0:
            raise ValueError(f"delta_v must be > 0, got {self.delta_v!r}")
        if self.buffer < 0:
            raise ValueError(f"buffer must be >= 0, got {self.buffer!r}")
        if self.max_release_paths < 1:
            raise ValueError("max_release_paths must be >= 1")
