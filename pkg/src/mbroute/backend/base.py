from __future__ import annotations

import enum
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class SolveStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    TIME_LIMIT = "TimeLimit"


@dataclass(frozen=True)
class BackendCapabilities:
    supports_warm_start: bool
    supports_abs_gap: bool
    max_vars: int | None = None


@dataclass
class BackendSolution:
    status: SolveStatus
    objective: float | None = None
    bound: float | None = None
    values: np.ndarray | None = None

    @property
    def has_values(self) -> bool:
        return self.values is not None


class SolverBackend(ABC):
    """Minimal incremental MILP interface (always minimises)."""

    capabilities: BackendCapabilities

    @abstractmethod
    def add_variable(self, lb: float, ub: float, binary: bool = False, name: str | None = None) -> int:
        ...

    @abstractmethod
    def add_row(self, indices: Sequence[int], coefs: Sequence[float], lb: float, ub: float) -> int:
        ...

    @abstractmethod
    def set_objective(self, coefs: dict[int, float], offset: float = 0.0) -> None:
        ...

    @abstractmethod
    def solve(self, gap_abs: float = 0.0, time_limit: float | None = None) -> BackendSolution:
        """Solve the current model; may reuse state from earlier calls."""

    @property
    @abstractmethod
    def num_vars(self) -> int:
        ...

    @property
    @abstractmethod
    def num_rows(self) -> int:
        ...

    def polish(self, solution: BackendSolution) -> BackendSolution:
        """Re-solve the LP with integers fixed at their rounded values.

        Removes big-M slack left by integrality tolerances. The default does nothing.
        """
        return solution

    def write_lp(self, path: str) -> None:
        raise NotImplementedError(f"{type(self).__name__} cannot export LP files")
