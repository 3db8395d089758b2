"""Strategy comparison runs and cumulative runtime tables."""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from mbroute.config import SolveConfig, Strategy
from mbroute.instance import Instance
from mbroute.lazy import solve_iteratively

log = logging.getLogger(__name__)

CSV_HEADER = ["instance", "strategy", "status", "objective", "wall_time_s", "iterations",
              "constraints_checked", "constraints_added", "seed"]
CUMULATIVE_HEADER = ["split", "strategy", "wall_time_s", "fraction"]


@dataclass(frozen=True)
class BenchmarkRow:
    instance: str
    strategy: str
    status: str
    objective: float | None
    wall_time_s: float
    iterations: int
    constraints_checked: int
    constraints_added: int
    seed: int | None

    def cells(self) -> list[str]:
        return [self.instance, self.strategy, self.status,
                "NA" if self.objective is None else f"{self.objective:.9g}",
                f"{self.wall_time_s:.6f}", str(self.iterations), str(self.constraints_checked),
                str(self.constraints_added), "NA" if self.seed is None else str(self.seed)]


@dataclass(frozen=True)
class BenchmarkCase:
    name: str
    instance: Instance
    seed: int | None = None


def run_one(case: BenchmarkCase, config: SolveConfig) -> BenchmarkRow:
    strategy = config.strategy.value
    try:
        res = solve_iteratively(case.instance, config, verify=False)
    except Exception as exc:  # a failed run is a row, never an aborted sweep
        log.warning("%s/%s failed: %s", case.name, strategy, exc)
        return BenchmarkRow(case.name, strategy, "Error", None, math.nan, 0, 0, 0, case.seed)
    s = res.stats
    return BenchmarkRow(case.name, strategy, res.status.value, res.objective, s.wall_time, s.iterations,
                        s.constraints_checked, s.constraints_added, case.seed)


def run_benchmark(cases: Sequence[BenchmarkCase], strategies: Iterable[Strategy | str], base: SolveConfig,
                  repetitions: int = 1) -> list[BenchmarkRow]:
    strategies = [Strategy.parse(s) for s in strategies]
    rows = []
    for case in sorted(cases, key=lambda c: c.name):
        for strategy in strategies:
            cfg = SolveConfig(**{**base.__dict__, "strategy": strategy})
            for _ in range(repetitions):
                rows.append(run_one(case, cfg))
    return rows


def rows_to_csv(rows: Iterable[BenchmarkRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.cells())
    return buf.getvalue()


def cumulative_tables(rows: Sequence[BenchmarkRow]) -> dict[tuple[str, str], list[tuple[float, float]]]:
    """Per (split, strategy): sorted runtimes paired with the fraction solved that fast.

    An instance is in the feasible split if any run proved it Optimal and in
    the infeasible split if any run proved it Infeasible; a run only counts as
    solved when its status matches the split.
    """
    proven = {}
    for r in rows:
        if r.status in ("Optimal", "Infeasible"):
            proven.setdefault(r.instance, r.status)
    out = {}
    for split, status in (("feasible", "Optimal"), ("infeasible", "Infeasible")):
        names = {n for n, s in proven.items() if s == status}
        for strategy in sorted({r.strategy for r in rows}):
            runs = [r for r in rows if r.strategy == strategy and r.instance in names]
            if not runs:
                continue
            times = sorted(r.wall_time_s for r in runs if r.status == status)
            out[(split, strategy)] = [(t, (i + 1) / len(runs)) for i, t in enumerate(times)]
    return out


def cumulative_csv(rows: Sequence[BenchmarkRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CUMULATIVE_HEADER)
    for (split, strategy), pts in sorted(cumulative_tables(rows).items()):
        for t, frac in pts:
            w.writerow([split, strategy, f"{t:.6f}", f"{frac:.6f}"])
    return buf.getvalue()
