"""Contract checks any SolverBackend must pass before it can be dropped in."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from mbroute.backend.base import SolverBackend, SolveStatus

_TOL = 1e-6


@dataclass
class ConformanceReport:
    results: dict[str, tuple[bool, str]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(ok for ok, _ in self.results.values())

    def failures(self) -> list[str]:
        return [f"{name}: {msg}" for name, (ok, msg) in self.results.items() if not ok]

    def __str__(self):
        return "\n".join(f"{'PASS' if ok else 'FAIL'} {name} {msg}".rstrip()
                         for name, (ok, msg) in self.results.items())


def _lp(make):
    b = make()
    x = b.add_variable(0, 10)
    b.add_row([x], [1.0], 3.0, np.inf)
    b.set_objective({x: 1.0})
    sol = b.solve()
    ok = sol.status is SolveStatus.OPTIMAL and abs(sol.objective - 3.0) <= _TOL
    return ok, f"got {sol.status.value} {sol.objective}"


def _knapsack(make, values=(6, 10, 12), weights=(1, 2, 3), cap=5, gap=0.0):
    b = make()
    cols = [b.add_variable(0, 1, binary=True) for _ in values]
    b.add_row(cols, [float(w) for w in weights], -np.inf, float(cap))
    b.set_objective({c: -float(v) for c, v in zip(cols, values)})
    return b, cols, b.solve(gap_abs=gap)


def _binary(make):
    _, _, sol = _knapsack(make)
    if sol.status is not SolveStatus.OPTIMAL:
        return False, f"status {sol.status.value}"
    integral = np.all(np.abs(sol.values - np.round(sol.values)) <= _TOL)
    ok = abs(-sol.objective - 22.0) <= _TOL and integral
    return ok, f"value {-sol.objective}, integral={bool(integral)}"


def _infeasible(make):
    b = make()
    x = b.add_variable(0, 10)
    b.add_row([x], [1.0], 3.0, np.inf)
    b.add_row([x], [1.0], -np.inf, 2.0)
    b.set_objective({x: 1.0})
    sol = b.solve()
    return sol.status is SolveStatus.INFEASIBLE, f"got {sol.status.value}"


def _resolve(make):
    b, cols, first = _knapsack(make)
    b.add_row([cols[1]], [1.0], -np.inf, 0.0)
    second = b.solve()
    # minimisation: adding a row may only raise the objective
    ok = (second.status is SolveStatus.OPTIMAL and abs(-second.objective - 18.0) <= _TOL
          and second.objective >= first.objective - _TOL)
    return ok, f"before {-first.objective}, after {-second.objective}"


def _gap(make):
    values = (23, 31, 29, 44, 53, 38, 63, 85, 89, 82)
    weights = (92, 57, 49, 68, 60, 43, 67, 84, 87, 72)
    best = max(sum(v for v, used in zip(values, pick) if used)
               for pick in itertools.product((0, 1), repeat=len(values))
               if sum(w for w, used in zip(weights, pick) if used) <= 165)
    gap = 5.0
    _, _, sol = _knapsack(make, values, weights, 165, gap)
    if sol.status is not SolveStatus.OPTIMAL:
        return False, f"status {sol.status.value}"
    found = -sol.objective
    reported = sol.objective - sol.bound if sol.bound is not None else 0.0
    ok = best - found <= gap + _TOL and reported <= gap + _TOL
    return ok, f"found {found}, optimum {best}, reported gap {reported:.3g}"


CLAUSES: dict[str, Callable] = {
    "lp_lower_bound": _lp,
    "binary_knapsack": _binary,
    "infeasible": _infeasible,
    "add_row_resolve": _resolve,
    "abs_gap": _gap,
}


def conformance_suite(backend_factory: Callable[[], SolverBackend]) -> ConformanceReport:
    """Run every clause on fresh backends made by ``backend_factory``."""
    report = ConformanceReport()
    for name, clause in CLAUSES.items():
        try:
            report.results[name] = clause(backend_factory)
        except Exception as exc:  # a crashing clause is a failed clause
            report.results[name] = (False, f"{type(exc).__name__}: {exc}")
    return report
