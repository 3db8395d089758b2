"""Solve, decode, separate violated headways, add them, repeat.

Each iteration is a full re-solve of the grown model; the backend may warm
start from the previous incumbent. Constraint identity is the row tag, so a
row is never added twice and the loop terminates.
"""
from __future__ import annotations

import collections
import logging
import time
from dataclasses import dataclass, field
from typing import Mapping

from mbroute.backend import SolverBackend, SolveStatus
from mbroute.config import SolveConfig, Strategy
from mbroute.errors import MbrError, NoRoute
from mbroute.headway import (add_headway_rows, enumerate_all_headway_constraints, opposite_direction_constraints,
                             same_direction_headway_constraints, segment_order_key)
from mbroute.instance import Instance
from mbroute.model import LinearConstraint, ModelContext, ModelHandle, build_base_model
from mbroute.schedule import CandidateSolution, extract_solution

log = logging.getLogger(__name__)

__all__ = ["SolveConfig", "SolveResult", "SolveStats", "Strategy", "adjacent_pairs", "separate",
           "solve_iteratively"]


@dataclass
class IterationRecord:
    iteration: int
    objective: float | None
    bound: float | None
    checked: int
    added: int
    time: float
    tags: list[str] = field(default_factory=list)

    def log_line(self, with_time: bool = True) -> str:
        obj = "NA" if self.objective is None else f"{self.objective:.6f}"
        line = f"iter={self.iteration} obj={obj} checked={self.checked} added={self.added}"
        return f"{line} time_s={self.time:.3f}" if with_time else line


@dataclass
class SolveStats:
    iterations: int = 0
    constraints_checked: int = 0
    constraints_added: int = 0
    support_rows: int = 0
    wall_time: float = 0.0
    per_iteration: list[IterationRecord] = field(default_factory=list)

    def iteration_log(self, with_time: bool = True) -> list[str]:
        return [r.log_line(with_time) for r in self.per_iteration]


@dataclass
class SolveResult:
    status: SolveStatus
    objective: float | None
    schedule: CandidateSolution | None
    stats: SolveStats
    report: object | None = None

    @property
    def optimal(self) -> bool:
        return self.status is SolveStatus.OPTIMAL


def _tail(schedule, edge: str) -> str:
    return schedule.vertices[schedule.route.index(edge)]


def adjacent_pairs(candidate: CandidateSolution, edge: str) -> list[tuple[str, str]]:
    """(leader, follower) for trains directly following each other on ``edge``."""
    users = _users(candidate, edge)
    return list(zip(users, users[1:]))


def _users(candidate, edge):
    users = [tr for tr, s in candidate.trains.items() if edge in s.route]
    return sorted(users, key=lambda tr: (candidate.trains[tr].a_front[_tail(candidate.trains[tr], edge)], tr))


def _same_direction_checks(ctx, candidate, values, adjacent):
    """Yield (rows, overrides) per ordered pair in scan order."""
    by_edge = collections.defaultdict(list)
    for tr, s in candidate.trains.items():
        for e in s.route:
            by_edge[e].append(tr)
    for edge in sorted(by_edge):
        users = _users(candidate, edge)
        if len(users) < 2:
            continue
        pairs = list(zip(users, users[1:])) if adjacent else [
            (users[i], users[j]) for i in range(len(users)) for j in range(i + 1, len(users))]
        roles = []
        for first, second in pairs:
            leader, follower = first, second
            key = ("o", first, second, edge)
            if key in values and values[key] > 0.5:
                leader, follower = second, first
            u = _tail(candidate.trains[follower], edge)
            roles.append((candidate.trains[follower].a_front[u], follower, leader))
        for _, follower, leader in sorted(roles):
            fs = candidate.trains[follower]
            p = fs.speed_at[_tail(fs, edge)]
            rows = same_direction_headway_constraints(ctx, follower, leader, edge, speeds=[p],
                                                      leader_route=candidate.trains[leader].route)
            overrides = {("o", follower, leader, edge): 1.0, ("o", leader, follower, edge): 0.0}
            yield rows, overrides


def _segment_usage(ctx, candidate, seg):
    usage = {}
    for tr, s in candidate.trains.items():
        inside = [e for e in s.route if seg.direction(e)]
        if inside:
            entry_time = s.a_front[_tail(s, inside[0])]
            usage[tr] = (seg.direction(inside[0]), inside[0], inside[-1], entry_time)
    return usage


def _opposite_checks(ctx, candidate, values, adjacent):
    for seg in ctx.segments:
        usage = _segment_usage(ctx, candidate, seg)
        order = sorted(usage, key=lambda tr: (usage[tr][3], tr))
        if adjacent:
            pairs = list(zip(order, order[1:]))
        else:
            pairs = [(order[i], order[j]) for i in range(len(order)) for j in range(i + 1, len(order))]
        for first, second in pairs:
            if usage[first][0] == usage[second][0]:
                continue
            q = segment_order_key(first, second, seg)
            t1 = q[1]
            if q in values:
                t1_first = values[q] > 0.5
            else:
                t1_first = first == t1
            used = {tr: usage[tr][1:3] for tr in (first, second)}
            rows = opposite_direction_constraints(ctx, first, second, seg, used=used)
            yield rows, {q: 1.0 if t1_first else 0.0}


def separate(ctx: ModelContext, candidate: CandidateSolution, values: Mapping[tuple, float], strategy: Strategy,
             tolerance: float) -> tuple[list[LinearConstraint], int]:
    """Rows to add for ``candidate`` under ``strategy`` and how many rows were checked."""
    strategy = Strategy.parse(strategy)
    if strategy is Strategy.FULL:
        return [], 0
    adjacent = strategy in (Strategy.ADJACENT_ALL, Strategy.ADJACENT_VIOLATED, Strategy.FIRST_VIOLATION)
    checked = 0
    everything, violated = [], []
    for source in (_same_direction_checks, _opposite_checks):
        for rows, overrides in source(ctx, candidate, values, adjacent):
            view = collections.ChainMap(overrides, values)
            for row in rows:
                checked += 1
                bad = row.violation(view) > tolerance
                if bad:
                    if strategy is Strategy.FIRST_VIOLATION:
                        return [row], checked
                    violated.append(row)
                everything.append(row)
    if strategy is Strategy.ADJACENT_VIOLATED:
        return violated, checked
    return (everything if violated else []), checked


def solve_iteratively(instance: Instance, config: SolveConfig | None = None,
                      backend: SolverBackend | None = None, *, verify: bool = True) -> SolveResult:
    config = config or SolveConfig()
    start = time.perf_counter()
    stats = SolveStats()
    try:
        handle, _ = build_base_model(instance, None, config, backend)
    except NoRoute as exc:
        # no route at all is a proof of infeasibility, reported like a solver verdict
        log.info("infeasible before solving: %s", exc)
        stats.wall_time = time.perf_counter() - start
        return SolveResult(SolveStatus.INFEASIBLE, None, None, stats)
    ctx = handle.ctx

    def remaining():
        return config.time_limit - (time.perf_counter() - start)

    def finish(status, objective=None, schedule=None):
        stats.wall_time = time.perf_counter() - start
        report = None
        if verify and schedule is not None and status is SolveStatus.OPTIMAL:
            from mbroute.validator import verify_schedule
            report = verify_schedule(instance, schedule, config)
            if report.entries:
                log.warning("validator found %d violations in an optimal schedule", len(report.entries))
        return SolveResult(status, objective, schedule, stats, report)

    if config.strategy is Strategy.FULL:
        added, support = add_headway_rows(handle, enumerate_all_headway_constraints(ctx))
        stats.constraints_added, stats.support_rows = added, support

    iteration = 0
    while True:
        if remaining() <= 0:
            return finish(SolveStatus.TIME_LIMIT)
        t_iter = time.perf_counter()
        sol = handle.solve(config.gap_abs, remaining())
        iteration += 1
        stats.iterations = iteration
        if sol.status is SolveStatus.INFEASIBLE:
            stats.per_iteration.append(IterationRecord(iteration, None, None, 0, 0, time.perf_counter() - t_iter))
            _log(stats)
            return finish(SolveStatus.INFEASIBLE)
        values = handle.values(sol) if sol.values is not None else None
        candidate = extract_solution(handle, values, sol.objective) if values is not None else None
        if sol.status is SolveStatus.TIME_LIMIT:
            stats.per_iteration.append(IterationRecord(iteration, sol.objective, sol.bound, 0, 0,
                                                       time.perf_counter() - t_iter))
            _log(stats)
            return finish(SolveStatus.TIME_LIMIT, sol.objective, candidate)
        cuts, checked = separate(ctx, candidate, values, config.strategy, config.violation_tolerance)
        before = len(handle.tags)
        added, support = add_headway_rows(handle, cuts)
        if cuts and not added:
            raise MbrError(f"separation returned only known rows: {[c.tag for c in cuts[:3]]}")
        new_tags = [c.tag for c in handle.constraints[before:] if c.family in ("headway", "headway_head", "opposite")]
        stats.constraints_checked += checked
        stats.constraints_added += added
        stats.support_rows += support
        stats.per_iteration.append(IterationRecord(iteration, sol.objective, sol.bound, checked, added,
                                                   time.perf_counter() - t_iter, new_tags))
        _log(stats)
        if not cuts:
            return finish(SolveStatus.OPTIMAL, sol.objective, candidate)


def _log(stats: SolveStats) -> None:
    log.info(stats.per_iteration[-1].log_line())
