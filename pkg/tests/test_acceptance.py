"""Acceptance criteria, one test per criterion.

Each test prints a single ``[Cn] ... PASS|FAIL`` line (visible under
``pytest -v`` and when run as a script) and then asserts the same condition.

    python tests/test_acceptance.py        # just the eight lines
"""
from __future__ import annotations

import functools
import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

import fixtures as F
from oracles import brute_force_fastest, euler_braking_distance, euler_times
from mbroute.backend import SolveStatus
from mbroute.cli import main as cli_main
from mbroute.config import SolveConfig, Strategy
from mbroute.generator import generate_instance
from mbroute.headway import add_headway_rows, enumerate_all_headway_constraints
from mbroute.kinematics import (KinematicParams, braking_distance, feasible_transition, max_time_over_interval,
                                max_traverse_time, min_time_over_interval, min_traverse_time)
from mbroute.lazy import solve_iteratively
from mbroute.model import build_base_model
from mbroute.validator import fastest_single_train_time, verify_schedule
from mbroute.velocity_graph import stop_candidates

pytestmark = pytest.mark.acceptance

STRATEGIES = list(Strategy)
LAZY = [s for s in STRATEGIES if s.lazy]
_capture = None


def emit(cid: str, title: str, ok: bool, detail: str) -> None:
    line = f"[{cid}] {title}: {'PASS' if ok else 'FAIL'} ({detail})"
    if _capture is not None:
        with _capture.disabled():
            print("\n" + line, flush=True)
    else:
        print(line, flush=True)


@pytest.fixture(autouse=True)
def _show(capsys):
    global _capture
    _capture = capsys
    yield
    _capture = None


@functools.lru_cache(maxsize=None)
def _docs():
    return F.feasible_suite()


@functools.lru_cache(maxsize=None)
def solved(name: str, strategy: Strategy):
    doc = _docs()[name] if name in _docs() else F.infeasible_suite()[name]
    return solve_iteratively(F.load(doc), SolveConfig(strategy=strategy, gap_abs=0))


# -- C1 ---------------------------------------------------------------------------

def test_c1_strategy_equivalence():
    start = time.perf_counter()
    problems = []
    for name in _docs():
        results = {s: solved(name, s) for s in STRATEGIES}
        ref = results[Strategy.FULL]
        for s, r in results.items():
            if r.status is not SolveStatus.OPTIMAL:
                problems.append(f"{name}/{s.cli_name}: {r.status.value}")
            elif abs(r.objective - ref.objective) > 1e-6:
                problems.append(f"{name}/{s.cli_name}: {r.objective:.9f} vs {ref.objective:.9f}")
            elif not r.report.feasible:
                problems.append(f"{name}/{s.cli_name}: {len(r.report.entries)} violations")
    elapsed = time.perf_counter() - start
    if elapsed >= 300:
        problems.append(f"runtime {elapsed:.0f} s over the 300 s budget")
    detail = f"{len(_docs())} fixtures x {len(STRATEGIES)} strategies, {elapsed:.0f} s"
    emit("C1", "strategy equivalence vs FullModel (gap 0, tol 1e-6)", not problems,
         detail if not problems else detail + "; " + "; ".join(problems[:5]))
    assert not problems


# -- C2 ---------------------------------------------------------------------------

def test_c2_infeasibility_agreement():
    start = time.perf_counter()
    problems = []
    suite = F.infeasible_suite()
    for name in suite:
        for s in STRATEGIES:
            r = solved(name, s)
            if r.status is not SolveStatus.INFEASIBLE:
                problems.append(f"{name}/{s.cli_name}: {r.status.value}")
    elapsed = time.perf_counter() - start
    if elapsed >= 60:
        problems.append(f"runtime {elapsed:.0f} s over the 60 s budget")
    emit("C2", "infeasibility agreement", not problems,
         f"{len(suite)} fixtures x {len(STRATEGIES)} strategies, {elapsed:.1f} s" + "".join("; " + p for p in problems))
    assert not problems


# -- C3 ---------------------------------------------------------------------------

def test_c3_single_train_analytics():
    worst, problems = 0.0, []
    cfg = SolveConfig(gap_abs=0)
    suite = F.single_train_suite()
    for name, doc in suite.items():
        inst = F.load(doc)
        d = doc["demands"][0]
        oracle = brute_force_fastest(doc, d["train"], cfg.delta_v)
        dp = fastest_single_train_time(inst, d["train"])
        want = max(0.0, d["entry_window_s"][0] + oracle - d["exit_window_s"][0])
        r = solve_iteratively(inst, cfg)
        err = math.inf if r.objective is None else abs(r.objective - want)
        worst = max(worst, err, abs(dp - oracle))
        if err > 1e-6 or abs(dp - oracle) > 1e-6:
            problems.append(f"{name}: solver {r.objective} dp {dp:.9f} oracle {oracle:.9f}")
    emit("C3", "single-train objective vs brute-force fastest time (tol 1e-6)", not problems,
         f"{len(suite)} fixtures, max error {worst:.2e}" + "".join("; " + p for p in problems))
    assert not problems


# -- C4 ---------------------------------------------------------------------------

def test_c4_kinematics_vs_time_stepping():
    rng = np.random.default_rng(20240611)
    n, worst_t, worst_d, bad = 0, 0.0, 0.0, []
    start = time.perf_counter()
    while n < 1000:
        L = float(rng.uniform(20, 600))
        vmax = float(rng.uniform(5, 40))
        a, b = float(rng.uniform(0.3, 1.5)), float(rng.uniform(0.3, 1.5))
        floor = float(rng.uniform(0.5, 3.0))
        p = float(rng.uniform(0, vmax)) if rng.random() > 0.2 else 0.0
        q = float(rng.uniform(0, vmax)) if rng.random() > 0.2 else 0.0
        prm = KinematicParams(vmax, a, b, min(floor, 0.5 * vmax))
        if not feasible_transition(L, p, q, prm):
            continue
        n += 1
        lam = float(rng.uniform(0, L))
        mu = float(rng.uniform(lam, L))
        fi, f_full, _ = euler_times(True, L, p, q, vmax, a, b, prm.v_floor, lam, mu)
        si, s_full, _ = euler_times(False, L, p, q, vmax, a, b, prm.v_floor, lam, mu)
        errs = [abs(min_traverse_time(L, p, q, prm) - f_full),
                abs(max_traverse_time(L, p, q, False, prm) - s_full),
                abs(min_time_over_interval(L, p, q, lam, mu, prm) - fi),
                abs(max_time_over_interval(L, p, q, lam, mu, False, prm) - si)]
        dist = abs(braking_distance(p, b) - euler_braking_distance(p, b))
        worst_t, worst_d = max(worst_t, *errs), max(worst_d, dist)
        if max(errs) > 1e-3 or dist > 1e-3:
            bad.append((L, p, q, vmax, a, b, prm.v_floor, lam, mu))
    # the worked examples too
    ex = KinematicParams(10, 1, 1, 1.0)
    examples = [(min_traverse_time(100, 10, 10, ex), euler_times(True, 100, 10, 10, 10, 1, 1, 1.0)[1]),
                (min_traverse_time(100, 0, 10, ex), euler_times(True, 100, 0, 10, 10, 1, 1, 1.0)[1]),
                (min_traverse_time(100, 0, 0, ex), euler_times(True, 100, 0, 0, 10, 1, 1, 1.0)[1]),
                (max_traverse_time(100, 10, 10, False, ex), euler_times(False, 100, 10, 10, 10, 1, 1, 1.0)[1]),
                (max_time_over_interval(100, 10, 10, 25, 75, False, ex),
                 euler_times(False, 100, 10, 10, 10, 1, 1, 1.0, 25, 75)[0]),
                (braking_distance(27.78, 0.5), euler_braking_distance(27.78, 0.5))]
    ex_err = max(abs(x - y) for x, y in examples)
    ok = not bad and ex_err <= 1e-3
    emit("C4", "closed-form kinematics vs Euler dt=1e-4 (tol 1e-3 s / 1e-3 m)", ok,
         f"{n} tuples, max time err {worst_t:.1e} s, max distance err {worst_d:.1e} m, examples {ex_err:.1e}, "
         f"{time.perf_counter() - start:.0f} s" + (f"; first failure {bad[0]}" if bad else ""))
    assert ok


# -- C5 ---------------------------------------------------------------------------

def _stop_vertex(s):
    return s.stops[0]


def test_c5_train_length_separation():
    notes, ok = [], True
    cfg = SolveConfig(gap_abs=0)
    inst = F.load(F.platform_pair())
    short = solve_iteratively(inst, cfg)
    if short.optimal and short.report.feasible:
        s1, s2 = short.schedule.trains["T1"], short.schedule.trains["T2"]
        v1, v2 = _stop_vertex(s1), _stop_vertex(s2)
        lo = max(s1.a_front[v1], s2.a_front[v2])
        hi = min(s1.d_front[v1], s2.d_front[v2])
        overlap = hi - lo
        ok &= overlap > 0 and v1 != v2
        notes.append(f"80+80 m dwell overlap {overlap:.1f} s at {v1}/{v2}")
    else:
        ok = False
        notes.append(f"80+80 m: {short.status.value}")

    blocked = [solve_iteratively(F.load(F.platform_pair(long_first=True)), SolveConfig(strategy=s, gap_abs=0)).status
               for s in STRATEGIES]
    ok &= all(st is SolveStatus.INFEASIBLE for st in blocked)
    notes.append("150+80 m forced overlap infeasible under all strategies"
                 if all(st is SolveStatus.INFEASIBLE for st in blocked) else f"150+80 m forced overlap: {blocked}")

    loose = solve_iteratively(F.load(F.platform_pair(long_first=True, overlap=False)), cfg)
    if loose.optimal and loose.report.feasible:
        s1, s2 = loose.schedule.trains["T1"], loose.schedule.trains["T2"]
        v2 = _stop_vertex(s2)
        gap = s2.a_front[v2] - s1.d_rear[v2]
        disjoint = s2.a_front[v2] >= s1.d_front[_stop_vertex(s1)] - 1e-6
        ok &= gap >= -1e-6 and disjoint
        notes.append(f"150 m then 80 m: second stop starts {gap:+.2f} s after the long rear clears {v2}")
    else:
        ok = False
        notes.append(f"150+80 m loose: {loose.status.value}")

    long_train = F.load(F.platform_pair(long_first=True)).train["T1"]
    net = inst.network
    from mbroute.velocity_graph import build_extended_graph
    cands = stop_candidates(build_extended_graph(long_train, net, cfg.delta_v), inst.station["P"], long_train, net)
    ok &= cands == {"M2"}
    notes.append(f"150 m stop positions {sorted(cands)}")
    emit("C5", "train-length separation on a two-section platform", ok, "; ".join(notes))
    assert ok


# -- C6 ---------------------------------------------------------------------------

CORRIDOR = (7, 10, 1500.0)


def _eager_count(inst):
    h, _ = build_base_model(inst, None, SolveConfig())
    added, _support = add_headway_rows(h, enumerate_all_headway_constraints(h.ctx))
    return added


def test_c6_lazy_advantage():
    seed, n, horizon = CORRIDOR
    inst = generate_instance(seed, n, "corridor", horizon)
    eager = _eager_count(inst)
    ok, notes = True, [f"corridor {n} trains: eager {eager}"]
    corridor_runs = {}
    for s in LAZY:
        r = solve_iteratively(inst, SolveConfig(strategy=s, gap_abs=0))
        corridor_runs[s] = r
        ok &= r.status is SolveStatus.OPTIMAL and r.stats.constraints_added < eager
        notes.append(f"{s.cli_name} {r.stats.constraints_added}")

    disjoint = F.load(F.disjoint_lines(4))
    zero = {s.cli_name: solve_iteratively(disjoint, SolveConfig(strategy=s)).stats.constraints_added for s in LAZY}
    ok &= all(v == 0 for v in zero.values())
    notes.append(f"disjoint adds {sorted(set(zero.values()))}")

    worse = []
    conflicted = 0
    pairs = [(name, solved(name, Strategy.FIRST_VIOLATION), solved(name, Strategy.ADJACENT_VIOLATED))
             for name in _docs()]
    pairs.append(("corridor", corridor_runs[Strategy.FIRST_VIOLATION], corridor_runs[Strategy.ADJACENT_VIOLATED]))
    for name, fv, av in pairs:
        if av.stats.constraints_added == 0:
            continue
        conflicted += 1
        if fv.stats.iterations < av.stats.iterations:
            worse.append(f"{name} FV {fv.stats.iterations} < AV {av.stats.iterations}")
    ok &= not worse
    notes.append(f"FV >= AV iterations on {conflicted - len(worse)}/{conflicted} conflicted fixtures")
    emit("C6", "lazy strategies add fewer headway rows than FullModel", ok, "; ".join(notes + worse))
    assert ok


# -- C7 ---------------------------------------------------------------------------

def _random_cases():
    rng = np.random.default_rng(77)
    seed = 0
    while True:
        template = ["line", "junction", "corridor"][seed % 3]
        trains = int(rng.integers(2, 4)) if template != "corridor" else 2
        horizon = float(rng.choice([150.0, 300.0, 600.0]))
        strategy = LAZY[int(rng.integers(len(LAZY)))]
        gap = float(rng.choice([0.0, 10.0]))
        yield seed, template, trains, horizon, strategy, gap
        seed += 1


def test_c7_validator_agrees_with_model():
    solved_count, infeasible, dirty = 0, 0, []
    start = time.perf_counter()
    for seed, template, trains, horizon, strategy, gap in _random_cases():
        inst = generate_instance(1000 + seed, trains, template, horizon)
        r = solve_iteratively(inst, SolveConfig(strategy=strategy, gap_abs=gap), verify=False)
        if r.status is SolveStatus.INFEASIBLE:
            infeasible += 1
            continue
        assert r.status is SolveStatus.OPTIMAL, r.status
        rep = verify_schedule(inst, r.schedule, tolerance=1e-4)
        if not rep.feasible:
            dirty.append(f"seed {1000 + seed} {template}/{strategy.cli_name}: {rep.entries[0].kind}")
        solved_count += 1
        if solved_count == 100:
            break
    ok = not dirty
    emit("C7", "validator clean on 100 randomized solved instances (tol 1e-4 s)", ok,
         f"{solved_count} solved, {infeasible} infeasible skipped, {len(dirty)} with violations, "
         f"{time.perf_counter() - start:.0f} s" + "".join("; " + d for d in dirty[:3]))
    assert ok


# -- C8 ---------------------------------------------------------------------------

def test_c8_determinism(tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"g{k}.json"
        cli_main(["generate", "--seed", "42", "--trains", "8", "--template", "corridor", "-o", str(path)])
        outs.append(path.read_bytes())
    proc = subprocess.run([sys.executable, "-m", "mbroute", "generate", "--seed", "42", "--trains", "8",
                           "--template", "corridor"], capture_output=True, check=True)
    same_gen = outs[0] == outs[1] == proc.stdout

    doc = F.line_three_trains()
    logs = []
    for _ in range(2):
        r = solve_iteratively(F.load(doc), SolveConfig(strategy=Strategy.FIRST_VIOLATION, gap_abs=0))
        logs.append([(line, rec.tags) for line, rec in zip(r.stats.iteration_log(with_time=False),
                                                           r.stats.per_iteration)])
    inst_path = tmp_path / "line3.json"
    inst_path.write_text(json.dumps(doc))
    out_path = tmp_path / "sol.json"
    subprocess.run([sys.executable, "-m", "mbroute", "solve", "-i", str(inst_path), "--strategy", "first-violation",
                    "--gap-abs", "0", "-o", str(out_path)], capture_output=True, check=True)
    cli_log = [line.rsplit(" time_s=", 1)[0] for line in json.loads(out_path.read_text())["stats"]["log"]]
    same_log = logs[0] == logs[1] and cli_log == [line for line, _ in logs[0]]
    ok = same_gen and same_log
    emit("C8", "determinism of generate and FirstViolation iteration logs", ok,
         f"generate byte-identical={same_gen} ({len(outs[0])} bytes); "
         f"FV log identical across 3 runs={same_log} ({len(logs[0])} iterations)")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
