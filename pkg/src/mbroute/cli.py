"""Command line: ``mbroute {solve,generate,benchmark,validate}``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from mbroute.bench import BenchmarkCase, cumulative_csv, rows_to_csv, run_benchmark
from mbroute.config import SolveConfig, Strategy
from mbroute.errors import MbrError
from mbroute.generator import TEMPLATES, generate_document
from mbroute.instance import load_instance
from mbroute.lazy import solve_iteratively
from mbroute.schedule import CandidateSolution
from mbroute.validator import verify_schedule
from mbroute.velocity_graph import KMH

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE, EXIT_TIME_LIMIT, EXIT_VIOLATIONS = 0, 1, 2, 3, 4
STRATEGY_CHOICES = [s.cli_name for s in Strategy]


def _config(args, strategy=None) -> SolveConfig:
    return SolveConfig(
        strategy=Strategy.parse(strategy or args.strategy),
        gap_abs=args.gap_abs,
        time_limit=args.time_limit,
        delta_v=args.delta_v * KMH,
        buffer=args.buffer,
        backend=args.backend,
    )


def _read(path):
    return Path(path).read_text()


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_solve(args) -> int:
    inst = load_instance(_read(args.instance))
    cfg = _config(args)
    res = solve_iteratively(inst, cfg)
    doc = {
        "status": res.status.value,
        "objective": res.objective,
        "stats": {"iterations": res.stats.iterations, "constraints_checked": res.stats.constraints_checked,
                  "constraints_added": res.stats.constraints_added, "wall_time_s": res.stats.wall_time,
                  "log": res.stats.iteration_log()},
        "schedule": res.schedule.to_dict() if res.schedule is not None else None,
        "report": res.report.to_dict() if res.report is not None else None,
    }
    if args.out:
        _write(args.out, json.dumps(doc, indent=2) + "\n")
    obj = "NA" if res.objective is None else f"{res.objective:.6f}"
    violations = len(res.report.entries) if res.report is not None else 0
    print(f"status={res.status.value} objective={obj} iterations={res.stats.iterations} "
          f"added={res.stats.constraints_added} violations={violations}")
    return {"Optimal": EXIT_OK, "Infeasible": EXIT_INFEASIBLE, "TimeLimit": EXIT_TIME_LIMIT}[res.status.value]


def cmd_generate(args) -> int:
    doc = generate_document(args.seed, args.trains, args.template, args.horizon)
    _write(args.out, json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def _instance_files(specs):
    files = []
    for spec in specs:
        p = Path(spec)
        files.extend(sorted(p.glob("*.json")) if p.is_dir() else [p])
    return files


def cmd_benchmark(args) -> int:
    cases = []
    for path in _instance_files(args.instance):
        text = _read(path)
        seed = json.loads(text).get("meta", {}).get("seed")
        cases.append(BenchmarkCase(path.stem, load_instance(text), seed))
    if not cases:
        raise MbrError("benchmark needs at least one instance")
    strategies = args.strategies.split(",") if args.strategies else STRATEGY_CHOICES
    rows = run_benchmark(cases, strategies, _config(args, "full"), args.repetitions)
    _write(args.out, rows_to_csv(rows))
    if args.out and args.out != "-":
        out = Path(args.out)
        out.with_name(out.stem + ".cumulative.csv").write_text(cumulative_csv(rows))
    return EXIT_OK


def cmd_validate(args) -> int:
    inst = load_instance(_read(args.instance))
    doc = json.loads(_read(args.schedule))
    sched = CandidateSolution.from_dict(doc["schedule"] if "schedule" in doc else doc)
    report = verify_schedule(inst, sched, SolveConfig(buffer=args.buffer), tolerance=args.tolerance)
    print(report.to_json(), end="")
    return EXIT_OK if report.feasible else EXIT_VIOLATIONS


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mbroute", description="Moving-block train routing and scheduling MILP")
    sub = p.add_subparsers(dest="verb", required=True)

    def solver_flags(sp, strategy=True):
        if strategy:
            sp.add_argument("--strategy", choices=STRATEGY_CHOICES, default="adjacent-violated")
        sp.add_argument("--gap-abs", type=float, default=10.0, help="absolute optimality gap in seconds")
        sp.add_argument("--time-limit", type=float, default=300.0, help="seconds per run")
        sp.add_argument("--delta-v", type=float, default=10.0, help="speed grid step in km/h")
        sp.add_argument("--buffer", type=float, default=0.0, help="extra headway distance in metres")
        sp.add_argument("--backend", choices=["highs", "scipy"], default="highs")

    s = sub.add_parser("solve", help="solve one instance")
    s.add_argument("-i", "--instance", required=True)
    s.add_argument("-o", "--out", help="write status, schedule and report here")
    s.add_argument("--seed", type=int, default=0, help="accepted for symmetry; solving is deterministic")
    solver_flags(s)
    s.set_defaults(func=cmd_solve)

    g = sub.add_parser("generate", help="write a seeded random instance")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--trains", type=int, default=5)
    g.add_argument("--template", choices=TEMPLATES, default="corridor")
    g.add_argument("--horizon", type=float, default=1800.0, help="seconds over which entries are spread")
    g.add_argument("-o", "--out", default="-")
    g.set_defaults(func=cmd_generate)

    b = sub.add_parser("benchmark", help="run strategies over instances and write CSV")
    b.add_argument("-i", "--instance", action="append", required=True, help="instance file or directory")
    b.add_argument("--strategies", help=f"comma list from {','.join(STRATEGY_CHOICES)}")
    b.add_argument("--repetitions", type=int, default=1)
    b.add_argument("--seed", type=int, default=None, help="unused; seeds come from instance metadata")
    b.add_argument("-o", "--out", default="-")
    solver_flags(b, strategy=False)
    b.set_defaults(func=cmd_benchmark)

    v = sub.add_parser("validate", help="check a schedule against an instance")
    v.add_argument("-i", "--instance", required=True)
    v.add_argument("--schedule", required=True)
    v.add_argument("--buffer", type=float, default=0.0)
    v.add_argument("--tolerance", type=float, default=1e-4)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    level = os.environ.get("MBR_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, MbrError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
