"""Command line: run scenarios and emit verification reports.

    modindex run FILE [--seed N] [--tolerance X] [--format json|md|csv] [--out PATH] [--jobs N] [--timings]
    modindex verify FILE [--seed N] [--tolerance X] [--jobs N]
    modindex list-checks

Exit codes: 0 when every check passes, 1 when a check fails or errors,
2 for usage, parse and validation errors.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from . import report as rp
from .errors import ScenarioError
from .ops import OPS
from .scenario import DEFAULT_TOLERANCE, SCENARIO_VERSION, Check, Context, Scenario, load, stream


def _status(residuals: dict[str, float], tol: float, expect: str) -> tuple[str, float]:
    vals = [float(v) for v in residuals.values()]
    worst = max(vals, default=0.0)
    if any(math.isnan(v) for v in vals):
        worst = math.nan
    if expect == "fail":
        return ("pass" if worst > tol else "fail"), worst
    return ("pass" if worst <= tol else "fail"), worst


def run_check(ctx: Context, check: Check, tolerance: float, timings: bool) -> dict:
    op = OPS[check.op]
    rng = stream(ctx.scenario.seed, "check:" + check.id)
    entry = {"id": check.id, "op": check.op, "identity": op.identity, "expect": check.expect,
             "tolerance": tolerance}
    t0 = time.perf_counter()
    try:
        out = op.fn(ctx, check.args, rng)
    except Exception as exc:  # reported per check, never fatal to the run
        entry.update(status="error", max_residual="nan", residuals={}, values={}, warnings=[],
                     error=f"{type(exc).__name__}: {exc}", headline=None, table=[])
    else:
        status, worst = _status(out.residuals, tolerance, check.expect)
        entry.update(status=status, max_residual=worst, residuals=out.residuals, values=out.values,
                     warnings=list(out.warnings), error=None, headline=out.headline, table=out.table)
    if timings:
        entry["wall_time"] = time.perf_counter() - t0
    return rp.clean(entry)


def run(scenario: Scenario, *, seed: int | None = None, tolerance: float | None = None,
        jobs: int | None = None, timings: bool = False) -> dict:
    """Execute every check; the report lists them in declaration order."""
    if seed is not None:
        scenario = replace(scenario, seed=int(seed))
    ctx = Context(scenario)
    ctx.build_all()
    base = tolerance if tolerance is not None else scenario.tolerance

    def one(check: Check) -> dict:
        return run_check(ctx, check, check.tolerance if check.tolerance is not None else base, timings)

    jobs = jobs or int(os.environ.get("MODINDEX_JOBS", "1") or 1)
    if jobs > 1 and len(scenario.checks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            checks = list(pool.map(one, scenario.checks))
    else:
        checks = [one(c) for c in scenario.checks]
    tables = [row for c in checks for row in c.pop("table")]
    summary = {"total": len(checks),
               "passed": sum(c["status"] == "pass" for c in checks),
               "failed": sum(c["status"] == "fail" for c in checks),
               "errors": sum(c["status"] == "error" for c in checks)}
    return {"report_version": rp.REPORT_VERSION, "scenario": scenario.name,
            "scenario_version": SCENARIO_VERSION, "seed": scenario.seed,
            "inputs": {"source": scenario.source, "sha256": scenario.digest},
            "summary": summary, "checks": checks, "tables": tables}


def emit(report: dict, format: str = "json") -> str:
    return rp.emit(report, format)


def exit_code(report: dict) -> int:
    s = report["summary"]
    return 0 if s["failed"] == 0 and s["errors"] == 0 else 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit with 2, like argparse, but through main
        raise _Usage(message)


class _Usage(Exception):
    pass


def _positive_int(s: str) -> int:
    n = int(s)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def _positive_float(s: str) -> float:
    x = float(s)
    if not (x > 0 and math.isfinite(x)):
        raise argparse.ArgumentTypeError("must be a positive number")
    return x


def _seed(s: str) -> int:
    n = int(s)
    if n < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="modindex", description="Run verification scenarios and emit reports.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("run", "verify"):
        s = sub.add_parser(name, help="run a scenario" if name == "run" else "run, report only the exit code")
        s.add_argument("file")
        s.add_argument("--seed", type=_seed)
        s.add_argument("--tolerance", type=_positive_float)
        s.add_argument("--jobs", type=_positive_int)
        if name == "run":
            s.add_argument("--format", choices=rp.FORMATS, default="json")
            s.add_argument("--out")
            s.add_argument("--timings", action="store_true", help="record per-check wall time")
    sub.add_parser("list-checks", help="list the operation names")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _Usage as exc:
        print(f"modindex: usage error: {exc}", file=sys.stderr)
        return 2
    if args.command == "list-checks":
        for name, op in sorted(OPS.items()):
            print(f"{name}\t{op.identity}")
        return 0
    try:
        scenario = load(args.file)
        rep = run(scenario, seed=args.seed, tolerance=args.tolerance, jobs=args.jobs,
                  timings=getattr(args, "timings", False))
    except ScenarioError as exc:
        print(f"modindex: {args.file}: {exc}", file=sys.stderr)
        return 2
    if args.command == "run":
        doc = emit(rep, args.format)
        if args.out:
            Path(args.out).write_text(doc, encoding="utf-8")
        else:
            sys.stdout.write(doc)
    return exit_code(rep)


__all__ = ["main", "run", "emit", "exit_code", "DEFAULT_TOLERANCE"]
