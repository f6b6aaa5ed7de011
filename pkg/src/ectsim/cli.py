"""Command line entry point: ``ectsim check|run|analyze|coverage|fuzz|bench``.

Exit codes: 0 clean, 2 bug found (or bench expectation violated), 1 usage,
parse or I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import corpus
from .analysis import (
    build_waitfor, critical_points, detect_leaks, export_dot, export_shiviz,
    format_leaks, format_waitfor, lane_view, lint_trace, read_points,
    write_points,
)
from .coverage import coverage_of, growth_curve, merge, to_csv
from .dsl import DslError, Program, load_program
from .fuzz import FuzzConfig, Verdict, classify_outcome, fuzz, report_text, write_report
from .runtime import Policy, SchedulerConfig, run
from .store import StoreError, load, save, to_bundle

EXIT_OK, EXIT_USAGE, EXIT_BUG = 0, 1, 2

POLICIES = {"fifo": Policy.FIFO, "random": Policy.RANDOM, "delay": Policy.DELAY_INJECT}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _read_source(path: str) -> tuple[str, str]:
    """(text, file name) for a path, falling back to the bundled corpus."""
    p = Path(path)
    if p.is_file():
        return p.read_text(encoding="utf-8"), p.name
    try:
        e = corpus.entry(p.name)
    except FileNotFoundError:
        raise UsageError(f"no such file: {path}") from None
    return e.text, e.file


def _load(path: str) -> Program:
    text, name = _read_source(path)
    return load_program(text, name)


def _print_diagnostics(err: DslError):
    for d in err.diagnostics:
        print(f"{d.loc}: {d.message}", file=sys.stderr)


# -- subcommands -------------------------------------------------------------


def cmd_check(args) -> int:
    _load(args.file)
    print(f"{args.file}: ok")
    return EXIT_OK


def cmd_run(args) -> int:
    program = _load(args.file)
    policy = POLICIES[args.policy]
    points = frozenset()
    if args.critical_points:
        points = read_points(args.critical_points)
    if policy is Policy.DELAY_INJECT and not points:
        raise UsageError("--policy delay needs a non-empty --critical-points file")
    try:
        config = SchedulerConfig(policy, seed=args.seed, p=args.p, d=args.d,
                                 critical_points=points, max_steps=args.max_steps)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    trace = run(program, config, args.arg0)
    run_id = args.id or f"{Path(program.file).stem}-{args.policy}-seed{args.seed}"
    bundle = to_bundle(trace, run_id)
    path = save(bundle, args.out, force=args.force)
    verdict = classify_outcome(bundle, trace.outcome.status)
    out = trace.outcome
    print(f"run: {run_id}")
    print(f"outcome: {out.status.value}")
    if out.fault is not None:
        print(f"fault: {out.fault.kind} at {out.fault.loc} in g{out.fault.g}")
    print(f"verdict: {verdict.value}")
    print(f"steps: {out.steps}")
    print(f"events: {len(trace.events)}")
    print(f"goroutines: {len(out.goroutines)}")
    print("outputs: " + " ".join(str(v) for v in out.outputs))
    if verdict is Verdict.LEAK:
        print(format_leaks(bundle, detect_leaks(bundle)), end="")
    print(f"saved: {path}")
    return EXIT_BUG if verdict.is_bug else EXIT_OK


def cmd_analyze(args) -> int:
    bundle = load(args.dir, args.run_id)
    chosen = any([args.leaks, args.waitfor, args.dot, args.shiviz, args.lanes,
                  args.critical_points, args.lint])
    if args.leaks or not chosen:
        print(format_leaks(bundle, detect_leaks(bundle)), end="")
    if args.waitfor or args.dot:
        graph = build_waitfor(bundle)
        if args.waitfor:
            print(format_waitfor(graph), end="")
        if args.dot:
            Path(args.dot).write_text(export_dot(graph), encoding="utf-8")
    if args.shiviz:
        Path(args.shiviz).write_text(export_shiviz(bundle), encoding="utf-8")
    if args.lanes:
        print(lane_view(bundle), end="")
    if args.critical_points:
        write_points(critical_points(bundle), args.critical_points)
    if args.lint:
        problems = lint_trace(bundle)
        for v in problems:
            print(v)
        print(f"lint: {len(problems)} violation(s)")
    return EXIT_OK


def cmd_coverage(args) -> int:
    bundles = [load(args.dir, rid) for rid in args.run_ids]
    sets = [coverage_of(b) for b in bundles]
    merged = merge(*sets)
    print("run,sync_pairs,blocking_blocked,blocked_pairs")
    for b, s in zip(bundles, sets):
        print(b.run_id + "," + ",".join(str(n) for n in s.sizes()))
    print("merged," + ",".join(str(n) for n in merged.sizes()))
    print("growth: " + " ".join("/".join(str(n) for n in sz) for sz in growth_curve(sets)))
    if args.csv:
        Path(args.csv).write_text(to_csv(merged), encoding="utf-8")
    return EXIT_OK


def _fuzz_config(args, arg0=None) -> FuzzConfig:
    try:
        return FuzzConfig(iterations=args.iters, base_seed=args.seed, p=args.p, d=args.d,
                          stop_on_first_bug=getattr(args, "stop_on_first_bug", False),
                          arg0=arg0, max_steps=args.max_steps)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_fuzz(args) -> int:
    program = _load(args.file)
    name = args.name or Path(program.file).stem
    report, _ = fuzz(program, _fuzz_config(args, args.arg0), name, args.out)
    write_report(report, args.out, name)
    print(report_text(report), end="")
    return EXIT_BUG if report.first_bug_iteration is not None else EXIT_OK


def cmd_bench(args) -> int:
    rows = []
    ok = True
    for e in corpus.entries():
        program = e.program()
        report, _ = fuzz(program, _fuzz_config(args, e.arg0), e.name, args.out)
        baseline = report.records[0].verdict.value
        if e.expect_fuzz == Verdict.CLEAN.value:
            fuzz_ok = not report.bug_classes
            found = "CLEAN" if fuzz_ok else "/".join(sorted(v.value for v in report.bug_classes))
            first = "-"
        else:
            first_i = report.first_of(Verdict(e.expect_fuzz))
            fuzz_ok = first_i is not None
            found = e.expect_fuzz if fuzz_ok else "not found"
            first = "-" if first_i is None else str(first_i)
        base_ok = baseline == e.expect_baseline
        passed = base_ok and fuzz_ok
        ok &= passed
        rows.append((e.name, e.expect_baseline, baseline, e.expect_fuzz, found, first,
                     "PASS" if passed else "FAIL"))
    header = ("program", "expect-baseline", "baseline", "expect-fuzz", "fuzz", "first-iter", "result")
    widths = [max(len(r[i]) for r in [header, *rows]) for i in range(len(header))]
    for r in [header, *rows]:
        print("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return EXIT_OK if ok else EXIT_BUG


# -- parser ------------------------------------------------------------------


def _add_sched_args(p, iters=None):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p", type=float, default=0.25, help="yield probability at a critical point")
    p.add_argument("--d", type=int, default=5, help="decisions a delayed goroutine sits out")
    p.add_argument("--max-steps", type=int, default=1_000_000)
    if iters is not None:
        p.add_argument("--iters", type=int, default=iters)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ectsim", description="CSP concurrency simulator with execution tracing")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse and validate a .csp program")
    p.add_argument("file")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("run", help="run a program and save its trace")
    p.add_argument("file")
    p.add_argument("--policy", choices=sorted(POLICIES), default="fifo")
    _add_sched_args(p)
    p.add_argument("--arg0", type=int)
    p.add_argument("--critical-points", help="file with one <file>:<line> per line")
    p.add_argument("--out", required=True)
    p.add_argument("--id", help="run id (default <program>-<policy>-seed<S>)")
    p.add_argument("--force", action="store_true", help="overwrite an existing run id")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("analyze", help="report on a saved trace")
    p.add_argument("dir")
    p.add_argument("run_id")
    p.add_argument("--leaks", action="store_true")
    p.add_argument("--waitfor", action="store_true")
    p.add_argument("--dot", help="write the wait-for graph as DOT")
    p.add_argument("--shiviz", help="write a ShiViz log")
    p.add_argument("--lanes", action="store_true")
    p.add_argument("--critical-points", help="write the trace's critical points")
    p.add_argument("--lint", action="store_true", help="check the pre/post protocol")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("coverage", help="synchronization coverage of saved traces")
    p.add_argument("dir")
    p.add_argument("run_ids", nargs="+")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("fuzz", help="delay-injection campaign")
    p.add_argument("file")
    _add_sched_args(p, iters=1000)
    p.add_argument("--arg0", type=int)
    p.add_argument("--stop-on-first-bug", action="store_true")
    p.add_argument("--name", help="prefix for saved run ids and report files")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fuzz)

    p = sub.add_parser("bench", help="check the bundled corpus against its expectations")
    _add_sched_args(p, iters=1000)
    p.add_argument("--out", help="save bug-exposing bundles here")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
    except DslError as exc:
        _print_diagnostics(exc)
    except (StoreError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
