"""Critical-point schedule fuzzing campaign."""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .analysis.goroutines import detect_leaks
from .analysis.points import critical_points
from .coverage import EMPTY, CoverageSet, Sizes, coverage_of, merge
from .dsl.nodes import Program, Site
from .runtime.machine import RunStatus, run
from .runtime.scheduler import DEFAULT_MAX_STEPS, Policy, SchedulerConfig
from .store import TraceBundle, save, to_bundle


class Verdict(enum.Enum):
    CLEAN = "CLEAN"
    LEAK = "LEAK"
    GLOBAL_DEADLOCK = "GLOBAL_DEADLOCK"
    FAULT = "FAULT"

    @property
    def is_bug(self) -> bool:
        return self is not Verdict.CLEAN


def classify_outcome(bundle: TraceBundle, status: RunStatus | str | None = None) -> Verdict:
    """Deadlock and fault pass through; otherwise LEAK iff some goroutine leaked."""
    status = RunStatus(status if status is not None else bundle.outcome)
    if status is RunStatus.GLOBAL_DEADLOCK:
        return Verdict.GLOBAL_DEADLOCK
    if status is RunStatus.FAULT:
        return Verdict.FAULT
    return Verdict.LEAK if detect_leaks(bundle) else Verdict.CLEAN


@dataclass(frozen=True)
class FuzzConfig:
    iterations: int = 1000
    base_seed: int = 0
    p: float = 0.25
    d: int = 5
    stop_on_first_bug: bool = False
    arg0: Optional[int] = None
    max_steps: int = DEFAULT_MAX_STEPS

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must be in [0, 1]")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if not 0 <= self.base_seed < 2**64:
            raise ValueError("base seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class IterationRecord:
    index: int
    seed: int
    policy: Policy
    status: RunStatus
    verdict: Verdict
    leaks: int
    new_coverage: Sizes
    points: int  # critical points known when this iteration ran
    run_id: Optional[str] = None  # set when the bundle was saved


@dataclass
class FuzzReport:
    program: str
    config: FuzzConfig
    records: list[IterationRecord] = field(default_factory=list)
    curve: list[Sizes] = field(default_factory=list)
    critical_points: list[Site] = field(default_factory=list)
    note: Optional[str] = None

    @property
    def first_bug_iteration(self) -> Optional[int]:
        return next((r.index for r in self.records if r.verdict.is_bug), None)

    @property
    def first_bug(self) -> Optional[IterationRecord]:
        i = self.first_bug_iteration
        return None if i is None else self.records[i]

    @property
    def bug_classes(self) -> set[Verdict]:
        return {r.verdict for r in self.records if r.verdict.is_bug}

    def first_of(self, verdict: Verdict) -> Optional[int]:
        return next((r.index for r in self.records if r.verdict is verdict), None)


def _delta(before: Sizes, after: Sizes) -> Sizes:
    return Sizes(*(a - b for a, b in zip(after, before)))


def fuzz(program: Program, config: FuzzConfig, name: str = "run",
         out_dir=None, keep_bundles: bool = False) -> tuple[FuzzReport, list[TraceBundle]]:
    """Baseline FIFO run, then DELAY_INJECT iterations around harvested points.

    Bundles of bug-exposing iterations are saved under ``out_dir`` as
    ``<name>-iter<i>``. Returns the report and the iteration bundles that were
    kept (all of them with ``keep_bundles``, otherwise the bug-exposing ones).
    """
    report = FuzzReport(program.file, config)
    kept: list[TraceBundle] = []
    cumulative: CoverageSet = EMPTY
    points: set[Site] = set()

    for i in range(config.iterations):
        if i == 0:
            cfg = SchedulerConfig(Policy.FIFO, seed=config.base_seed, max_steps=config.max_steps)
        else:
            if not points:
                report.note = "no critical points: the baseline run used no concurrency operations"
                break
            cfg = SchedulerConfig(Policy.DELAY_INJECT, seed=(config.base_seed + i) % 2**64,
                                  p=config.p, d=config.d, critical_points=frozenset(points),
                                  max_steps=config.max_steps)
        trace = run(program, cfg, config.arg0)
        run_id = f"{name}-iter{i}"
        bundle = to_bundle(trace, run_id)
        verdict = classify_outcome(bundle, trace.outcome.status)
        leaks = len(detect_leaks(bundle))
        cov = coverage_of(bundle)
        before = cumulative.sizes()
        cumulative = merge(cumulative, cov)
        known = len(points)
        points.update(critical_points(bundle))

        saved = None
        if verdict.is_bug and out_dir is not None:
            save(bundle, out_dir, force=True)
            saved = run_id
        if verdict.is_bug or keep_bundles:
            kept.append(bundle)
        report.records.append(IterationRecord(
            i, cfg.seed, cfg.policy, trace.outcome.status, verdict, leaks,
            _delta(before, cumulative.sizes()), known, saved,
        ))
        report.curve.append(cumulative.sizes())
        if verdict.is_bug and config.stop_on_first_bug:
            break

    if config.iterations == 1 and not points:
        report.note = "no critical points: the baseline run used no concurrency operations"
    report.critical_points = sorted(points)
    return report, kept


_CSV_HEADER = (
    "iteration", "seed", "policy", "status", "verdict", "leaks", "points",
    "new_sync_pairs", "new_blocking_blocked", "new_blocked_pairs",
    "sync_pairs", "blocking_blocked", "blocked_pairs", "run_id",
)


def report_csv(report: FuzzReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_CSV_HEADER)
    for r, cum in zip(report.records, report.curve):
        w.writerow((r.index, r.seed, r.policy.value, r.status.value, r.verdict.value,
                    r.leaks, r.points, *r.new_coverage, *cum, r.run_id or ""))
    return buf.getvalue()


def report_text(report: FuzzReport) -> str:
    cfg = report.config
    lines = [
        f"program: {report.program}",
        f"iterations run: {len(report.records)} of {cfg.iterations}"
        f" (base seed {cfg.base_seed}, p {cfg.p}, d {cfg.d})",
        f"critical points: {len(report.critical_points)}",
    ]
    if report.note:
        lines.append(f"note: {report.note}")
    first = report.first_bug
    if first is None:
        lines.append("bugs: none")
    else:
        lines.append(f"first bug: iteration {first.index} ({first.verdict.value}, seed {first.seed}"
                     + (f", bundle {first.run_id})" if first.run_id else ")"))
        counts: dict[Verdict, int] = {}
        for r in report.records:
            if r.verdict.is_bug:
                counts[r.verdict] = counts.get(r.verdict, 0) + 1
        lines.append("bugs: " + ", ".join(f"{v.value} x{n}" for v, n in
                                          sorted(counts.items(), key=lambda kv: kv[0].value)))
    if report.curve:
        final = report.curve[-1]
        lines.append(f"coverage: sync_pairs={final.sync_pairs} blocking_blocked={final.blocking_blocked}"
                     f" blocked_pairs={final.blocked_pairs}")
    return "\n".join(lines) + "\n"


def write_report(report: FuzzReport, out_dir, name: str) -> tuple[Path, Path]:
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    text_path = root / f"{name}-fuzz.txt"
    csv_path = root / f"{name}-fuzz.csv"
    text_path.write_text(report_text(report), encoding="utf-8")
    csv_path.write_text(report_csv(report), encoding="utf-8")
    return text_path, csv_path
