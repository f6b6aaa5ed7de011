import pytest

from conftest import bundle_of
from ectsim import corpus
from ectsim.analysis import build_waitfor, critical_points, cycle_names, detect_leaks, find_cycles
from ectsim.analysis.goroutines import LeakState
from ectsim.coverage import coverage_of, growth_curve
from ectsim.dsl import load_program
from ectsim.fuzz import (
    FuzzConfig, Verdict, classify_outcome, fuzz, report_csv, report_text,
    write_report,
)
from ectsim.runtime import BlockReason, Policy, RunStatus, SchedulerConfig, run
from ectsim.store import load, to_bundle


def moby_signature(bundle):
    """(leaks, cycles) with names instead of ids."""
    names = {rid: r.name for rid, r in bundle.resources.items()}
    leaks = []
    report = detect_leaks(bundle)
    gfunc = {x.g: x.func for x in report}
    for x in report:
        holder = None if x.holder is None else gfunc.get(x.holder, x.holder)
        leaks.append((x.func, x.state, x.reason, tuple(names[r] for r in x.resources), holder))
    g = build_waitfor(bundle)
    return leaks, [cycle_names(g, c) for c in find_cycles(g)]


MOBY_LEAK = (
    [("Monitor", LeakState.BLOCKED, BlockReason.LOCK, ("M1",), "StatusChange"),
     ("StatusChange", LeakState.BLOCKED, BlockReason.SEND, ("C1",), None)],
    [["Monitor", "M1", "StatusChange", "C1", "Monitor"]],
)


def test_moby_campaign_finds_the_leak(moby, tmp_path):
    report, bundles = fuzz(moby, FuzzConfig(iterations=1000, base_seed=1), "moby", tmp_path)
    assert report.records[0].verdict is Verdict.CLEAN
    assert report.first_bug is not None and report.first_bug.verdict is Verdict.LEAK
    assert report.bug_classes == {Verdict.LEAK}
    exact = [b for b in bundles if moby_signature(b) == MOBY_LEAK]
    assert exact
    saved = load(tmp_path, exact[0].run_id)
    assert moby_signature(saved) == MOBY_LEAK


def test_fifo_alone_finds_nothing(moby):
    report, bundles = fuzz(moby, FuzzConfig(iterations=1, p=0.0))
    assert [r.policy for r in report.records] == [Policy.FIFO]
    assert report.first_bug_iteration is None and not bundles


def test_empty_main_notes_missing_points():
    p = load_program("func main() { }", "e.csp")
    for iters in (1, 5):
        report, _ = fuzz(p, FuzzConfig(iterations=iters))
        assert report.note and "no critical points" in report.note
        assert len(report.records) == 1 and report.first_bug_iteration is None
        assert "note: no critical points" in report_text(report)


def test_campaign_is_deterministic(moby):
    cfg = FuzzConfig(iterations=60, base_seed=9)
    a, ab = fuzz(moby, cfg, keep_bundles=True)
    b, bb = fuzz(moby, cfg, keep_bundles=True)
    assert a == b and ab == bb
    assert report_csv(a) == report_csv(b)


def test_stop_on_first_bug(moby):
    report, _ = fuzz(moby, FuzzConfig(iterations=1000, base_seed=3, stop_on_first_bug=True))
    assert report.first_bug_iteration == len(report.records) - 1


def test_seeds_and_policies(moby):
    report, _ = fuzz(moby, FuzzConfig(iterations=5, base_seed=40))
    assert [r.seed for r in report.records] == [40, 41, 42, 43, 44]
    assert [r.policy for r in report.records] == [Policy.FIFO] + [Policy.DELAY_INJECT] * 4


def test_curve_matches_growth_of_bundles(moby):
    report, bundles = fuzz(moby, FuzzConfig(iterations=40, base_seed=2), keep_bundles=True)
    assert len(bundles) == 40
    assert report.curve == growth_curve([coverage_of(b) for b in bundles])
    deltas = [r.new_coverage for r in report.records]
    running = [tuple(sum(d[k] for d in deltas[: i + 1]) for k in range(3)) for i in range(len(deltas))]
    assert running == [tuple(c) for c in report.curve]


def test_points_grow_monotonically():
    e = corpus.entry("wg_missing_done")
    report, bundles = fuzz(e.program(), FuzzConfig(iterations=50, base_seed=0), keep_bundles=True)
    known = [r.points for r in report.records]
    assert known == sorted(known)
    assert report.critical_points == critical_points(*bundles)
    for i, r in enumerate(report.records[1:], 1):
        assert r.points == len(critical_points(*bundles[:i]))


def test_bug_bundles_saved_by_iteration(tmp_path):
    e = corpus.entry("select_race")
    report, _ = fuzz(e.program(), FuzzConfig(iterations=30, base_seed=0), "sr", tmp_path)
    bugs = [r for r in report.records if r.verdict.is_bug]
    assert bugs
    assert sorted(p.name for p in tmp_path.iterdir()) == sorted(f"sr-iter{r.index}" for r in bugs)
    assert all(r.run_id == f"sr-iter{r.index}" for r in bugs)
    assert all(r.run_id is None for r in report.records if not r.verdict.is_bug)


def test_report_files(tmp_path, moby):
    report, _ = fuzz(moby, FuzzConfig(iterations=10, base_seed=1), "m")
    txt, csv_path = write_report(report, tmp_path, "m")
    assert txt.name == "m-fuzz.txt" and csv_path.name == "m-fuzz.csv"
    rows = csv_path.read_text().splitlines()
    assert len(rows) == 11 and rows[0].startswith("iteration,seed,policy,status,verdict")
    assert "first bug: iteration" in txt.read_text()


def test_classify_outcome_examples(moby_leaky):
    assert classify_outcome(moby_leaky) is Verdict.LEAK
    dead = bundle_of("func main() {\n c = make(chan)\n recv c\n}")
    assert classify_outcome(dead) is Verdict.GLOBAL_DEADLOCK
    clean = corpus.entry("primesieve_clean")
    b = to_bundle(run(clean.program(), SchedulerConfig(), 4), "c")
    assert classify_outcome(b) is Verdict.CLEAN
    assert classify_outcome(bundle_of("func main() {\n z = 0\n x = 1 % z\n}")) is Verdict.FAULT


def test_watchdog_timeout_counts_as_leak():
    b = bundle_of("""
func Spin() { loop { yield } }
func main() {
    go Spin()
    loop { yield }
}""", SchedulerConfig(max_steps=100))
    assert b.outcome == RunStatus.WATCHDOG_TIMEOUT.value
    assert classify_outcome(b) is Verdict.LEAK


@pytest.mark.parametrize("kwargs", [dict(iterations=0), dict(p=1.5), dict(d=0), dict(base_seed=-1)])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        FuzzConfig(**kwargs)
