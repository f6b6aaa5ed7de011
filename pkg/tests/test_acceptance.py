"""End-to-end acceptance checks, one per criterion.

Each test prints a ``[PASS]`` or ``[FAIL]`` line (also when run directly with
``python3 tests/test_acceptance.py``) before asserting.
"""

import sys
import tempfile
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ectsim import corpus
from ectsim.analysis import (
    build_waitfor, classify, critical_points, cycle_names, detect_leaks,
    find_cycles, happens_before, lint_trace, vector_clocks,
)
from ectsim.analysis.goroutines import GClass, LeakState
from ectsim.coverage import coverage_of, growth_curve, merge
from ectsim.dsl import load_program
from ectsim.fuzz import FuzzConfig, Verdict, classify_outcome, fuzz
from ectsim.runtime import BlockReason, Policy, ResKind, SchedulerConfig, run
from ectsim.store import StoreError, load, render, save, to_bundle
from hb_oracle import closure
from progen import random_program

SEEDS = (1, 2, 3)


def first_primes(n):
    out, k = [], 2
    while len(out) < n:
        if all(k % p for p in out):
            out.append(k)
        k += 1
    return tuple(out)


def policies(program, arg0=None):
    """FIFO, RANDOM seed 7 and DELAY_INJECT seed 7 around the baseline's points."""
    base = to_bundle(run(program, SchedulerConfig(), arg0), "base")
    cfgs = [SchedulerConfig(), SchedulerConfig(Policy.RANDOM, seed=7)]
    pts = frozenset(critical_points(base))
    if pts:
        cfgs.append(SchedulerConfig(Policy.DELAY_INJECT, seed=7, critical_points=pts))
    return cfgs


def corpus_runs():
    for e in corpus.entries():
        p = e.program()
        for cfg in policies(p, e.arg0):
            yield e, cfg, to_bundle(run(p, cfg, e.arg0), f"{e.name}-{cfg.policy.value.lower()}")


def moby_signature(bundle):
    names = {rid: r.name for rid, r in bundle.resources.items()}
    report = detect_leaks(bundle)
    func = {x.g: x.func for x in report}
    leaks = sorted((x.func, x.state, x.reason, tuple(names[r] for r in x.resources),
                    func.get(x.holder)) for x in report)
    g = build_waitfor(bundle)
    return leaks, [cycle_names(g, c) for c in find_cycles(g)]


# -- criteria -----------------------------------------------------------------


def check_moby():
    e = corpus.entry("moby28462")
    p = e.program()
    baseline = classify_outcome(to_bundle(run(p), "fifo"))
    report, bugs = fuzz(p, FuzzConfig(iterations=1000, base_seed=1, p=0.25, d=5), "moby")
    want = (
        [("Monitor", LeakState.BLOCKED, BlockReason.LOCK, ("M1",), "StatusChange"),
         ("StatusChange", LeakState.BLOCKED, BlockReason.SEND, ("C1",), None)],
        [["Monitor", "M1", "StatusChange", "C1", "Monitor"]],
    )
    exact = [b for b in bugs if classify_outcome(b) is Verdict.LEAK and moby_signature(b) == want]
    ok = baseline is Verdict.CLEAN and bool(exact)
    first = exact[0].run_id if exact else "none"
    return ok, f"baseline {baseline.value}; {len(exact)} exact leak runs, first {first}"


def check_sieve():
    p = corpus.entry("primesieve").program()
    counts, detail = [], []
    ok = True
    for n in (1, 2, 4, 16, 64):
        t = run(p, SchedulerConfig(), n)
        b = to_bundle(t, f"sieve{n}")
        app = sum(1 for i in classify(b).values() if i.cls is GClass.APPLICATION)
        chans = sum(1 for r in t.resources.values() if r.kind is ResKind.CHAN)
        ok &= app == n + 2 and chans == n + 1 and t.outcome.outputs == first_primes(n)
        counts.append(len(t.events))
        detail.append(f"N={n}: {app}g/{chans}c/{len(t.events)}ev")
    ok &= all(a < b for a, b in zip(counts, counts[1:]))
    return ok, "; ".join(detail)


def check_determinism():
    n = 0
    for e in corpus.entries():
        p = e.program()
        for cfg in policies(p, e.arg0):
            a = render(to_bundle(run(p, cfg, e.arg0), "x"))
            b = render(to_bundle(run(p, cfg, e.arg0), "x"))
            for f in ("events.csv", "stack_frames.csv", "arguments.csv"):
                if a[f] != b[f]:
                    return False, f"{e.name} {cfg.policy.value}: {f} differs"
            n += 1
    return True, f"{n} program/policy pairs byte-identical"


def check_hb_oracle():
    traces = [b for _, _, b in corpus_runs() if len(b.events) <= 300]
    for seed in range(30):
        b = to_bundle(run(load_program(random_program(seed), "r.csp"),
                          SchedulerConfig(Policy.RANDOM, seed=seed)), f"r{seed}")
        if len(b.events) <= 300:
            traces.append(b)
    for b in traces:
        vcs = vector_clocks(b)
        order = {(x.id, y.id) for x in b.events for y in b.events if happens_before(vcs, x, y)}
        if order != closure(b):
            return False, f"{b.run_id}: order differs from closure"
    return len(traces) >= 20, f"{len(traces)} traces agree"


def check_lint():
    bundles = [b for _, _, b in corpus_runs()]
    for e in corpus.entries():
        _, kept = fuzz(e.program(), FuzzConfig(iterations=50, arg0=e.arg0), e.name, keep_bundles=True)
        bundles.extend(kept)
    bad = [(b.run_id, v) for b in bundles for v in lint_trace(b)]
    detail = f"{len(bundles)} traces, {len(bad)} violations"
    if bad:
        detail += f", first {bad[0][0]}: {bad[0][1]}"
    return not bad, detail


def check_global_deadlock():
    p = corpus.entry("send_no_receiver").program()
    seen = {}
    for variant in (0, 1):
        for cfg in policies(p, variant) + [SchedulerConfig(Policy.RANDOM, seed=s) for s in range(20)]:
            b = to_bundle(run(p, cfg, variant), "v")
            seen.setdefault(variant, set()).add(classify_outcome(b))
    ok = seen[0] == {Verdict.GLOBAL_DEADLOCK} and Verdict.GLOBAL_DEADLOCK not in seen[1] \
        and seen[1] <= {Verdict.CLEAN, Verdict.LEAK}
    return ok, f"main blocks: {sorted(v.value for v in seen[0])}; worker blocks: {sorted(v.value for v in seen[1])}"


def check_storage():
    bundles = [b for _, _, b in corpus_runs()]
    _, kept = fuzz(corpus.entry("moby28462").program(), FuzzConfig(iterations=30), "m", keep_bundles=True)
    bundles.extend(kept)
    with tempfile.TemporaryDirectory() as tmp:
        for i, b in enumerate(bundles):
            root = Path(tmp) / str(i)
            save(b, root)
            if load(root, b.run_id) != b:
                return False, f"{b.run_id} did not round-trip"
        run_dir = Path(tmp) / "0" / bundles[0].run_id
        rows = (run_dir / "arguments.csv").read_text()
        (run_dir / "arguments.csv").write_text(rows + "123456,0,x,1\n")
        try:
            load(Path(tmp) / "0", bundles[0].run_id)
            return False, "dangling event_id accepted"
        except StoreError as exc:
            if "row" not in str(exc):
                return False, f"error without row: {exc}"
            msg = str(exc)
    return True, f"{len(bundles)} bundles round-trip; rejected: {msg}"


def check_coverage():
    rendezvous = load_program("func S(c: chan) { send c 5 }\n"
                              "func main() { c = make(chan) go S(c) x = recv c }", "r.csp")
    one = coverage_of(to_bundle(run(rendezvous), "r")).sizes().sync_pairs
    ok = one == 1
    for e in corpus.entries():
        report, kept = fuzz(e.program(), FuzzConfig(iterations=40, arg0=e.arg0), e.name, keep_bundles=True)
        sets = [coverage_of(b) for b in kept]
        curve = growth_curve(sets)
        ok &= curve == report.curve
        ok &= all(x <= y for a, b in zip(curve, curve[1:]) for x, y in zip(a, b))
        for s in sets[:8]:
            ok &= merge(s, s).same_items(s)
            for t in sets[:8]:
                ok &= merge(s, t).same_items(merge(t, s))
    return ok, f"rendezvous sync pairs = {one}"


def check_acceleration():
    ok = True
    parts = []
    for e in corpus.entries():
        if e.expect_fuzz == Verdict.CLEAN.value:
            continue
        want = Verdict(e.expect_fuzz)
        schedule_dependent = e.expect_baseline == Verdict.CLEAN.value
        firsts = []
        for seed in SEEDS:
            report, _ = fuzz(e.program(), FuzzConfig(iterations=1000, base_seed=seed, arg0=e.arg0))
            if schedule_dependent and report.records[0].verdict.is_bug:
                ok = False
            firsts.append(report.first_of(want))
        ok &= any(f is not None for f in firsts)
        shown = "/".join("-" if f is None else str(f) for f in firsts)
        parts.append(f"{e.name} {want.value} first@{shown}" + (" (baseline clean)" if schedule_dependent else ""))
    return ok, "; ".join(parts)


CRITERIA = [
    ("1 moby monitor leak reproduction", check_moby),
    ("2 prime-sieve structure", check_sieve),
    ("3 determinism", check_determinism),
    ("4 happens-before oracle", check_hb_oracle),
    ("5 pre/post protocol lint", check_lint),
    ("6 global deadlock rule", check_global_deadlock),
    ("7 storage round-trip", check_storage),
    ("8 coverage properties", check_coverage),
    ("9 fuzz acceleration", check_acceleration),
]


def report(name, fn, out=print):
    start = time.perf_counter()
    ok, detail = fn()
    out(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail} ({time.perf_counter() - start:.1f}s)")
    return ok


@pytest.mark.parametrize("name,fn", CRITERIA, ids=[n.split(" ", 1)[0] for n, _ in CRITERIA])
def test_criterion(name, fn, capsys):
    with capsys.disabled():
        ok = report(name, fn, lambda line: print("\n" + line))
    assert ok


if __name__ == "__main__":
    results = [report(n, f) for n, f in CRITERIA]
    sys.exit(0 if all(results) else 1)
