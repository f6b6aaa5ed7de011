import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ectsim import corpus
from ectsim.dsl import Site, load_program
from ectsim.runtime import Policy, SchedulerConfig, run
from ectsim.store import to_bundle


def trace_of(text, config=None, arg0=None, file="t.csp"):
    return run(load_program(text, file), config or SchedulerConfig(), arg0)


def bundle_of(text, config=None, arg0=None, file="t.csp", run_id="t"):
    return to_bundle(trace_of(text, config, arg0, file), run_id)


def corpus_line(name, needle, after=None):
    """Line number of the first line equal to ``needle`` (stripped), optionally
    after the first line containing ``after``."""
    lines = corpus.entry(name).text.splitlines()
    start = 0
    if after is not None:
        start = next(i for i, l in enumerate(lines) if after in l)
    return next(i + 1 for i in range(start, len(lines)) if lines[i].strip() == needle)


def moby_leaky_config(seed=0):
    """Forced schedule: Monitor always sits out at its lock after the select default."""
    line = corpus_line("moby28462", "lock m", after="func Monitor")
    return SchedulerConfig(Policy.DELAY_INJECT, seed=seed, p=1.0, d=10,
                           critical_points=frozenset({Site("moby28462.csp", line)}))


@pytest.fixture(scope="session")
def moby():
    return corpus.entry("moby28462").program()


@pytest.fixture(scope="session")
def moby_clean(moby):
    return to_bundle(run(moby), "moby-clean")


@pytest.fixture(scope="session")
def moby_leaky(moby):
    return to_bundle(run(moby, moby_leaky_config()), "moby-leaky")


def corpus_bundles():
    """(name, bundle) for every corpus program under the three policies."""
    out = []
    for e in corpus.entries():
        p = e.program()
        fifo = to_bundle(run(p, SchedulerConfig(), e.arg0), f"{e.name}-fifo")
        out.append((f"{e.name}-fifo", fifo))
        out.append((f"{e.name}-random", to_bundle(
            run(p, SchedulerConfig(Policy.RANDOM, seed=7), e.arg0), f"{e.name}-random")))
        from ectsim.analysis import critical_points
        pts = frozenset(critical_points(fifo))
        if pts:
            cfg = SchedulerConfig(Policy.DELAY_INJECT, seed=7, critical_points=pts)
            out.append((f"{e.name}-delay", to_bundle(run(p, cfg, e.arg0), f"{e.name}-delay")))
    return out
