"""Goroutine ancestry, application/system classification and leak detection."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from ..dsl.nodes import Site
from ..runtime.events import (
    MAIN_G, PROCESS_G, BlockReason, Event, EventKind as K, event_site,
)
from ..store import TraceBundle


class AnalysisError(Exception):
    pass


class GClass(enum.Enum):
    APPLICATION = "APPLICATION"
    SYSTEM = "SYSTEM"


@dataclass(frozen=True)
class GoroutineInfo:
    g: int
    parent: int
    func: str
    cls: GClass
    ancestry: tuple[int, ...]  # parents from the direct one up to g0


def spawn_table(bundle: TraceBundle) -> dict[int, tuple[int, str]]:
    """child id -> (parent id, function name), from GO_CREATE events."""
    table = {}
    for e in bundle.events:
        if e.kind is K.GO_CREATE:
            table[e.value] = (e.g, e.arg("func", "?"))
    return table


def classify(bundle: TraceBundle, system_funcs: frozenset[str] = frozenset()) -> dict[int, GoroutineInfo]:
    """APPLICATION iff the ancestry reaches main through application goroutines.

    ``system_funcs`` names functions whose goroutines count as runtime helpers.
    """
    table = spawn_table(bundle)
    for e in bundle.events:
        if e.g != PROCESS_G and e.g not in table:
            raise AnalysisError(f"orphan goroutine g{e.g}: no GO_CREATE in trace (event {e.id})")
    out: dict[int, GoroutineInfo] = {}
    for g in sorted(table):
        chain = []
        cur = table[g][0]
        while cur != PROCESS_G:
            if cur in chain or cur not in table:
                raise AnalysisError(f"broken ancestry for g{g} at g{cur}")
            chain.append(cur)
            cur = table[cur][0]
        chain.append(PROCESS_G)
        lineage = [g, *chain[:-1]]
        is_app = (
            (g == MAIN_G or MAIN_G in chain)
            and not any(table[x][1] in system_funcs for x in lineage if x != MAIN_G)
        )
        out[g] = GoroutineInfo(g, table[g][0], table[g][1],
                               GClass.APPLICATION if is_app else GClass.SYSTEM, tuple(chain))
    return out


def display_names(names: dict) -> dict:
    """Disambiguate colliding display names by appending ``#id``."""
    counts: dict[str, int] = {}
    for n in names.values():
        counts[n] = counts.get(n, 0) + 1
    return {k: (n if counts[n] == 1 else f"{n}#{k}") for k, n in names.items()}


def goroutine_names(bundle: TraceBundle) -> dict[int, str]:
    return display_names({g: func for g, (_, func) in spawn_table(bundle).items()})


def resource_names(bundle: TraceBundle) -> dict[int, str]:
    known = {rid: r.name for rid, r in bundle.resources.items()}
    for e in bundle.events:
        if e.res_id is not None and e.res_id not in known:
            known[e.res_id] = f"{e.res_kind.value.lower()}{e.res_id}"
    return display_names(known)


@dataclass(frozen=True)
class BlockState:
    """What a goroutine whose final event is GO_BLOCK is waiting for."""

    g: int
    event: Event  # the GO_BLOCK
    reason: BlockReason
    # (resource id, direction) pairs; direction is SEND/RECV/LOCK/WGWAIT/CVWAIT
    waits: tuple[tuple[int, str], ...]


def final_events(bundle: TraceBundle) -> dict[int, Event]:
    last = {}
    for e in bundle.events:
        last[e.g] = e
    return last


def block_states(bundle: TraceBundle) -> dict[int, BlockState]:
    last = final_events(bundle)
    last_select: dict[int, Event] = {}
    for e in bundle.events:
        if e.kind is K.SELECT_PRE:
            last_select[e.g] = e
    out = {}
    for g, e in last.items():
        if e.kind is not K.GO_BLOCK:
            continue
        reason = BlockReason(e.aux)
        if reason is BlockReason.SELECT:
            pre = last_select[g]
            waits = tuple((int(res), d) for d, res in select_cases(pre))
        else:
            waits = ((e.res_id, reason.name),)
        out[g] = BlockState(g, e, reason, waits)
    return out


def select_cases(pre: Event) -> list[tuple[str, str]]:
    """(direction, resource id text) for each case of a SELECT_PRE."""
    cases = []
    i = 0
    while pre.arg(f"case{i}_dir") is not None:
        cases.append((pre.arg(f"case{i}_dir"), pre.arg(f"case{i}_res")))
        i += 1
    return cases


def mutex_holders(bundle: TraceBundle) -> dict[int, Event]:
    """mutex id -> the MU_LOCK_POST of its owner at trace end."""
    held: dict[int, Event] = {}
    for e in bundle.events:
        if e.kind is K.MU_LOCK_POST:
            held[e.res_id] = e
        elif e.kind is K.MU_UNLOCK and e.res_id in held and held[e.res_id].g == e.g:
            del held[e.res_id]
    return held


class LeakState(enum.Enum):
    BLOCKED = "BLOCKED"
    RUNNABLE = "RUNNABLE"  # alive but not blocked when the trace ended


@dataclass(frozen=True)
class Leak:
    g: int
    func: str
    final_kind: Optional[K]  # None: the goroutine never got to run
    state: LeakState
    reason: Optional[BlockReason] = None
    resources: tuple[int, ...] = ()
    site: Optional[Site] = None  # the pending operation
    holder: Optional[int] = None  # owner of the awaited mutex


@dataclass(frozen=True)
class LeakReport:
    leaks: tuple[Leak, ...]

    def __len__(self):
        return len(self.leaks)

    def __bool__(self):
        return bool(self.leaks)

    def __iter__(self):
        return iter(self.leaks)

    def get(self, g: int) -> Optional[Leak]:
        return next((x for x in self.leaks if x.g == g), None)


def detect_leaks(bundle: TraceBundle, classes: Optional[dict[int, GoroutineInfo]] = None) -> LeakReport:
    """Application goroutines whose final event is not GO_END."""
    classes = classify(bundle) if classes is None else classes
    last = final_events(bundle)
    blocked = block_states(bundle)
    holders = mutex_holders(bundle)
    leaks = []
    for g, info in sorted(classes.items()):
        if info.cls is not GClass.APPLICATION:
            continue
        e = last.get(g)
        if e is not None and e.kind is K.GO_END:
            continue
        if g in blocked:
            b = blocked[g]
            rids = tuple(r for r, _ in b.waits)
            holder = None
            if b.reason is BlockReason.LOCK and rids[0] in holders:
                holder = holders[rids[0]].g
            leaks.append(Leak(g, info.func, e.kind, LeakState.BLOCKED, b.reason, rids,
                              event_site(e, bundle.stacks), holder))
        else:
            leaks.append(Leak(g, info.func, None if e is None else e.kind, LeakState.RUNNABLE,
                              site=None if e is None else event_site(e, bundle.stacks)))
    return LeakReport(tuple(leaks))


def format_leaks(bundle: TraceBundle, report: LeakReport) -> str:
    if not report:
        return "no leaked goroutines\n"
    gnames = goroutine_names(bundle)
    rnames = resource_names(bundle)
    lines = []
    for leak in report:
        head = f"{gnames.get(leak.g, leak.g)} (g{leak.g})"
        if leak.state is LeakState.BLOCKED:
            res = ", ".join(rnames[r] for r in leak.resources)
            text = f"{head}: blocked {leak.reason.name} on {res} at {leak.site}"
            if leak.holder is not None:
                text += f", held by {gnames.get(leak.holder)} (g{leak.holder})"
        else:
            last = leak.final_kind.value if leak.final_kind else "nothing"
            text = f"{head}: still runnable, last event {last}"
        lines.append(text)
    return "\n".join(lines) + "\n"

