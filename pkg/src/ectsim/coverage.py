"""Synchronization coverage: sync pairs, blocking/blocked sites, blocked pairs."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from .analysis.hb import sync_edges
from .dsl.nodes import Site
from .runtime.events import BlockReason, EventKind as K, event_site
from .store import TraceBundle

BLOCKED = "BLOCKED"
BLOCKING = "BLOCKING"


class CoverageError(Exception):
    pass


class Sizes(NamedTuple):
    sync_pairs: int
    blocking_blocked: int
    blocked_pairs: int


@dataclass(frozen=True)
class CoverageSet:
    program: Optional[str] = None  # None only for the empty set
    sync_pairs: frozenset[tuple[Site, Site]] = field(default_factory=frozenset)
    blocking_blocked: frozenset[tuple[Site, str]] = field(default_factory=frozenset)
    blocked_pairs: frozenset[tuple[Site, Site]] = field(default_factory=frozenset)

    def sizes(self) -> Sizes:
        return Sizes(len(self.sync_pairs), len(self.blocking_blocked), len(self.blocked_pairs))

    def same_items(self, other: "CoverageSet") -> bool:
        return (self.sync_pairs == other.sync_pairs
                and self.blocking_blocked == other.blocking_blocked
                and self.blocked_pairs == other.blocked_pairs)


EMPTY = CoverageSet()


def coverage_of(bundle: TraceBundle) -> CoverageSet:
    events = bundle.events

    def site(e):
        return event_site(e, bundle.stacks)

    pairs = {(site(events[x.src]), site(events[x.dst]))
             for x in sync_edges(bundle) if x.kind != "spawn"}

    flags = set()
    blocked_pairs = set()
    open_pre = {}
    holder: dict[int, object] = {}  # mutex id -> MU_LOCK_POST of current owner
    for e in events:
        if e.kind.is_pre:
            open_pre[e.g] = e
        elif e.kind.is_post:
            open_pre.pop(e.g, None)
        match e.kind:
            case K.GO_BLOCK:
                pre = open_pre.get(e.g)
                if pre is not None:
                    flags.add((site(pre), BLOCKED))
                if e.aux == BlockReason.LOCK and e.res_id in holder:
                    blocked_pairs.add((site(e), site(holder[e.res_id])))
            case K.GO_UNBLOCK:
                by = e.arg("by_event")
                if by is not None:
                    flags.add((site(events[int(by)]), BLOCKING))
            case K.MU_LOCK_POST:
                holder[e.res_id] = e
            case K.MU_UNLOCK if e.res_id in holder and holder[e.res_id].g == e.g:
                del holder[e.res_id]
    return CoverageSet(bundle.program, frozenset(pairs), frozenset(flags), frozenset(blocked_pairs))


def merge(*sets: CoverageSet) -> CoverageSet:
    programs = {s.program for s in sets if s.program is not None}
    if len(programs) > 1:
        raise CoverageError(f"cannot merge coverage of different programs: {sorted(programs)}")
    return CoverageSet(
        programs.pop() if programs else None,
        frozenset().union(*(s.sync_pairs for s in sets)),
        frozenset().union(*(s.blocking_blocked for s in sets)),
        frozenset().union(*(s.blocked_pairs for s in sets)),
    )


def growth_curve(sets: list[CoverageSet]) -> list[Sizes]:
    """Sizes of the union of the first i+1 sets, for each i."""
    acc = EMPTY
    out = []
    for s in sets:
        acc = merge(acc, s)
        out.append(acc.sizes())
    return out


def rows(cov: CoverageSet) -> list[tuple[str, str, str]]:
    out = [("sync_pair", str(a), str(b)) for a, b in sorted(cov.sync_pairs)]
    out += [("blocking_blocked", str(a), flag) for a, flag in sorted(cov.blocking_blocked)]
    out += [("blocked_pair", str(a), str(b)) for a, b in sorted(cov.blocked_pairs)]
    return out


def to_csv(cov: CoverageSet) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("metric", "loc_a", "loc_b"))
    w.writerows(rows(cov))
    return buf.getvalue()
