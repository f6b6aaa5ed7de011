"""Synchronization edges and vector clocks over a trace."""

from __future__ import annotations

from dataclasses import dataclass

from ..runtime.events import Event, EventKind as K
from ..store import TraceBundle


class MalformedTrace(Exception):
    pass


@dataclass(frozen=True, order=True)
class SyncEdge:
    src: int  # event id
    dst: int
    kind: str  # spawn | chan | close | mutex | wg | cond


def _is_send_done(e: Event) -> bool:
    return e.kind is K.CH_SEND_POST or (e.kind is K.SELECT_POST and e.arg("dir") == "SEND")


def _recv_done(e: Event):
    """None if ``e`` is no receive completion, else whether it saw a closed channel."""
    if e.kind is K.CH_RECV_POST:
        return bool(e.aux)
    if e.kind is K.SELECT_POST and e.arg("dir") == "RECV":
        return e.arg("closed") == "1"
    return None


def check_pairing(bundle: TraceBundle):
    """Raise MalformedTrace for any *_POST without a pending matching *_PRE."""
    pending: dict[int, K] = {}
    for e in bundle.events:
        if e.kind.is_pre:
            pending[e.g] = e.kind
        elif e.kind.is_post:
            if pending.get(e.g) is not e.kind.partner:
                raise MalformedTrace(f"event {e.id}: {e.kind.value} in g{e.g} without a matching "
                                     f"{e.kind.partner.value}")
            del pending[e.g]


def sync_edges(bundle: TraceBundle) -> list[SyncEdge]:
    check_pairing(bundle)
    events = bundle.events
    edges: list[SyncEdge] = []
    sends: dict[int, list[int]] = {}
    recv_count: dict[int, int] = {}
    closes: dict[int, int] = {}
    last_unlock: dict[int, int] = {}
    neg_adds: dict[int, list[int]] = {}
    last_unblock: dict[int, Event] = {}
    creates: dict[int, int] = {}

    for e in events:
        match e.kind:
            case K.GO_CREATE:
                creates[e.value] = e.id
            case K.GO_START if e.g in creates:
                edges.append(SyncEdge(creates[e.g], e.id, "spawn"))
            case K.GO_UNBLOCK:
                last_unblock[e.g] = e
            case K.CH_CLOSE:
                closes.setdefault(e.res_id, e.id)
            case K.MU_UNLOCK:
                last_unlock[e.res_id] = e.id
            case K.MU_LOCK_POST if e.res_id in last_unlock:
                edges.append(SyncEdge(last_unlock.pop(e.res_id), e.id, "mutex"))
            case K.WG_ADD if e.value is not None and e.value < 0:
                neg_adds.setdefault(e.res_id, []).append(e.id)
            case K.WG_WAIT_POST:
                edges.extend(SyncEdge(a, e.id, "wg") for a in neg_adds.get(e.res_id, []))
            case K.CV_WAIT_POST:
                unblock = last_unblock.get(e.g)
                if unblock is not None and unblock.arg("by_event") is not None:
                    src = int(unblock.arg("by_event"))
                    if events[src].kind in (K.CV_SIGNAL, K.CV_BROADCAST):
                        edges.append(SyncEdge(src, e.id, "cond"))
        if _is_send_done(e):
            sends.setdefault(e.res_id, []).append(e.id)
        closed = _recv_done(e)
        if closed is True:
            if e.res_id in closes:
                edges.append(SyncEdge(closes[e.res_id], e.id, "close"))
        elif closed is False:
            k = recv_count.get(e.res_id, 0)
            recv_count[e.res_id] = k + 1
            matched = sends.get(e.res_id, [])
            if k >= len(matched):
                raise MalformedTrace(f"event {e.id}: receive #{k + 1} on resource {e.res_id} "
                                     f"has no completed send")
            edges.append(SyncEdge(matched[k], e.id, "chan"))
    return edges


VectorClock = dict[int, int]


def vector_clocks(bundle: TraceBundle, edges: list[SyncEdge] | None = None) -> dict[int, VectorClock]:
    """Event id -> vector clock (goroutine id -> count), zero entries omitted."""
    edges = sync_edges(bundle) if edges is None else edges
    incoming: dict[int, list[int]] = {}
    for edge in edges:
        incoming.setdefault(edge.dst, []).append(edge.src)
    current: dict[int, VectorClock] = {}
    out: dict[int, VectorClock] = {}
    for e in bundle.events:
        vc = dict(current.get(e.g, {}))
        for src in incoming.get(e.id, ()):
            for g, n in out[src].items():
                if n > vc.get(g, 0):
                    vc[g] = n
        vc[e.g] = vc.get(e.g, 0) + 1
        current[e.g] = vc
        out[e.id] = vc
    return out


def happens_before(vcs: dict[int, VectorClock], a: Event, b: Event) -> bool:
    """True iff ``a`` strictly precedes ``b`` in the happens-before order."""
    if a.id == b.id:
        return False
    return vcs[a.id][a.g] <= vcs[b.id].get(a.g, 0)


def vc_leq(x: VectorClock, y: VectorClock) -> bool:
    return all(n <= y.get(g, 0) for g, n in x.items())
