"""Protocol checks over a recorded trace."""

from __future__ import annotations

from dataclasses import dataclass

from ..runtime.events import EventKind as K
from ..store import TraceBundle


@dataclass(frozen=True)
class Violation:
    event_id: int
    rule: str
    message: str

    def __str__(self):
        return f"event {self.event_id}: [{self.rule}] {self.message}"


def lint_trace(bundle: TraceBundle) -> list[Violation]:
    """Check pre/post pairing, the block/unblock sandwich, mutex exclusion,
    channel FIFO order and the shape of the process events."""
    out: list[Violation] = []
    events = bundle.events

    def bad(e, rule, msg):
        out.append(Violation(e.id, rule, msg))

    if not events or events[0].kind is not K.RUN_BEGIN:
        out.append(Violation(0, "frame", "trace does not start with RUN_BEGIN"))
    if not events or events[-1].kind is not K.RUN_END:
        out.append(Violation(len(events) - 1, "frame", "trace does not end with RUN_END"))
    for prev, e in zip(events, events[1:]):
        if e.ts <= prev.ts:
            bad(e, "clock", "timestamp does not increase")

    pending = {}  # g -> open PRE event
    # g -> "blocked" after GO_BLOCK, "woken" after GO_UNBLOCK
    phase: dict[int, str] = {}
    owner: dict[int, int] = {}
    sent: dict[int, list[int]] = {}
    received: dict[int, int] = {}

    for e in events:
        g = e.g
        if e.kind.category != "process" and e.kind is not K.SCHED_SWITCH:
            state = phase.get(g)
            if state == "blocked" and e.kind is not K.GO_UNBLOCK:
                bad(e, "sandwich", f"g{g} emitted {e.kind.value} while blocked")
            if state == "woken":
                if not e.kind.is_post or pending.get(g) is None or e.kind.partner is not pending[g].kind:
                    bad(e, "sandwich", f"GO_UNBLOCK of g{g} not followed by the matching POST")
                phase.pop(g, None)
        if e.kind.is_pre:
            if g in pending:
                bad(e, "pairing", f"{e.kind.value} while {pending[g].kind.value} is still open")
            pending[g] = e
        elif e.kind.is_post:
            pre = pending.pop(g, None)
            if pre is None or pre.kind is not e.kind.partner:
                bad(e, "pairing", f"{e.kind.value} without a matching {e.kind.partner.value}")
        elif e.kind is K.GO_BLOCK:
            if g not in pending:
                bad(e, "sandwich", "GO_BLOCK without an open PRE")
            phase[g] = "blocked"
        elif e.kind is K.GO_UNBLOCK:
            if phase.get(g) != "blocked":
                bad(e, "sandwich", f"GO_UNBLOCK of g{g}, which was not blocked")
            phase[g] = "woken"
        elif e.kind.category == "concurrency" and g in pending:
            bad(e, "pairing", f"{e.kind.value} while {pending[g].kind.value} is still open")

        match e.kind:
            case K.MU_LOCK_POST:
                if e.res_id in owner:
                    bad(e, "mutex", f"g{g} acquired mutex {e.res_id} held by g{owner[e.res_id]}")
                owner[e.res_id] = g
            case K.MU_UNLOCK if owner.get(e.res_id) == g:
                del owner[e.res_id]
        if e.kind is K.CH_SEND_POST or (e.kind is K.SELECT_POST and e.arg("dir") == "SEND"):
            sent.setdefault(e.res_id, []).append(e.value)
        is_recv = e.kind is K.CH_RECV_POST or (e.kind is K.SELECT_POST and e.arg("dir") == "RECV")
        closed = (e.aux == 1) if e.kind is K.CH_RECV_POST else e.arg("closed") == "1"
        if is_recv and not closed:
            k = received.get(e.res_id, 0)
            received[e.res_id] = k + 1
            queue = sent.get(e.res_id, [])
            if k >= len(queue) or queue[k] != e.value:
                bad(e, "fifo", f"receive #{k + 1} on resource {e.res_id} does not match send order")
    return out
