"""Brute-force happens-before: sync edges re-derived from the raw event rows,
then reachability over program order plus those edges."""

from collections import defaultdict, deque


def _kind(e):
    return e.kind.value


def oracle_edges(bundle):
    events = bundle.events
    edges = set()

    by_child = {e.value: e.id for e in events if _kind(e) == "GO_CREATE"}
    for e in events:
        if _kind(e) == "GO_START" and e.g in by_child:
            edges.add((by_child[e.g], e.id))

    # channels: k-th completed send pairs with k-th completed non-closed receive
    sends, recvs, closed_recvs, close_at = defaultdict(list), defaultdict(list), defaultdict(list), {}
    for e in events:
        k = _kind(e)
        direction = e.arg("dir") if k == "SELECT_POST" else None
        if k == "CH_SEND_POST" or direction == "SEND":
            sends[e.res_id].append(e.id)
        elif k == "CH_RECV_POST" or direction == "RECV":
            saw_closed = e.aux == 1 if k == "CH_RECV_POST" else e.arg("closed") == "1"
            (closed_recvs if saw_closed else recvs)[e.res_id].append(e.id)
        elif k == "CH_CLOSE" and e.res_id not in close_at:
            close_at[e.res_id] = e.id
    for ch, rs in recvs.items():
        assert len(rs) <= len(sends[ch])
        edges.update(zip(sends[ch], rs))
    for ch, rs in closed_recvs.items():
        edges.update((close_at[ch], r) for r in rs)

    # mutex: each unlock to the next acquisition of the same mutex
    for e in events:
        if _kind(e) != "MU_UNLOCK":
            continue
        nxt = next((x for x in events[e.id + 1:] if _kind(x) == "MU_LOCK_POST" and x.res_id == e.res_id), None)
        if nxt is not None:
            edges.add((e.id, nxt.id))

    # waitgroup: every earlier negative add to each wait release
    for e in events:
        if _kind(e) == "WG_WAIT_POST":
            edges.update((a.id, e.id) for a in events[: e.id]
                         if _kind(a) == "WG_ADD" and a.res_id == e.res_id and a.value < 0)

    # cond: the signal named by the waiter's wakeup
    for e in events:
        if _kind(e) != "CV_WAIT_POST":
            continue
        wake = next(x for x in reversed(events[: e.id]) if x.g == e.g and _kind(x) == "GO_UNBLOCK")
        src = int(wake.arg("by_event"))
        if _kind(events[src]) in ("CV_SIGNAL", "CV_BROADCAST"):
            edges.add((src, e.id))
    return edges


def closure(bundle):
    """Set of (a, b) event-id pairs with a strictly before b."""
    succ = defaultdict(set)
    last = {}
    for e in bundle.events:
        if e.g in last:
            succ[last[e.g]].add(e.id)
        last[e.g] = e.id
    for a, b in oracle_edges(bundle):
        succ[a].add(b)
    out = set()
    for e in bundle.events:
        seen, todo = set(), deque(succ[e.id])
        while todo:
            n = todo.popleft()
            if n not in seen:
                seen.add(n)
                todo.extend(succ[n])
        out.update((e.id, n) for n in seen)
    return out
