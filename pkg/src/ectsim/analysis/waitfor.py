"""End-state wait-for graph over goroutines and resources, with cycle search."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from ..runtime.events import EventKind as K, ResKind
from ..store import TraceBundle
from .goroutines import (
    block_states, goroutine_names, mutex_holders, resource_names, select_cases,
)


class EdgeKind(enum.Enum):
    WAITS = "WAITS"  # goroutine -> resource it is blocked on
    HELD_BY = "HELD_BY"  # mutex -> owner
    COUNTERPART = "COUNTERPART"  # chan/cond -> goroutine that could release the waiter


# Nodes are ("g", goroutine id) or ("r", resource id); the tuple order puts
# goroutines first, which makes the lowest-id goroutine the canonical cycle start.
Node = tuple[str, int]


@dataclass(frozen=True)
class Edge:
    src: Node
    dst: Node
    kind: EdgeKind

    def sort_key(self):
        return (self.src, self.dst, self.kind.value)


@dataclass
class WaitForGraph:
    goroutines: dict[int, str]  # id -> display name
    resources: dict[int, str]
    res_kinds: dict[int, ResKind]
    edges: list[Edge]

    def name(self, node: Node) -> str:
        kind, ident = node
        return self.goroutines[ident] if kind == "g" else self.resources[ident]

    def successors(self, node: Node) -> list[Node]:
        return sorted({e.dst for e in self.edges if e.src == node})

    def has_edge(self, src: Node, dst: Node, kind: EdgeKind | None = None) -> bool:
        return any(e.src == src and e.dst == dst and (kind is None or e.kind is kind)
                   for e in self.edges)


_OPPOSITE = {"SEND": "RECV", "RECV": "SEND"}


def _chan_evidence(bundle: TraceBundle) -> dict[tuple[int, str], set[int]]:
    """(chan id, direction) -> goroutines that showed they perform it."""
    ev: dict[tuple[int, str], set[int]] = {}

    def note(rid, direction, g):
        ev.setdefault((rid, direction), set()).add(g)

    for e in bundle.events:
        match e.kind:
            case K.CH_SEND_PRE | K.CH_SEND_POST:
                note(e.res_id, "SEND", e.g)
            case K.CH_RECV_PRE | K.CH_RECV_POST:
                note(e.res_id, "RECV", e.g)
            case K.CH_CLOSE:
                note(e.res_id, "SEND", e.g)  # closing releases receivers too
            case K.SELECT_PRE:
                for direction, rid in select_cases(e):
                    note(int(rid), direction, e.g)
            case K.SELECT_POST if e.res_id is not None:
                note(e.res_id, e.arg("dir"), e.g)
    return ev


def build_waitfor(bundle: TraceBundle) -> WaitForGraph:
    blocked = block_states(bundle)
    holders = mutex_holders(bundle)
    rkinds = {rid: r.kind for rid, r in bundle.resources.items()}
    for e in bundle.events:
        if e.res_id is not None:
            rkinds.setdefault(e.res_id, e.res_kind)
    edges: set[Edge] = set()

    for g, b in blocked.items():
        for rid, _ in b.waits:
            edges.add(Edge(("g", g), ("r", rid), EdgeKind.WAITS))

    for rid, post in holders.items():
        edges.add(Edge(("r", rid), ("g", post.g), EdgeKind.HELD_BY))

    chan_ev = _chan_evidence(bundle)
    signalers: dict[int, set[int]] = {}
    for e in bundle.events:
        if e.kind in (K.CV_SIGNAL, K.CV_BROADCAST):
            signalers.setdefault(e.res_id, set()).add(e.g)

    for g, b in blocked.items():
        for rid, direction in b.waits:
            if direction in _OPPOSITE:
                others = chan_ev.get((rid, _OPPOSITE[direction]), set())
                # goroutines stuck on the same chan in the same direction compete, not cooperate
                same_side = {h for h, hb in blocked.items() if (rid, direction) in hb.waits}
                candidates = others - same_side - {g}
            elif direction == "CVWAIT":
                candidates = signalers.get(rid, set()) - {g}
            else:
                continue
            for h in candidates:
                edges.add(Edge(("r", rid), ("g", h), EdgeKind.COUNTERPART))

    used = {n[1] for e in edges for n in (e.src, e.dst) if n[0] == "r"}
    gnames = goroutine_names(bundle)
    taken = set(gnames.values())
    return WaitForGraph(
        goroutines=gnames,
        resources={rid: (n if n not in taken else f"{n}#r{rid}")
                   for rid, n in resource_names(bundle).items()},
        res_kinds={rid: k for rid, k in rkinds.items() if rid in used},
        edges=sorted(edges, key=Edge.sort_key),
    )


def find_cycles(graph: WaitForGraph) -> list[list[Node]]:
    """All elementary cycles; each starts at its smallest node (a goroutine)."""
    adj: dict[Node, list[Node]] = {}
    for e in graph.edges:
        adj.setdefault(e.src, [])
        if e.dst not in adj[e.src]:
            adj[e.src].append(e.dst)
    for succ in adj.values():
        succ.sort()
    cycles = []
    for start in sorted(adj):
        stack = [(start, iter(adj.get(start, [])))]
        path = [start]
        on_path = {start}
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                stack.pop()
                on_path.discard(path.pop())
                continue
            if nxt == start:
                cycles.append(list(path))
            elif nxt > start and nxt not in on_path:
                path.append(nxt)
                on_path.add(nxt)
                stack.append((nxt, iter(adj.get(nxt, []))))
    return cycles


def cycle_names(graph: WaitForGraph, cycle: list[Node]) -> list[str]:
    """Display names around the cycle, closing back on the first node."""
    return [graph.name(n) for n in cycle] + [graph.name(cycle[0])]


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(graph: WaitForGraph) -> str:
    lines = ["digraph waitfor {"]
    nodes = sorted({n for e in graph.edges for n in (e.src, e.dst)})
    for n in nodes:
        if n[0] == "g":
            lines.append(f"  {_quote(graph.name(n))} [shape=box];")
        else:
            kind = graph.res_kinds.get(n[1])
            label = graph.name(n) if kind is None else f"{graph.name(n)} ({kind.value.lower()})"
            lines.append(f"  {_quote(graph.name(n))} [shape=ellipse, label={_quote(label)}];")
    for e in graph.edges:
        lines.append(f"  {_quote(graph.name(e.src))} -> {_quote(graph.name(e.dst))} "
                     f"[label={_quote(e.kind.value)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def format_waitfor(graph: WaitForGraph) -> str:
    if not graph.edges:
        return "no blocked goroutines\n"
    lines = [f"{graph.name(e.src)} -> {graph.name(e.dst)} [{e.kind.value}]" for e in graph.edges]
    cycles = find_cycles(graph)
    for c in cycles:
        lines.append("cycle: " + " -> ".join(cycle_names(graph, c)))
    if not cycles:
        lines.append("no cycles")
    return "\n".join(lines) + "\n"
