"""Text exports: ShiViz logs and a per-goroutine lane view."""

from __future__ import annotations

import json
import re

from ..runtime.events import EventKind as K, event_site
from ..store import TraceBundle
from .goroutines import goroutine_names, resource_names, select_cases
from .hb import VectorClock, vector_clocks

# ShiViz parser regex matching the two-line records written below
SHIVIZ_REGEX = r"(?<event>.*)\n(?<host>\S*) (?<clock>{.*})"

_EVENT_LINE = re.compile(r"^g(\d+) (\w+)@(.+):(\d+)$")
_CLOCK_LINE = re.compile(r"^g(\d+) (\{.*\})$")


def export_shiviz(bundle: TraceBundle, vcs: dict[int, VectorClock] | None = None) -> str:
    vcs = vector_clocks(bundle) if vcs is None else vcs
    lines = []
    for e in bundle.events:
        site = event_site(e, bundle.stacks)
        clock = {f"g{g}": n for g, n in sorted(vcs[e.id].items())}
        lines.append(f"g{e.g} {e.kind.value}@{site.file}:{site.line}")
        lines.append(f"g{e.g} {json.dumps(clock, separators=(',', ':'))}")
    return "\n".join(lines) + "\n"


def parse_shiviz(text: str) -> list[tuple[int, str, dict[int, int]]]:
    """Recover (goroutine, kind, vector clock) triples from a ShiViz log."""
    lines = text.splitlines()
    if len(lines) % 2:
        raise ValueError("ShiViz log must have an even number of lines")
    out = []
    for i in range(0, len(lines), 2):
        m1 = _EVENT_LINE.match(lines[i])
        m2 = _CLOCK_LINE.match(lines[i + 1])
        if not m1 or not m2 or m1.group(1) != m2.group(1):
            raise ValueError(f"line {i + 1}: not a ShiViz event record")
        clock = {int(k[1:]): v for k, v in json.loads(m2.group(2)).items()}
        out.append((int(m1.group(1)), m1.group(2), clock))
    return out


_OPS = {
    "CH_MAKE": "make", "CH_SEND": "send", "CH_RECV": "recv", "CH_CLOSE": "close",
    "MU_LOCK": "lock", "MU_UNLOCK": "unlock", "WG_ADD": "add", "WG_WAIT": "wait",
    "CV_WAIT": "cwait", "CV_SIGNAL": "signal", "CV_BROADCAST": "broadcast",
    "SELECT": "select",
}
_HIDDEN = {K.SCHED_SWITCH, K.GO_BLOCK, K.GO_UNBLOCK, K.RUN_BEGIN, K.RUN_END}


def _cell(e, gnames, rnames) -> str:
    match e.kind:
        case K.GO_CREATE:
            return f"go {gnames.get(e.value, e.value)}"
        case K.GO_START:
            return "start"
        case K.GO_END:
            return "end"
        case K.SELECT_PRE:
            return "?select(" + ",".join(rnames.get(int(r), r) for _, r in select_cases(e)) + ")"
        case K.SELECT_POST:
            return "!select(default)" if e.res_id is None else f"!select({rnames[e.res_id]})"
    base = e.kind.name
    mark = ""
    if e.kind.is_pre or e.kind.is_post:
        mark = "?" if e.kind.is_pre else "!"
        base = base.rsplit("_", 1)[0]
    arg = rnames.get(e.res_id, "")
    if e.kind is K.WG_ADD:
        arg += f",{e.value}"
    return f"{mark}{_OPS[base]}({arg})"


def lane_view(bundle: TraceBundle) -> str:
    """One column per goroutine, one row per visible event in ts order.

    ``?op`` marks an attempt, ``!op`` its completion; scheduling noise
    (switches, block and unblock markers) is left out.
    """
    gnames = goroutine_names(bundle)
    rnames = resource_names(bundle)
    gids = sorted(gnames)
    rows = []
    for e in bundle.events:
        if e.kind in _HIDDEN or e.g not in gnames:
            continue
        rows.append((e.ts, e.g, _cell(e, gnames, rnames)))
    col = {g: i for i, g in enumerate(gids)}
    width = [len(gnames[g]) for g in gids]
    for _, g, text in rows:
        width[col[g]] = max(width[col[g]], len(text))
    tsw = max([2] + [len(str(ts)) for ts, _, _ in rows])

    def line(ts_text, cells):
        return (ts_text.rjust(tsw) + " | " + " | ".join(c.ljust(w) for c, w in zip(cells, width))).rstrip()

    out = [line("ts", [gnames[g] for g in gids])]
    out.append("-" * len(out[0]))
    for ts, g, text in rows:
        cells = [""] * len(gids)
        cells[col[g]] = text
        out.append(line(str(ts), cells))
    return "\n".join(out) + "\n"


def lane_tail(bundle: TraceBundle, g: int) -> str | None:
    """The last lane marker shown for goroutine ``g``."""
    gnames = goroutine_names(bundle)
    rnames = resource_names(bundle)
    last = None
    for e in bundle.events:
        if e.g == g and e.kind not in _HIDDEN:
            last = _cell(e, gnames, rnames)
    return last
