"""Relational CSV storage of traces: events, stack frames and arguments.

A bundle lives in ``<directory>/<run_id>/`` as ``events.csv``,
``stack_frames.csv``, ``arguments.csv`` and ``meta.json``. Output is
byte-deterministic: fixed column order, LF line endings, sorted JSON keys.
"""

from __future__ import annotations

import csv
import io
import json
import os
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .runtime.events import Event, EventKind, Frame, ResKind, Resource
from .runtime.machine import Trace
from .dsl.nodes import Site

EVENTS_COLUMNS = ("id", "ts", "g", "kind", "res_kind", "res_id", "value", "aux", "stack_id")
FRAMES_COLUMNS = ("stack_id", "depth", "func", "file", "line")
ARGS_COLUMNS = ("event_id", "position", "name", "value")
FILES = ("events.csv", "stack_frames.csv", "arguments.csv", "meta.json")


class StoreError(Exception):
    pass


@dataclass
class TraceBundle:
    run_id: str
    events: list[Event]
    stacks: dict[int, tuple[Frame, ...]]
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def program(self) -> str:
        return self.meta.get("program", "")

    @property
    def resources(self) -> dict[int, Resource]:
        out = {}
        for r in self.meta.get("resources", []):
            out[r["id"]] = Resource(ResKind(r["kind"]), r["name"], Site.parse(r["site"]))
        return out

    @property
    def outcome(self) -> str:
        return self.meta.get("outcome", "")


def to_bundle(trace: Trace, run_id: str) -> TraceBundle:
    """Package a finished run; ``meta`` holds only JSON-native values."""
    cfg = trace.config
    out = trace.outcome
    fault = None
    if out.fault is not None:
        fault = {"kind": out.fault.kind, "loc": str(out.fault.loc), "g": out.fault.g}
    meta = {
        "run_id": run_id,
        "program": trace.program,
        "policy": cfg.policy.value,
        "seed": cfg.seed,
        "p": cfg.p,
        "d": cfg.d,
        "max_steps": cfg.max_steps,
        "critical_points": sorted(str(s) for s in sorted(cfg.critical_points)),
        "arg0": trace.arg0,
        "outcome": out.status.value,
        "steps": out.steps,
        "outputs": list(out.outputs),
        "fault": fault,
        "goroutines": [
            {
                "g": s.gid, "parent": s.parent, "func": s.func,
                "status": s.status.value, "killed": s.killed,
                "block_reason": None if s.block_reason is None else s.block_reason.name,
                "blocked_on": list(s.blocked_on),
            }
            for s in out.goroutines
        ],
        "resources": [
            {"id": rid, "kind": r.kind.value, "name": r.name, "site": str(r.site)}
            for rid, r in sorted(trace.resources.items())
        ],
    }
    return TraceBundle(run_id, list(trace.events), dict(trace.stacks), meta)


# -- serialization -----------------------------------------------------------


def _cell(v) -> str:
    return "" if v is None else str(v)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def render(bundle: TraceBundle) -> dict[str, str]:
    """File name -> exact file contents."""
    events = _csv_text(EVENTS_COLUMNS, (
        (e.id, e.ts, e.g, e.kind.value, _cell(e.res_kind and e.res_kind.value),
         _cell(e.res_id), _cell(e.value), _cell(e.aux), e.stack_id)
        for e in bundle.events
    ))
    frames = _csv_text(FRAMES_COLUMNS, (
        (sid, depth, f.func, f.file, f.line)
        for sid in sorted(bundle.stacks)
        for depth, f in enumerate(bundle.stacks[sid])
    ))
    args = _csv_text(ARGS_COLUMNS, (
        (e.id, pos, name, value)
        for e in bundle.events
        for pos, (name, value) in enumerate(e.args)
    ))
    meta = json.dumps(bundle.meta, sort_keys=True, indent=2) + "\n"
    return {"events.csv": events, "stack_frames.csv": frames,
            "arguments.csv": args, "meta.json": meta}


def _check_run_id(run_id: str):
    if not run_id or run_id in (".", "..") or "/" in run_id or os.sep in run_id:
        raise StoreError(f"invalid run id {run_id!r}")


def save(bundle: TraceBundle, directory, force: bool = False) -> Path:
    """Write ``bundle`` atomically; refuses to replace an existing run unless ``force``."""
    _check_run_id(bundle.run_id)
    root = Path(directory)
    target = root / bundle.run_id
    if target.exists() and not force:
        raise StoreError(f"run {bundle.run_id!r} already exists in {root}")
    root.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{bundle.run_id}.", dir=root))
    try:
        for name, text in render(bundle).items():
            with open(tmp / name, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        if target.exists():
            old = Path(tempfile.mkdtemp(prefix=f".{bundle.run_id}.old.", dir=root))
            os.replace(target, old / "run")
            os.replace(tmp, target)
            shutil.rmtree(old)
        else:
            os.replace(tmp, target)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return target


# -- loading -----------------------------------------------------------------


def _read_rows(path: Path, header: tuple[str, ...]):
    """Yield (line_number, row) for each data row, checking shape."""
    if not path.is_file():
        raise StoreError(f"missing file {path.name}")
    text = path.read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        first = next(reader, None)
        if first is None or tuple(first) != header:
            raise StoreError(f"{path.name} row 1: expected header {','.join(header)}")
        for row in reader:
            line = reader.line_num
            if len(row) != len(header):
                raise StoreError(f"{path.name} row {line}: expected {len(header)} columns, got {len(row)}")
            yield line, row
    except csv.Error as exc:
        raise StoreError(f"{path.name} row {reader.line_num}: {exc}") from None


def _int(text: str, where: str, optional: bool = False) -> Optional[int]:
    if text == "" and optional:
        return None
    try:
        return int(text)
    except ValueError:
        raise StoreError(f"{where}: expected an integer, got {text!r}") from None


def _enum(cls, text: str, where: str, optional: bool = False):
    if text == "" and optional:
        return None
    try:
        return cls(text)
    except ValueError:
        raise StoreError(f"{where}: unknown {cls.__name__} {text!r}") from None


def load(directory, run_id: str) -> TraceBundle:
    _check_run_id(run_id)
    base = Path(directory) / run_id
    if not base.is_dir():
        raise StoreError(f"no run {run_id!r} in {directory}")

    stacks: dict[int, list[Frame]] = {}
    for line, row in _read_rows(base / "stack_frames.csv", FRAMES_COLUMNS):
        where = f"stack_frames.csv row {line}"
        sid = _int(row[0], where)
        depth = _int(row[1], where)
        frames = stacks.setdefault(sid, [])
        if depth != len(frames):
            raise StoreError(f"{where}: frame depth {depth} out of sequence")
        frames.append(Frame(row[2], row[3], _int(row[4], where)))

    args: dict[int, list[tuple[int, str, str]]] = {}
    arg_lines: dict[int, int] = {}
    for line, row in _read_rows(base / "arguments.csv", ARGS_COLUMNS):
        where = f"arguments.csv row {line}"
        eid = _int(row[0], where)
        args.setdefault(eid, []).append((_int(row[1], where), row[2], row[3]))
        arg_lines.setdefault(eid, line)

    events: list[Event] = []
    for line, row in _read_rows(base / "events.csv", EVENTS_COLUMNS):
        where = f"events.csv row {line}"
        eid = _int(row[0], where)
        if eid != len(events):
            raise StoreError(f"{where}: event id {eid} breaks the dense 0..n-1 sequence")
        ts = _int(row[1], where)
        if events and ts <= events[-1].ts:
            raise StoreError(f"{where}: timestamp {ts} does not increase")
        stack_id = _int(row[8], where)
        if stack_id not in stacks:
            raise StoreError(f"{where}: dangling stack_id {stack_id} (not in stack_frames.csv)")
        res_kind = _enum(ResKind, row[4], where, optional=True)
        res_id = _int(row[5], where, optional=True)
        if (res_kind is None) != (res_id is None):
            raise StoreError(f"{where}: res_kind and res_id must be both set or both empty")
        ev_args = sorted(args.get(eid, []))
        if [p for p, _, _ in ev_args] != list(range(len(ev_args))):
            raise StoreError(f"arguments.csv row {arg_lines[eid]}: positions of event {eid} are not 0..k-1")
        events.append(Event(
            id=eid, ts=ts, g=_int(row[2], where),
            kind=_enum(EventKind, row[3], where),
            res_kind=res_kind, res_id=res_id,
            value=_int(row[6], where, optional=True),
            aux=_int(row[7], where, optional=True),
            stack_id=stack_id,
            args=tuple((n, v) for _, n, v in ev_args),
        ))

    for eid, line in arg_lines.items():
        if not 0 <= eid < len(events):
            raise StoreError(f"arguments.csv row {line}: dangling event_id {eid} (not in events.csv)")

    meta_path = base / "meta.json"
    if not meta_path.is_file():
        raise StoreError("missing file meta.json")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise StoreError(f"meta.json row {exc.lineno}: {exc.msg}") from None
    if not isinstance(meta, dict):
        raise StoreError("meta.json row 1: expected a JSON object")

    return TraceBundle(run_id, events, {k: tuple(v) for k, v in stacks.items()}, meta)


# -- queries -----------------------------------------------------------------


def events_by_goroutine(bundle: TraceBundle, g: int) -> list[Event]:
    return [e for e in bundle.events if e.g == g]


def final_event(bundle: TraceBundle, g: int) -> Optional[Event]:
    """The maximal-ts event of goroutine ``g``; None for an unknown id."""
    last = None
    for e in bundle.events:
        if e.g == g:
            last = e
    return last


def events_of_kind(bundle: TraceBundle, kind: EventKind) -> list[Event]:
    return [e for e in bundle.events if e.kind is kind]


def events_on_resource(bundle: TraceBundle, resource: tuple[ResKind, int]) -> list[Event]:
    return [e for e in bundle.events if e.resource == resource]
