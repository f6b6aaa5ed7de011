"""Critical points: source lines where concurrency events happened."""

from __future__ import annotations

from pathlib import Path

from ..dsl.nodes import Site
from ..runtime.events import event_site
from ..store import TraceBundle


def critical_points(*bundles: TraceBundle) -> list[Site]:
    """Sorted distinct sites of every concurrency-category event."""
    sites = set()
    for b in bundles:
        for e in b.events:
            if e.kind.category == "concurrency":
                sites.add(event_site(e, b.stacks))
    return sorted(sites)


def write_points(points, path) -> None:
    Path(path).write_text("".join(f"{s}\n" for s in sorted(points)), encoding="utf-8")


def read_points(path) -> frozenset[Site]:
    out = set()
    for n, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        try:
            out.add(Site.parse(text))
        except ValueError as exc:
            raise ValueError(f"{path} line {n}: {exc}") from None
    return frozenset(out)
