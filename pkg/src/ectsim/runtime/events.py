"""Event vocabulary of an execution concurrency trace (ECT)."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from ..dsl.nodes import Site

PROCESS_G = 0  # pseudo-goroutine that owns RUN_BEGIN / RUN_END
MAIN_G = 1


class EventKind(enum.Enum):
    # goroutine
    GO_CREATE = "GO_CREATE"
    GO_START = "GO_START"
    GO_END = "GO_END"
    GO_BLOCK = "GO_BLOCK"
    GO_UNBLOCK = "GO_UNBLOCK"
    SCHED_SWITCH = "SCHED_SWITCH"
    # concurrency
    CH_MAKE = "CH_MAKE"
    CH_SEND_PRE = "CH_SEND_PRE"
    CH_SEND_POST = "CH_SEND_POST"
    CH_RECV_PRE = "CH_RECV_PRE"
    CH_RECV_POST = "CH_RECV_POST"
    CH_CLOSE = "CH_CLOSE"
    MU_LOCK_PRE = "MU_LOCK_PRE"
    MU_LOCK_POST = "MU_LOCK_POST"
    MU_UNLOCK = "MU_UNLOCK"
    WG_ADD = "WG_ADD"
    WG_WAIT_PRE = "WG_WAIT_PRE"
    WG_WAIT_POST = "WG_WAIT_POST"
    CV_WAIT_PRE = "CV_WAIT_PRE"
    CV_WAIT_POST = "CV_WAIT_POST"
    CV_SIGNAL = "CV_SIGNAL"
    CV_BROADCAST = "CV_BROADCAST"
    SELECT_PRE = "SELECT_PRE"
    SELECT_POST = "SELECT_POST"
    # process
    RUN_BEGIN = "RUN_BEGIN"
    RUN_END = "RUN_END"

    @property
    def category(self) -> str:
        if self in _GOROUTINE:
            return "goroutine"
        if self in _PROCESS:
            return "process"
        return "concurrency"

    @property
    def is_pre(self) -> bool:
        return self.name.endswith("_PRE")

    @property
    def is_post(self) -> bool:
        return self.name.endswith("_POST")

    @property
    def partner(self) -> Optional["EventKind"]:
        """The POST kind of a PRE kind and vice versa."""
        if self.is_pre:
            return EventKind[self.name[:-4] + "_POST"]
        if self.is_post:
            return EventKind[self.name[:-5] + "_PRE"]
        return None


_GOROUTINE = frozenset({
    EventKind.GO_CREATE, EventKind.GO_START, EventKind.GO_END,
    EventKind.GO_BLOCK, EventKind.GO_UNBLOCK, EventKind.SCHED_SWITCH,
})
_PROCESS = frozenset({EventKind.RUN_BEGIN, EventKind.RUN_END})


class ResKind(enum.Enum):
    CHAN = "CHAN"
    MUTEX = "MUTEX"
    WG = "WG"
    COND = "COND"


class BlockReason(enum.IntEnum):
    """Stored in GO_BLOCK.aux."""

    SEND = 1
    RECV = 2
    LOCK = 3
    WGWAIT = 4
    CVWAIT = 5
    SELECT = 6


class Frame(NamedTuple):
    func: str
    file: str
    line: int


@dataclass(frozen=True)
class Event:
    id: int
    ts: int
    g: int
    kind: EventKind
    res_kind: Optional[ResKind] = None
    res_id: Optional[int] = None
    value: Optional[int] = None
    aux: Optional[int] = None
    stack_id: int = 0
    # (name, value) pairs; the Arguments table rows of this event
    args: tuple[tuple[str, str], ...] = field(default=())

    @property
    def resource(self) -> Optional[tuple[ResKind, int]]:
        if self.res_kind is None:
            return None
        return (self.res_kind, self.res_id)

    def arg(self, name: str, default: Optional[str] = None) -> Optional[str]:
        for k, v in self.args:
            if k == name:
                return v
        return default


class Resource(NamedTuple):
    """Registry entry: what a resource id denotes and where it was made."""

    kind: ResKind
    name: str
    site: Site


def event_site(event: Event, stacks: dict[int, tuple[Frame, ...]]) -> Site:
    """Innermost source line of ``event``."""
    top = stacks[event.stack_id][0]
    return Site(top.file, top.line)
