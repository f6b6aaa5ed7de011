from .events import (
    MAIN_G, PROCESS_G, BlockReason, Event, EventKind, Frame, ResKind, Resource,
    event_site,
)
from .machine import (
    Fault, FaultInfo, GoroutineSummary, GStatus, RunOutcome, RunStatus, Trace,
    run,
)
from .scheduler import Policy, SchedulerConfig

__all__ = [
    "BlockReason", "Event", "EventKind", "Fault", "FaultInfo", "Frame",
    "GStatus", "GoroutineSummary", "MAIN_G", "PROCESS_G", "Policy", "ResKind",
    "Resource", "RunOutcome", "RunStatus", "SchedulerConfig", "Trace",
    "event_site", "run",
]
