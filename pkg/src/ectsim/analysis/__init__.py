"""Post-mortem analyses over stored traces."""

from .export import export_shiviz, lane_tail, lane_view, parse_shiviz
from .goroutines import (
    AnalysisError, GClass, GoroutineInfo, Leak, LeakReport, LeakState,
    classify, detect_leaks, format_leaks,
)
from .hb import MalformedTrace, SyncEdge, happens_before, sync_edges, vector_clocks
from .lint import Violation, lint_trace
from .points import critical_points, read_points, write_points
from .waitfor import (
    Edge, EdgeKind, WaitForGraph, build_waitfor, cycle_names, export_dot,
    find_cycles, format_waitfor,
)

__all__ = [
    "AnalysisError", "Edge", "EdgeKind", "GClass", "GoroutineInfo", "Leak",
    "LeakReport", "LeakState", "MalformedTrace", "SyncEdge", "Violation",
    "WaitForGraph", "build_waitfor", "classify", "critical_points",
    "cycle_names", "detect_leaks", "export_dot", "export_shiviz",
    "find_cycles", "format_leaks", "format_waitfor", "happens_before",
    "lane_tail", "lane_view", "lint_trace", "parse_shiviz", "read_points",
    "sync_edges", "vector_clocks", "write_points",
]
