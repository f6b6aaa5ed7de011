"""Deterministic CSP concurrency simulator with execution concurrency tracing."""

__version__ = "0.1.0"
