"""Run narrative: a bounded per-run buffer of log lines, flushed on failure."""

from .buffer import StepBuffer, StepEntry
from .context import RunContext, get_buffer, run_scope
from .exporter import (
    FAILURE_TRACE_NAME,
    FileExporter,
    RunDirectoryExporter,
    StreamExporter,
    TraceExporter,
    build_payload,
)
from .handler import RunLogHandler
from .instrument import traced

__all__ = [
    "StepBuffer",
    "StepEntry",
    "RunContext",
    "get_buffer",
    "run_scope",
    "FAILURE_TRACE_NAME",
    "FileExporter",
    "RunDirectoryExporter",
    "StreamExporter",
    "TraceExporter",
    "build_payload",
    "RunLogHandler",
    "traced",
]
