"""exporter.py - Destinations for failure traces.

A failure trace is one JSON object per failure:

    {"run_id": "k2_eps0.05", "stage": "run_scenario", "timestamp": "2026-...Z",
     "dropped": 0, "lines": [">> run_scenario(...)", ".. [INFO] ...", "!! ..."]}

    StreamExporter        one JSON line to a stream (default: stderr)
    FileExporter          appends JSON lines to a file
    RunDirectoryExporter  appends to <run_dir>/failure_trace.jsonl of the run
                          bound in the current context
"""

from __future__ import annotations

import json
import sys
from abc import ABC, abstractmethod
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, TextIO

from .buffer import StepEntry
from .context import RunContext

FAILURE_TRACE_NAME = "failure_trace.jsonl"

_ctx = RunContext()


class TraceExporter(ABC):
    """Base class of all failure-trace destinations."""

    @abstractmethod
    def export(self, entries: list[StepEntry], dropped: int = 0) -> None:
        """Persist the flushed lines of one failure.

        Args:
            entries: Lines in insertion order; may be empty.
            dropped: Lines the buffer evicted before the flush.
        """


def build_payload(entries: list[StepEntry], dropped: int = 0) -> dict[str, Any]:
    """The JSON payload of one failure trace for the current context."""
    return {
        "run_id": _ctx.get_run_id(),
        "stage": _ctx.get_stage(),
        "timestamp": datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        "dropped": dropped,
        "lines": [entry.line for entry in entries],
    }


class StreamExporter(TraceExporter):
    """Write each failure trace as one JSON line to a stream."""

    def __init__(self, stream: TextIO | None = None) -> None:
        self._stream = stream

    def export(self, entries: list[StepEntry], dropped: int = 0) -> None:
        stream = self._stream or sys.stderr
        stream.write(json.dumps(build_payload(entries, dropped), ensure_ascii=False) + "\n")


class FileExporter(TraceExporter):
    """Append failure traces to a file, creating parent directories.

    Successive failures of one run directory share its file, one line each.
    """

    def __init__(self, path: str | Path, encoding: str = "utf-8") -> None:
        self._path = Path(path)
        self._encoding = encoding

    @property
    def path(self) -> Path:
        return self._path

    def export(self, entries: list[StepEntry], dropped: int = 0) -> None:
        self._path.parent.mkdir(parents=True, exist_ok=True)
        with open(self._path, "a", encoding=self._encoding) as f:
            f.write(json.dumps(build_payload(entries, dropped), ensure_ascii=False) + "\n")


class RunDirectoryExporter(TraceExporter):
    """Write into the failure trace of the run bound by ``run_scope``.

    Falls back to ``fallback`` (a ``StreamExporter`` on stderr by default)
    when no run directory is bound.
    """

    def __init__(self, fallback: TraceExporter | None = None) -> None:
        self._fallback = fallback or StreamExporter()

    def export(self, entries: list[StepEntry], dropped: int = 0) -> None:
        run_dir = _ctx.get_run_dir()
        if run_dir is None:
            self._fallback.export(entries, dropped)
            return
        FileExporter(run_dir / FAILURE_TRACE_NAME).export(entries, dropped)
