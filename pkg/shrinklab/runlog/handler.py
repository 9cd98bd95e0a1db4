"""handler.py - logging.Handler that records the run narrative.

Attach one ``RunLogHandler`` to the ``shrinklab`` logger. Every record
becomes a narrative line in the buffer of the current run; an ERROR record
flushes that buffer to the exporter, so each failed run leaves the tail of
its own narrative and nothing from concurrent runs.

Line format (indented two spaces per stage depth):

    .. [INFO] message     DEBUG and INFO
    .. message            WARNING
    !! ExcType: message   ERROR and above (exception type when attached)
"""

from __future__ import annotations

import logging

from .context import RunContext, get_buffer
from .exporter import RunDirectoryExporter, TraceExporter


class RunLogHandler(logging.Handler):
    """Buffer records as narrative lines; export the run's buffer on ERROR.

    Example:
        >>> logging.getLogger("shrinklab").addHandler(RunLogHandler())
    """

    def __init__(self, exporter: TraceExporter | None = None, level: int = logging.DEBUG) -> None:
        super().__init__(level)
        self._exporter = exporter or RunDirectoryExporter()
        self._ctx = RunContext()

    @property
    def exporter(self) -> TraceExporter:
        return self._exporter

    def emit(self, record: logging.LogRecord) -> None:
        try:
            buf = get_buffer()
            buf.push(self.to_line(record), level=record.levelno)
            if record.levelno >= logging.ERROR:
                entries, dropped = buf.flash()
                self._exporter.export(entries, dropped)
        except Exception:
            self.handleError(record)

    def to_line(self, record: logging.LogRecord) -> str:
        indent = "  " * self._ctx.get_depth()
        if record.levelno >= logging.ERROR:
            prefix = "!!"
        elif record.levelno >= logging.WARNING:
            prefix = ".."
        else:
            prefix = f".. [{record.levelname}]"
        message = record.getMessage()
        if record.exc_info and record.exc_info[1]:
            return f"{indent}{prefix} {type(record.exc_info[1]).__name__}: {message}"
        return f"{indent}{prefix} {message}"
