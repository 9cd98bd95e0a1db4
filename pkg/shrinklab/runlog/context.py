"""context.py - Run identity, run directory and stage depth for the current context.

All state lives in ``contextvars.ContextVar`` instances, so threads of a
sweep (each entered through ``run_scope``) see their own run id, output
directory, buffer and indentation depth without locking.

    run id      names the run in failure traces
    run dir     where ``RunDirectoryExporter`` writes ``failure_trace.jsonl``
    stage       name of the innermost ``@traced`` stage
    depth       indentation level of narrative lines
"""

from __future__ import annotations

import contextvars
import uuid
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator

from .buffer import StepBuffer

_run_id: contextvars.ContextVar[str] = contextvars.ContextVar("shrinklab_run_id", default="")
_run_dir: contextvars.ContextVar[str] = contextvars.ContextVar("shrinklab_run_dir", default="")
_stage: contextvars.ContextVar[str] = contextvars.ContextVar("shrinklab_stage", default="")
_depth: contextvars.ContextVar[int] = contextvars.ContextVar("shrinklab_depth", default=0)
_buffer: contextvars.ContextVar[StepBuffer] = contextvars.ContextVar("shrinklab_buffer")

DEFAULT_CAPACITY = 2000


class RunContext:
    """Stateless facade over the run context variables.

    Example:
        >>> ctx = RunContext()
        >>> with run_scope("ellipse-2-1", "runs/e"):
        ...     ctx.get_run_id()
        'ellipse-2-1'
    """

    def get_run_id(self) -> str:
        """Bound run id, or a fresh ``adhoc-xxxxxxxx`` id bound on first use."""
        rid = _run_id.get()
        if not rid:
            rid = f"adhoc-{uuid.uuid4().hex[:8]}"
            _run_id.set(rid)
        return rid

    def get_run_dir(self) -> Path | None:
        value = _run_dir.get()
        return Path(value) if value else None

    def get_stage(self) -> str:
        return _stage.get()

    def set_stage(self, stage: str) -> contextvars.Token:
        return _stage.set(stage)

    def reset_stage(self, token: contextvars.Token) -> None:
        _stage.reset(token)

    def get_depth(self) -> int:
        return _depth.get()

    def increase_depth(self) -> None:
        _depth.set(_depth.get() + 1)

    def decrease_depth(self) -> None:
        """Decrement the depth, never below zero."""
        current = _depth.get()
        if current > 0:
            _depth.set(current - 1)


def get_buffer(capacity: int = DEFAULT_CAPACITY) -> StepBuffer:
    """The buffer bound to the current context, created on first access."""
    try:
        return _buffer.get()
    except LookupError:
        buf = StepBuffer(capacity)
        _buffer.set(buf)
        return buf


@contextmanager
def run_scope(run_id: str, run_dir: str | Path | None = None, capacity: int = DEFAULT_CAPACITY) -> Iterator[StepBuffer]:
    """Bind a run id, a run directory and a fresh buffer for the block.

    The previous bindings are restored on exit, including after an
    exception.
    """
    tokens = (
        _run_id.set(run_id),
        _run_dir.set(str(run_dir) if run_dir is not None else ""),
        _stage.set(""),
        _depth.set(0),
    )
    buf = StepBuffer(capacity)
    buffer_token = _buffer.set(buf)
    try:
        yield buf
    finally:
        _buffer.reset(buffer_token)
        for var, token in zip((_run_id, _run_dir, _stage, _depth), tokens):
            var.reset(token)
