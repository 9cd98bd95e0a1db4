"""buffer.py - Bounded per-run buffer of narrative lines.

A long run logs one DEBUG line per sample and several per stage. Only the
tail before a failure matters for diagnosing it, so the buffer keeps the most
recent ``capacity`` lines and counts what it evicted.

Design decisions:
    - ``collections.deque(maxlen=...)`` evicts the oldest line on overflow;
      the eviction count travels with the flushed lines so a failure trace
      says how much narrative is missing.
    - ``flash()`` returns the lines and the drop count and clears both.
"""

from __future__ import annotations

import time
from collections import deque
from typing import Any


class StepEntry:
    """One narrative line.

    Attributes:
        timestamp: ``time.monotonic()`` at creation, for ordering only.
        line: The formatted line, e.g. ``"  .. [INFO] sample t=2.0"``.
        level: ``logging`` level of the originating record.
    """

    __slots__ = ("timestamp", "line", "level")

    def __init__(self, timestamp: float, line: str, level: int = 0) -> None:
        self.timestamp = timestamp
        self.line = line
        self.level = level

    def to_dict(self) -> dict[str, Any]:
        return {"timestamp": self.timestamp, "line": self.line, "level": self.level}

    def __repr__(self) -> str:  # pragma: no cover
        return f"StepEntry({self.timestamp:.3f}, {self.line!r})"


class StepBuffer:
    """Fixed-capacity buffer that keeps the newest lines.

    Each run owns its own buffer (bound through ``run_scope``), so concurrent
    sweep workers never write to the same instance.

    Example:
        >>> buf = StepBuffer(capacity=2)
        >>> for line in ("a", "b", "c"):
        ...     buf.push(line)
        >>> [e.line for e in buf.snapshot()], buf.dropped
        (['b', 'c'], 1)
    """

    def __init__(self, capacity: int = 2000) -> None:
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self._entries: deque[StepEntry] = deque(maxlen=capacity)
        self._dropped = 0

    @property
    def capacity(self) -> int:
        return self._entries.maxlen or 0

    @property
    def dropped(self) -> int:
        """Lines evicted since the last flash or clear."""
        return self._dropped

    def push(self, line: str, level: int = 0) -> None:
        if len(self._entries) == self._entries.maxlen:
            self._dropped += 1
        self._entries.append(StepEntry(time.monotonic(), line, level))

    def flash(self) -> tuple[list[StepEntry], int]:
        """Return ``(entries, dropped)`` and clear the buffer."""
        entries, dropped = list(self._entries), self._dropped
        self.clear()
        return entries, dropped

    def snapshot(self) -> list[StepEntry]:
        """Current entries without clearing; intended for tests."""
        return list(self._entries)

    def clear(self) -> None:
        self._entries.clear()
        self._dropped = 0

    def __len__(self) -> int:
        return len(self._entries)
