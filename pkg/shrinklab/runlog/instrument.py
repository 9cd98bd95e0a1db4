"""instrument.py - @traced decorator for pipeline stages.

Writes three kinds of narrative lines into the current run's buffer:

    >> stage(arg=value, ...)    on entry
    << result                   on return
    !! ExcType: message         on an exception, which is re-raised

While the stage runs, its name is the context's current stage, so a failure
trace names the innermost stage that was active.
"""

from __future__ import annotations

import inspect
import logging
from functools import wraps
from typing import Any, Callable, TypeVar

from .context import RunContext, get_buffer

F = TypeVar("F", bound=Callable[..., Any])

_ctx = RunContext()
_MAX_REPR = 100


def _short(value: Any) -> str:
    text = repr(value)
    return text if len(text) <= _MAX_REPR else text[: _MAX_REPR - 3] + "..."


def traced(func: F) -> F:
    """Record entry, return and exceptions of ``func`` in the run narrative.

    Example:
        >>> @traced
        ... def fit(window):
        ...     return window[1] - window[0]
        >>> fit((2.0, 6.0))   # ">> fit(window=(2.0, 6.0))" then "<< 4.0"
        4.0
    """
    signature = None
    try:
        signature = inspect.signature(func)
    except (TypeError, ValueError):
        pass

    @wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        buf = get_buffer()
        indent = "  " * _ctx.get_depth()
        try:
            bound = signature.bind(*args, **kwargs) if signature else None
            arg_str = ", ".join(f"{k}={_short(v)}" for k, v in bound.arguments.items()) if bound else "..."
        except TypeError:
            arg_str = "..."

        buf.push(f"{indent}>> {func.__qualname__}({arg_str})", level=logging.DEBUG)
        token = _ctx.set_stage(func.__qualname__)
        _ctx.increase_depth()
        try:
            result = func(*args, **kwargs)
        except Exception as exc:
            _ctx.decrease_depth()
            buf.push(f"{indent}!! {type(exc).__name__}: {exc}", level=logging.ERROR)
            raise
        else:
            _ctx.decrease_depth()
            _ctx.reset_stage(token)
            buf.push(f"{indent}<< {_short(result)}", level=logging.DEBUG)
            return result

    return wrapper  # type: ignore[return-value]
