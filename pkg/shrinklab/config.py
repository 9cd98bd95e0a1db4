"""config.py - Run configuration, initial-shape parsing and layered resolution.

Resolution order, lowest to highest precedence:

    1. ``RunConfig`` defaults
    2. ``SHRINKLAB_<FIELD>`` environment variables (after ``load_dotenv()``)
    3. a flat ``key=value`` config file (``--config``)
    4. explicit overrides (command-line flags)

Design decisions:
    - Every layer produces plain strings or Python values; one coercion table
      turns them into typed fields, so a value means the same thing whether
      it came from the environment, the file or a flag.
    - Unknown keys are errors, not warnings: a typo in an experiment manifest
      must not silently fall back to a default.
    - Tolerances are a flat mapping with named defaults; config files and
      the environment set them with a ``tol_`` prefix (``tol_ndot_slack=0.1``).
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Mapping

from dotenv import dotenv_values

from .errors import InvalidArgument
from .flow import DEFAULT_CFL, FlowMode
from .geometry import DERIVATIVE_METHODS, MIN_POINTS

logger = logging.getLogger(__name__)

ENV_PREFIX = "SHRINKLAB_"
TOLERANCE_PREFIX = "tol_"

DEFAULT_TOLERANCES: dict[str, float] = {
    "energy_floor": 1e-14,
    "ndot_slack": 0.05,
    "pinching_slack": 0.02,
    "decay_bound_slack": 0.10,
    "rate_lemma_slack": 0.10,
    "tail_start": 8.0,
    "tail_fraction": 1e-3,
    "convexity": 0.1,
    "fit_floor": 1e-8,
    "fixed_point_drift": 1e-6,
    "fixed_point_energy": 1e-10,
    "graph_zero": 1e-12,
    "dichotomy_margin": 0.2,
    "area_stop": 0.01,
}

INITIAL_KINDS = ("circle", "ellipse", "fourier", "file")


# ---------------------------------------------------------------------------
# Initial shapes
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class InitialShape:
    """Parsed ``initial`` spec.

    Grammar: ``circle:r`` | ``ellipse:a,b`` | ``fourier:k:amp[,k:amp...]``
    | ``file:path``.
    """

    kind: str
    params: tuple[float, ...] = ()
    modes: tuple[tuple[int, float], ...] = ()
    path: str | None = None

    @classmethod
    def parse(cls, text: str) -> "InitialShape":
        """Parse an initial spec.

        Raises:
            InvalidArgument: Unknown kind, wrong arity or a malformed number;
                the message names the ``initial`` field and the token.
        """
        kind, sep, rest = str(text).strip().partition(":")
        kind = kind.strip().lower()
        if not sep or kind not in INITIAL_KINDS:
            raise InvalidArgument(
                f"initial: expected one of {', '.join(k + ':...' for k in INITIAL_KINDS)}, got {text!r}"
            )
        if kind == "file":
            if not rest.strip():
                raise InvalidArgument("initial: file: needs a path")
            return cls(kind, path=rest.strip())
        if kind == "fourier":
            modes = []
            for token in rest.split(","):
                k_text, colon, amp_text = token.strip().partition(":")
                if not colon:
                    raise InvalidArgument(f"initial: fourier mode {token!r} is not k:amplitude")
                k = _number(k_text, "initial", int)
                if k < 0:
                    raise InvalidArgument(f"initial: fourier mode number must be >= 0, got {k}")
                modes.append((k, _number(amp_text, "initial", float)))
            return cls(kind, modes=tuple(modes))

        params = tuple(_number(token, "initial", float) for token in rest.split(","))
        arity = 1 if kind == "circle" else 2
        if len(params) != arity:
            raise InvalidArgument(f"initial: {kind} takes {arity} parameter(s), got {rest!r}")
        if any(p <= 0.0 for p in params):
            raise InvalidArgument(f"initial: {kind} parameters must be > 0, got {rest!r}")
        return cls(kind, params=params)

    def __str__(self) -> str:
        if self.kind == "file":
            return f"file:{self.path}"
        if self.kind == "fourier":
            return "fourier:" + ",".join(f"{k}:{amp:g}" for k, amp in self.modes)
        return f"{self.kind}:" + ",".join(f"{p:g}" for p in self.params)


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration of one run.

    Attributes:
        initial: Initial-shape spec (see ``InitialShape``).
        mode: Flow law.
        n_points: Vertices of the discrete curve.
        dt: Sampling interval of the recorded series.
        t_end: Final clock value.
        resample_every: Resample after every k-th RK4 step.
        burn_in: T0, start of the windows the energy bounds are checked on.
        output_dir: Directory the run writes into.
        fit_window: Time window of the rate fits.
        cfl: Constant of the parabolic step bound.
        derivative: ``spectral`` or ``central``.
        normalize: Recenter and rescale the initial curve to singular time 1
            in the rescaled modes, and project every sample back onto that
            normalization.
        simplicity_every: Check embeddedness every k-th sample.
        workers: Worker threads for sweeps.
        tolerances: Check tolerances, merged over ``DEFAULT_TOLERANCES``.
    """

    initial: str = "ellipse:2,1"
    mode: FlowMode = FlowMode.RESCALED
    n_points: int = 256
    dt: float = 1e-3
    t_end: float = 10.0
    resample_every: int = 1
    burn_in: float = 2.0
    output_dir: str = "runs/default"
    fit_window: tuple[float, float] = (2.0, 6.0)
    cfl: float = DEFAULT_CFL
    derivative: str = "spectral"
    normalize: bool = True
    simplicity_every: int = 50
    workers: int = 4
    tolerances: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", FlowMode.parse(self.mode))
        InitialShape.parse(self.initial)
        if self.n_points < MIN_POINTS:
            raise InvalidArgument(f"n_points must be >= {MIN_POINTS}, got {self.n_points}")
        for name in ("dt", "t_end", "cfl"):
            if not getattr(self, name) > 0.0:
                raise InvalidArgument(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("resample_every", "simplicity_every", "workers"):
            if getattr(self, name) < 1:
                raise InvalidArgument(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.burn_in < 0.0:
            raise InvalidArgument(f"burn_in must be >= 0, got {self.burn_in}")
        lo, hi = self.fit_window
        if not 0.0 <= lo < hi:
            raise InvalidArgument(f"fit_window must satisfy 0 <= start < end, got {self.fit_window}")
        if self.derivative not in DERIVATIVE_METHODS:
            raise InvalidArgument(f"derivative must be one of {DERIVATIVE_METHODS}, got {self.derivative!r}")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise InvalidArgument(f"unknown tolerance(s): {', '.join(sorted(unknown))}")
        merged = {**DEFAULT_TOLERANCES, **{k: float(v) for k, v in self.tolerances.items()}}
        if any(v < 0.0 for v in merged.values()):
            raise InvalidArgument("tolerances must be >= 0")
        object.__setattr__(self, "tolerances", merged)

    @property
    def shape(self) -> InitialShape:
        return InitialShape.parse(self.initial)

    def tol(self, name: str) -> float:
        """Tolerance ``name``; raises ``InvalidArgument`` for unknown names."""
        try:
            return self.tolerances[name]
        except KeyError:
            raise InvalidArgument(f"unknown tolerance {name!r}") from None

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "RunConfig":
        """Build a ``RunConfig`` from strings or typed values.

        Keys are field names (``-`` accepted for ``_``); ``tol_<name>`` keys
        set single tolerances.

        Raises:
            InvalidArgument: Unknown key or a value that does not coerce.
        """
        kwargs: dict[str, Any] = {}
        tolerances: dict[str, float] = {}
        for raw_key, value in data.items():
            if value is None:
                continue
            key = str(raw_key).strip().lower().replace("-", "_")
            if key.startswith(TOLERANCE_PREFIX):
                tolerances[key[len(TOLERANCE_PREFIX) :]] = _number(value, key, float)
            elif key == "tolerances":
                tolerances.update(_tolerance_mapping(value))
            elif key in _COERCERS:
                kwargs[key] = _COERCERS[key](value, key)
            else:
                raise InvalidArgument(f"unknown config key {raw_key!r}")
        if tolerances:
            kwargs["tolerances"] = tolerances
        return cls(**kwargs)

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready mapping of every field."""
        out: dict[str, Any] = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, FlowMode):
                value = value.value
            elif isinstance(value, tuple):
                value = list(value)
            elif isinstance(value, dict):
                value = dict(sorted(value.items()))
            out[f.name] = value
        return out

    def with_overrides(self, **changes: Any) -> "RunConfig":
        """A copy with ``changes`` applied through the same coercion."""
        data = self.to_dict()
        data.update({k: v for k, v in changes.items() if v is not None})
        return RunConfig.from_mapping(data)


def resolve_config(
    overrides: Mapping[str, Any] | None = None,
    config_file: str | Path | None = None,
    environ: Mapping[str, str] | None = None,
) -> RunConfig:
    """Merge defaults, environment, config file and overrides into a ``RunConfig``.

    Args:
        overrides: Highest-precedence values; ``None`` entries are ignored.
        config_file: Optional flat ``key=value`` file.
        environ: Environment to read ``SHRINKLAB_*`` from (``os.environ``
            by default).

    Raises:
        InvalidArgument: Missing config file, unknown key or bad value.
    """
    env = os.environ if environ is None else environ
    merged: dict[str, Any] = {}
    for name in (*_COERCERS, "tolerances"):
        value = env.get(f"{ENV_PREFIX}{name.upper()}")
        if value is not None:
            merged[name] = value
    for name in DEFAULT_TOLERANCES:
        value = env.get(f"{ENV_PREFIX}{(TOLERANCE_PREFIX + name).upper()}")
        if value is not None:
            merged[TOLERANCE_PREFIX + name] = value

    if config_file is not None:
        path = Path(config_file)
        if not path.is_file():
            raise InvalidArgument(f"config file {path} does not exist")
        file_values = {k: v for k, v in dotenv_values(path).items() if v is not None}
        logger.debug("config file %s: %d keys", path, len(file_values))
        merged.update({str(k).strip().lower().replace("-", "_"): v for k, v in file_values.items()})

    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return RunConfig.from_mapping(merged)


# ---------------------------------------------------------------------------
# Coercion
# ---------------------------------------------------------------------------
def _number(value: Any, name: str, kind: Callable[[Any], Any]) -> Any:
    try:
        if kind is int and isinstance(value, str):
            parsed = float(value.strip())
            if not parsed.is_integer():
                raise ValueError(value)
            return int(parsed)
        return kind(value.strip() if isinstance(value, str) else value)
    except (TypeError, ValueError):
        raise InvalidArgument(f"{name}: expected a number, got {value!r}") from None


def _boolean(value: Any, name: str) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise InvalidArgument(f"{name}: expected a boolean, got {value!r}")


def _window(value: Any, name: str) -> tuple[float, float]:
    parts = value.split(",") if isinstance(value, str) else list(value)
    if len(parts) != 2:
        raise InvalidArgument(f"{name}: expected 'start,end', got {value!r}")
    return (_number(parts[0], name, float), _number(parts[1], name, float))


def _tolerance_mapping(value: Any) -> dict[str, float]:
    if isinstance(value, Mapping):
        return {str(k): _number(v, f"tolerances.{k}", float) for k, v in value.items()}
    out: dict[str, float] = {}
    for token in str(value).split(","):
        key, eq, number = token.partition("=")
        if not eq:
            raise InvalidArgument(f"tolerances: expected name=value, got {token!r}")
        out[key.strip()] = _number(number, f"tolerances.{key.strip()}", float)
    return out


_COERCERS: dict[str, Callable[[Any, str], Any]] = {
    "initial": lambda v, n: str(v).strip(),
    "mode": lambda v, n: FlowMode.parse(v),
    "n_points": lambda v, n: _number(v, n, int),
    "dt": lambda v, n: _number(v, n, float),
    "t_end": lambda v, n: _number(v, n, float),
    "resample_every": lambda v, n: _number(v, n, int),
    "burn_in": lambda v, n: _number(v, n, float),
    "output_dir": lambda v, n: str(v),
    "fit_window": _window,
    "cfl": lambda v, n: _number(v, n, float),
    "derivative": lambda v, n: str(v).strip().lower(),
    "normalize": _boolean,
    "simplicity_every": lambda v, n: _number(v, n, int),
    "workers": lambda v, n: _number(v, n, int),
}
