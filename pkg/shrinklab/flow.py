"""flow.py - Time evolution of closed curves and of round spheres.

Three flow laws act on the vertices of a ``ClosedCurve``:

    mcf              d phi / d tau = kappa nu            (unrescaled clock tau)
    rescaled         d phi / d t   = kappa nu + x / 2    (rescaled clock t)
    normal_rescaled  d phi / d t   = S nu

The rescaled flows are related to mcf by phi~ = phi / sqrt(T - tau),
t = -log(T - tau), where T is the singular time. For embedded plane curves
the enclosed area obeys dA/dtau = -2 pi, so T = A / (2 pi) exactly.

Design decisions:
    - Explicit RK4 under an enforced parabolic bound
      dt <= cfl * h^2 * min(1, 1 / max kappa^2). ``step`` rejects larger steps;
      ``advance`` covers a sampling interval with admissible sub-steps.
    - The curve is resampled to uniform arclength after every step (or every
      ``resample_every`` steps). This composes the flow with a tangential
      reparameterisation and leaves every geometric diagnostic unchanged.
    - Enclosed area 2 pi is invariant under the rescaled flows of a
      normalized curve, and unstable, as are translations near the shrinker.
      ``renormalize`` recenters and rescales back onto it; the pipeline
      applies it after every sample of a normalized run.
    - ``material_window`` suspends resampling for two steps so that time
      derivatives follow material points.
    - The round n-sphere reduces to the scalar ODE dr/dt = r/2 - n/r, solved
      by RK4 with extinction and escape reported as events.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__

import numpy as np

from .errors import BlowUpDetected, InvalidArgument, NumericDegeneracy, StepRejected
from .geometry import (
    ClosedCurve,
    GeometrySnapshot,
    centroid,
    enclosed_area,
    resample_uniform,
    snapshot_of,
)

logger = logging.getLogger(__name__)

DEFAULT_CFL = 0.25
SHRINKER_AREA = 2.0 * math.pi
_BOUND_EPS = 1e-9
_MIN_ADMISSIBLE_DT = 1e-14


class FlowMode(StrEnum):
    """The three flow laws."""

    MCF = "mcf"
    RESCALED = "rescaled"
    NORMAL_RESCALED = "normal_rescaled"

    @classmethod
    def parse(cls, value: "str | FlowMode") -> "FlowMode":
        """Parse a mode name; ``normal`` and dashed spellings are accepted."""
        if isinstance(value, FlowMode):
            return value
        key = str(value).strip().lower().replace("-", "_")
        if key == "normal":
            key = cls.NORMAL_RESCALED.value
        try:
            return cls(key)
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise InvalidArgument(f"mode must be one of {choices} (or 'normal'), got {value!r}") from None


@dataclass(frozen=True)
class FlowState:
    """A curve on the clock of its flow.

    Attributes:
        curve: Current curve.
        clock: tau for mcf, t for the rescaled modes.
        mode: Flow law, fixed for the life of a run.
        step_count: Number of RK4 steps taken so far.
        method: Derivative method used for velocities.
    """

    curve: ClosedCurve
    clock: float = 0.0
    mode: FlowMode = FlowMode.RESCALED
    step_count: int = 0
    method: str = "spectral"


# ---------------------------------------------------------------------------
# Velocity and stepping
# ---------------------------------------------------------------------------
def velocity(state: FlowState) -> np.ndarray:
    """Per-vertex velocity of ``state`` under its flow law."""
    snap = snapshot_of(state.curve.vertices, state.method)
    return _field(snap, state.mode)


def admissible_dt(curve: ClosedCurve, cfl: float = DEFAULT_CFL, method: str = "spectral") -> float:
    """Largest step the parabolic bound allows for ``curve``."""
    snap = snapshot_of(curve.vertices, method)
    return _bound(curve, snap, cfl)


def step(
    state: FlowState,
    dt: float,
    cfl: float = DEFAULT_CFL,
    resample: bool = True,
) -> FlowState:
    """Advance ``state`` by one RK4 step of size ``dt``.

    Args:
        state: Current state.
        dt: Step size; must not exceed the stability bound.
        cfl: Constant of the parabolic bound.
        resample: Resample to uniform arclength after the step.

    Returns:
        The new state, with the clock advanced by ``dt``.

    Raises:
        InvalidArgument: ``dt`` is not positive.
        StepRejected: ``dt`` exceeds the bound; carries the admissible step.
        BlowUpDetected: The curve is no longer valid after the step.
    """
    if not dt > 0.0:
        raise InvalidArgument(f"dt must be > 0, got {dt}")
    x0 = state.curve.vertices
    clock = state.clock + dt
    try:
        snap = snapshot_of(x0, state.method)
        bound = _bound(state.curve, snap, cfl)
        if dt > bound * (1.0 + _BOUND_EPS):
            raise StepRejected(
                f"dt={dt:.6g} exceeds the stability bound {bound:.6g}", admissible_dt=bound
            )
        k1 = _field(snap, state.mode)
        k2 = _field(snapshot_of(x0 + 0.5 * dt * k1, state.method), state.mode)
        k3 = _field(snapshot_of(x0 + 0.5 * dt * k2, state.method), state.mode)
        k4 = _field(snapshot_of(x0 + dt * k3, state.method), state.mode)
        curve = ClosedCurve(x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
    except (InvalidArgument, NumericDegeneracy) as exc:
        raise BlowUpDetected(f"curve became invalid at clock {clock:.6g}: {exc}", clock=clock) from exc

    if resample:
        curve = resample_uniform(curve, curve.n_points)
    return FlowState(curve, clock, state.mode, state.step_count + 1, state.method)


def advance(
    state: FlowState,
    duration: float,
    cfl: float = DEFAULT_CFL,
    resample_every: int = 1,
) -> FlowState:
    """Advance ``state`` by ``duration`` using admissible sub-steps.

    The returned clock is exactly ``state.clock + duration``.

    Raises:
        InvalidArgument: ``duration`` or ``resample_every`` is not positive.
        BlowUpDetected: The admissible step collapses (curvature blow-up) or
            a step produces an invalid curve.
    """
    if not duration > 0.0:
        raise InvalidArgument(f"duration must be > 0, got {duration}")
    if resample_every < 1:
        raise InvalidArgument(f"resample_every must be >= 1, got {resample_every}")
    target = state.clock + duration
    remaining = duration
    while remaining > 1e-12 * max(1.0, abs(target)):
        bound = admissible_dt(state.curve, cfl, state.method)
        if bound < _MIN_ADMISSIBLE_DT:
            raise BlowUpDetected(
                f"admissible step collapsed to {bound:.3g} at clock {state.clock:.6g}",
                clock=state.clock,
            )
        dt = min(remaining, bound)
        resample = (state.step_count + 1) % resample_every == 0
        state = step(state, dt, cfl=cfl, resample=resample)
        remaining = target - state.clock
    return replace(state, clock=target)


def material_window(state: FlowState, delta: float, cfl: float = DEFAULT_CFL) -> tuple[FlowState, FlowState, FlowState]:
    """Three states ``delta`` apart along material points (no resampling)."""
    middle = step(state, delta, cfl=cfl, resample=False)
    last = step(middle, delta, cfl=cfl, resample=False)
    return state, middle, last


# ---------------------------------------------------------------------------
# Singular time and rescaling
# ---------------------------------------------------------------------------
def estimate_singular_time(curve: ClosedCurve) -> float:
    """Singular time of the mcf started at ``curve``: A / (2 pi)."""
    return enclosed_area(curve) / (2.0 * math.pi)


def renormalize(curve: ClosedCurve, area: float = SHRINKER_AREA) -> ClosedCurve:
    """Move the area centroid to the origin and scale to enclosed area ``area``.

    In the rescaled frame dA/dt = A - 2 pi, so an error in the area of a
    normalized curve grows like e^t, and a centroid offset grows like e^{t/2}.

    Raises:
        InvalidArgument: ``area`` is not positive.
    """
    if not area > 0.0:
        raise InvalidArgument(f"area must be > 0, got {area}")
    shifted = curve.translated(-centroid(curve))
    return shifted.scaled(math.sqrt(area / enclosed_area(shifted)))


def rescale_to_normalized(curve: ClosedCurve, tau: float, singular_time: float) -> tuple[ClosedCurve, float]:
    """Map a curve at mcf time ``tau`` to the rescaled frame.

    Returns:
        ``(curve / sqrt(T - tau), -log(T - tau))``.

    Raises:
        InvalidArgument: ``tau >= singular_time``.
    """
    remaining = singular_time - tau
    if not remaining > 0.0:
        raise InvalidArgument(f"tau={tau} must be < singular time {singular_time}")
    return curve.scaled(1.0 / math.sqrt(remaining)), -math.log(remaining)


# ---------------------------------------------------------------------------
# Round spheres
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class SphereTrajectory:
    """RK4 solution of dr/dt = r/2 - n/r.

    Attributes:
        n: Sphere dimension.
        r0: Initial radius.
        times: Sample times, starting at 0.
        radii: Radius at each sample.
        event: ``"none"``, ``"extinction"`` or ``"escape"``.
        event_time: Time at which the event was detected, if any.
    """

    n: int
    r0: float
    times: np.ndarray
    radii: np.ndarray
    event: str = "none"
    event_time: float | None = None

    @property
    def fixed_point(self) -> float:
        return sphere_fixed_point(self.n)

    @property
    def final_radius(self) -> float:
        return float(self.radii[-1])


def sphere_fixed_point(n: int) -> float:
    """Radius of the round shrinker in dimension ``n``."""
    return math.sqrt(2.0 * n)


def sphere_radius_exact(n: int, r0: float, t: np.ndarray | float) -> np.ndarray:
    """Closed form r(t)^2 = 2n + (r0^2 - 2n) e^t; NaN after extinction."""
    r2 = 2.0 * n + (r0**2 - 2.0 * n) * np.exp(np.asarray(t, dtype=float))
    with np.errstate(invalid="ignore"):
        return np.where(r2 > 0.0, np.sqrt(np.maximum(r2, 0.0)), np.nan)


def sphere_extinction_time(n: int, r0: float) -> float | None:
    """Exact extinction time for r0 below the fixed point, else None."""
    if r0 >= sphere_fixed_point(n):
        return None
    return math.log(2.0 * n / (2.0 * n - r0**2))


def sphere_radius_ode(
    n: int,
    r0: float,
    t_end: float,
    dt: float,
    r_min: float = 1e-3,
    r_max: float = 1e6,
) -> SphereTrajectory:
    """Integrate the rescaled round-sphere ODE with RK4.

    Args:
        n: Dimension of the sphere (n >= 1).
        r0: Initial radius (> 0).
        t_end: Final time (> 0).
        dt: Step size (> 0).
        r_min: Radius at or below which extinction is flagged.
        r_max: Radius at or above which escape is flagged.

    Returns:
        The trajectory, truncated at the first event.

    Raises:
        InvalidArgument: A parameter is out of range.
    """
    if n < 1:
        raise InvalidArgument(f"n must be >= 1, got {n}")
    if not r0 > 0.0:
        raise InvalidArgument(f"r0 must be > 0, got {r0}")
    if not t_end > 0.0 or not dt > 0.0:
        raise InvalidArgument(f"t_end and dt must be > 0, got t_end={t_end}, dt={dt}")

    def rate(r: float) -> float:
        return 0.5 * r - n / r

    steps = int(math.ceil(t_end / dt - 1e-12))
    times = [0.0]
    radii = [float(r0)]
    r = float(r0)
    for i in range(steps):
        h = min(dt, t_end - i * dt)
        t_next = i * dt + h
        k1 = rate(r)
        s2 = r + 0.5 * h * k1
        if s2 <= r_min:
            return _sphere_event(n, r0, times, radii, "extinction", t_next)
        k2 = rate(s2)
        s3 = r + 0.5 * h * k2
        if s3 <= r_min:
            return _sphere_event(n, r0, times, radii, "extinction", t_next)
        k3 = rate(s3)
        s4 = r + h * k3
        if s4 <= r_min:
            return _sphere_event(n, r0, times, radii, "extinction", t_next)
        k4 = rate(s4)
        r = r + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not math.isfinite(r) or r <= r_min:
            return _sphere_event(n, r0, times, radii, "extinction", t_next)
        times.append(t_next)
        radii.append(r)
        if r >= r_max:
            return _sphere_event(n, r0, times, radii, "escape", t_next)
    return SphereTrajectory(n, float(r0), np.array(times), np.array(radii))


# ---------------------------------------------------------------------------
# Private helpers
# ---------------------------------------------------------------------------
def _field(snap: GeometrySnapshot, mode: FlowMode) -> np.ndarray:
    if mode == FlowMode.MCF:
        return snap.kappa[:, None] * snap.normal
    if mode == FlowMode.RESCALED:
        return snap.kappa[:, None] * snap.normal + 0.5 * snap.x
    return snap.S[:, None] * snap.normal


def _bound(curve: ClosedCurve, snap: GeometrySnapshot, cfl: float) -> float:
    h = float(curve.edge_lengths.min())
    kmax = float(np.max(np.abs(snap.kappa)))
    return cfl * h * h * min(1.0, 1.0 / (kmax * kmax)) if kmax > 0.0 else cfl * h * h


def _sphere_event(n: int, r0: float, times: list, radii: list, event: str, when: float) -> SphereTrajectory:
    logger.info("sphere ODE (n=%d, r0=%.6g): %s at t=%.6g", n, r0, event, when)
    return SphereTrajectory(n, float(r0), np.array(times), np.array(radii), event, when)
