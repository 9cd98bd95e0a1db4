"""identities.py - Residual checks for the evolution equations of the normal flow.

Each identity is a named pair (left-hand side, right-hand side). Static
identities hold on any curve and need one snapshot. Dynamic identities relate
a time derivative along the normal rescaled flow to a formula in the
snapshot fields; the time derivative is a centred difference over a material
window (three samples, resampling suspended) and the formula is evaluated on
the centre sample.

Design decisions:
    - The registry is a plain dict from descriptive name to ``IdentitySpec``;
      unknown names raise ``InvalidArgument`` before any work is done.
    - Identities with more than one candidate right-hand side carry named
      variants. Every variant is evaluated and reported; the first variant
      is the default.
    - Residuals are sup-norms over vertices for pointwise identities and
      absolute values for integral identities. A residual that is undefined
      (quotient identities on a curve with zero energy) is ``None``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Any, Callable, Iterable

import numpy as np

from ..errors import InvalidArgument
from ..flow import DEFAULT_CFL, FlowMode, FlowState, material_window
from ..geometry import ClosedCurve, GeometrySnapshot, l_operator, snapshot, weighted_integral
from .functionals import ENERGY_FLOOR, defect_evolution, energy, energy_rate, gaussian_area

logger = logging.getLogger(__name__)

STATIC = "static"
DYNAMIC = "dynamic"

# Residuals below this multiple of the scale are at the precision floor and
# carry no refinement order.
PRECISION_FLOOR = 1e-11


# ---------------------------------------------------------------------------
# Reports and evaluation context
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class IdentityReport:
    """Residual of one identity variant at one (or two) resolutions.

    ``residual_fine`` and ``order`` are only set when the identity was also
    evaluated on the refined level (2N points, half the step).
    """

    name: str
    variant: str
    kind: str
    n_points: int
    dt: float | None
    residual: float | None
    scale: float
    residual_fine: float | None = None
    order: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class MaterialWindow:
    """Snapshots at t0, t0 + delta and t0 + 2 delta along material points."""

    before: GeometrySnapshot
    centre: GeometrySnapshot
    after: GeometrySnapshot
    delta: float

    @classmethod
    def build(
        cls,
        curve: ClosedCurve,
        delta: float,
        method: str = "spectral",
        cfl: float = DEFAULT_CFL,
    ) -> "MaterialWindow":
        """Run two normal-flow steps of size ``delta`` from ``curve``.

        Raises:
            StepRejected: ``delta`` exceeds the stability bound of ``curve``.
        """
        state = FlowState(curve, mode=FlowMode.NORMAL_RESCALED, method=method)
        first, middle, last = material_window(state, delta, cfl=cfl)
        return cls(
            before=snapshot(first.curve, method),
            centre=snapshot(middle.curve, method),
            after=snapshot(last.curve, method),
            delta=delta,
        )

    def rate(self, quantity: Callable[[GeometrySnapshot], Any]) -> Any:
        """Centred first difference of ``quantity`` at the centre sample."""
        return (np.asarray(quantity(self.after)) - np.asarray(quantity(self.before))) / (2.0 * self.delta)

    def second_rate(self, quantity: Callable[[GeometrySnapshot], Any]) -> Any:
        """Centred second difference of ``quantity`` at the centre sample."""
        values = [np.asarray(quantity(s)) for s in (self.before, self.centre, self.after)]
        return (values[2] - 2.0 * values[1] + values[0]) / self.delta**2


@dataclass(eq=False)
class IdentityContext:
    """One curve plus the step used for its material window.

    The snapshot and the window are computed lazily, so a suite of static
    identities never runs the flow.
    """

    curve: ClosedCurve
    delta: float | None = None
    method: str = "spectral"
    cfl: float = DEFAULT_CFL

    @cached_property
    def snapshot(self) -> GeometrySnapshot:
        return snapshot(self.curve, self.method)

    @cached_property
    def window(self) -> MaterialWindow:
        if self.delta is None:
            raise InvalidArgument("dynamic identities need a time step (delta)")
        return MaterialWindow.build(self.curve, self.delta, self.method, self.cfl)

    @property
    def scale(self) -> float:
        """max(1, |kappa|_inf^2 * length) of the curve."""
        snap = self.snapshot
        return max(1.0, float(np.max(np.abs(snap.kappa))) ** 2 * snap.length)


@dataclass(frozen=True)
class IdentitySpec:
    """Registry entry: kind plus one residual function per variant."""

    name: str
    kind: str
    statement: str
    variants: dict[str, Callable[[Any], float | None]] = field(default_factory=dict)

    @property
    def default_variant(self) -> str:
        return next(iter(self.variants))


# ---------------------------------------------------------------------------
# Shared right-hand-side pieces
# ---------------------------------------------------------------------------
def _sup(values: np.ndarray) -> float:
    values = np.asarray(values, dtype=float)
    if values.ndim == 2:
        return float(np.max(np.linalg.norm(values, axis=1)))
    return float(np.max(np.abs(values)))


def _integral(f: np.ndarray | float, snap: GeometrySnapshot) -> float:
    return weighted_integral(f, snap, weighted=True)


def _defect_forcing_complete(snap: GeometrySnapshot) -> np.ndarray:
    """Zeroth-order part R of the second time derivative of S, all terms kept."""
    k, S, Ss, Sss = snap.kappa, snap.S, snap.dS, snap.d2S
    return (
        4.0 * k * S * Sss
        + 2.0 * k * Ss**2
        - S * Ss**2
        + snap.dkappa * S * Ss
        - 0.5 * snap.x_dot_tangent * k * S * Ss
        + 2.0 * k**3 * S**2
    )


def _defect_forcing_displayed(snap: GeometrySnapshot) -> np.ndarray:
    """R without the time derivative of the drift term <x, grad S>."""
    k, S, Ss = snap.kappa, snap.S, snap.dS
    return 4.0 * k * S * snap.d2S + k * Ss**2 + S * snap.dkappa * Ss + 2.0 * k**3 * S**2


def _energy_second_rate(snap: GeometrySnapshot, forcing: Callable[[GeometrySnapshot], np.ndarray]) -> float:
    S = snap.S
    G = defect_evolution(snap)
    F = -(S**3) + 2.0 * G
    return _integral(F**2, snap) - 2.0 * _integral(S**3 * G, snap) + 2.0 * _integral(S * forcing(snap), snap)


def _quotient(snap: GeometrySnapshot) -> float | None:
    e = energy(snap)
    if e <= ENERGY_FLOOR * gaussian_area(snap):
        return None
    return energy_rate(snap) / e


# ---------------------------------------------------------------------------
# Static identities
# ---------------------------------------------------------------------------
def _curvature_laplacian(snap: GeometrySnapshot) -> float:
    k = snap.kappa
    rhs = 0.5 * k + (snap.S - k) * k**2 + snap.d2S
    return _sup(l_operator(k, snap) - rhs)


def _curvature_hessian(snap: GeometrySnapshot) -> float:
    k = snap.kappa
    rhs = 0.5 * k + (snap.S - k) * k**2 + 0.5 * snap.x_dot_tangent * snap.dkappa + snap.d2S
    return _sup(snap.laplacian(k) - rhs)


def _curvature_squared_laplacian(snap: GeometrySnapshot) -> float:
    k = snap.kappa
    rhs = 2.0 * snap.dkappa**2 + k**2 - 2.0 * k**4 + 2.0 * snap.S * k**3 + 2.0 * k * snap.d2S
    return _sup(l_operator(k**2, snap) - rhs)


def _quotient_cauchy_schwarz(snap: GeometrySnapshot) -> float:
    """Amount by which int S^2 int F^2 - (int S F)^2 falls below zero."""
    S = snap.S
    F = -(S**3) + 2.0 * defect_evolution(snap)
    gap = _integral(S**2, snap) * _integral(F**2, snap) - _integral(S * F, snap) ** 2
    return max(0.0, -gap)


# ---------------------------------------------------------------------------
# Dynamic identities
# ---------------------------------------------------------------------------
def _metric(w: MaterialWindow) -> float:
    c = w.centre
    return _sup(w.rate(lambda s: np.log(s.g)) + 2.0 * c.kappa * c.S)


def _inverse_metric(w: MaterialWindow) -> float:
    c = w.centre
    return _sup(c.g * w.rate(lambda s: 1.0 / s.g) - 2.0 * c.kappa * c.S)


def _normal(w: MaterialWindow) -> float:
    c = w.centre
    return _sup(w.rate(lambda s: s.normal) + c.dS[:, None] * c.tangent)


def _second_fundamental_form(w: MaterialWindow) -> float:
    c = w.centre
    lhs = w.rate(lambda s: s.kappa * s.g) / c.g
    return _sup(lhs - (c.d2S - c.S * c.kappa**2))


def _second_fundamental_form_stability(w: MaterialWindow) -> float:
    c = w.centre
    k = c.kappa
    lhs = w.rate(lambda s: s.kappa * s.g) / c.g
    return _sup(lhs - (l_operator(k, c) + (k**2 - 0.5) * k - 2.0 * c.S * k**2))


def _curvature_squared(w: MaterialWindow) -> float:
    c = w.centre
    rhs = 2.0 * c.kappa * c.d2S + 2.0 * c.S * c.kappa**3
    return _sup(w.rate(lambda s: s.kappa**2) - rhs)


def _defect(w: MaterialWindow) -> float:
    return _sup(w.rate(lambda s: s.S) - defect_evolution(w.centre))


def _weighted_measure(w: MaterialWindow) -> float:
    c = w.centre
    lhs = w.rate(lambda s: np.log(s.weight * np.sqrt(s.g)))
    return _sup(lhs + c.S**2)


def _defect_laplacian(w: MaterialWindow) -> float:
    c = w.centre
    k, S, Ss = c.kappa, c.S, c.dS
    G = defect_evolution(c)
    rhs = 2.0 * k * S * c.d2S + k * Ss**2 + S * c.dkappa * Ss + c.laplacian(G)
    return _sup(w.rate(lambda s: s.d2S) - rhs)


def _defect_second_derivative(forcing: Callable[[GeometrySnapshot], np.ndarray]) -> Callable[[MaterialWindow], float]:
    def residual(w: MaterialWindow) -> float:
        c = w.centre
        G = defect_evolution(c)
        rhs = forcing(c) + l_operator(G, c) + (c.kappa**2 + 0.5) * G
        return _sup(w.second_rate(lambda s: s.S) - rhs)

    return residual


def _energy_rate(w: MaterialWindow) -> float:
    return abs(float(w.rate(energy)) - energy_rate(w.centre))


def _energy_second_derivative(forcing: Callable[[GeometrySnapshot], np.ndarray]) -> Callable[[MaterialWindow], float]:
    def residual(w: MaterialWindow) -> float:
        return abs(float(w.second_rate(energy)) - _energy_second_rate(w.centre, forcing))

    return residual


def _quotient_rate(rhs: Callable[[GeometrySnapshot], float]) -> Callable[[MaterialWindow], float | None]:
    def residual(w: MaterialWindow) -> float | None:
        quotients = [_quotient(s) for s in (w.before, w.centre, w.after)]
        if any(q is None for q in quotients):
            return None
        lhs = (quotients[2] - quotients[0]) / (2.0 * w.delta)
        return abs(lhs - rhs(w.centre))

    return residual


def _quotient_rate_complete(c: GeometrySnapshot) -> float:
    e = energy(c)
    return (_energy_second_rate(c, _defect_forcing_complete) * e - energy_rate(c) ** 2) / e**2


def _quotient_rate_first_derivation(c: GeometrySnapshot) -> float:
    k, S, Ss = c.kappa, c.S, c.dS
    G = defect_evolution(c)
    F = -(S**3) + 2.0 * G
    e = _integral(S**2, c)
    bracket = (
        e * _integral(F**2, c)
        - 2.0 * e * _integral(S**3 * G, c)
        + 2.0 * e * _integral(S * (4.0 * S * k * c.d2S + S * Ss * c.dkappa + 2.0 * S**2 * k**3), c)
        + 2.0 * e * _integral(S * (2.0 * k * Ss**2 - k * Ss**2), c)
        - (_integral(S**4, c) + 2.0 * _integral(S * G, c)) ** 2
    )
    return bracket / e**2


def _quotient_rate_displayed(c: GeometrySnapshot) -> float:
    k, S, Ss, Sss = c.kappa, c.S, c.dS, c.d2S
    G = defect_evolution(c)
    F = -(S**3) + 2.0 * G
    e = _integral(S**2, c)
    leading = (e * _integral(F**2, c) - _integral(S * F, c) ** 2) / e**2
    remainder = (
        -2.0 * _integral(S**3 * G, c)
        + 2.0 * _integral(S * (4.0 * S * k * Sss + S * Ss * c.dkappa + 2.0 * S**2 * k**3), c)
        + _integral(S**2 * (c.dkappa * Ss + k * l_operator(S, c)), c)
        - 2.0 * _integral(S**2 * (c.dkappa * Ss + k * Sss - c.x_dot_tangent * k * Ss), c)
    )
    return leading + remainder / e


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------
def _spec(name: str, kind: str, statement: str, **variants: Callable[[Any], float | None]) -> IdentitySpec:
    return IdentitySpec(name, kind, statement, {k.replace("_", "-"): v for k, v in variants.items()})


IDENTITIES: dict[str, IdentitySpec] = {
    spec.name: spec
    for spec in (
        _spec("curvature-laplacian", STATIC, "L k = k/2 + (S - k) k^2 + S_ss", default=_curvature_laplacian),
        _spec(
            "curvature-hessian",
            STATIC,
            "k_ss = k/2 + (S - k) k^2 + (x.T) k_s / 2 + S_ss",
            default=_curvature_hessian,
        ),
        _spec(
            "curvature-squared-laplacian",
            STATIC,
            "L k^2 = 2 k_s^2 + k^2 - 2 k^4 + 2 S k^3 + 2 k S_ss",
            default=_curvature_squared_laplacian,
        ),
        _spec(
            "quotient-cauchy-schwarz",
            STATIC,
            "int S^2 int F^2 - (int S F)^2 >= 0",
            default=_quotient_cauchy_schwarz,
        ),
        _spec("metric", DYNAMIC, "d/dt log g = -2 k S", default=_metric),
        _spec("inverse-metric", DYNAMIC, "g d/dt (1/g) = 2 k S", default=_inverse_metric),
        _spec("normal", DYNAMIC, "d/dt nu = -S_s T", default=_normal),
        _spec("second-fundamental-form", DYNAMIC, "d/dt (k g) / g = S_ss - S k^2", default=_second_fundamental_form),
        _spec(
            "second-fundamental-form-stability",
            DYNAMIC,
            "d/dt (k g) / g = L k + (k^2 - 1/2) k - 2 S k^2",
            default=_second_fundamental_form_stability,
        ),
        _spec("curvature-squared", DYNAMIC, "d/dt k^2 = 2 k S_ss + 2 S k^3", default=_curvature_squared),
        _spec("defect", DYNAMIC, "d/dt S = L S + (k^2 + 1/2) S", default=_defect),
        _spec("weighted-measure", DYNAMIC, "d/dt log(w sqrt g) = -S^2", default=_weighted_measure),
        _spec(
            "defect-laplacian",
            DYNAMIC,
            "d/dt S_ss = 2 k S S_ss + k S_s^2 + S k_s S_s + G_ss",
            default=_defect_laplacian,
        ),
        _spec(
            "defect-second-derivative",
            DYNAMIC,
            "d2/dt2 S = R + L G + (k^2 + 1/2) G",
            complete=_defect_second_derivative(_defect_forcing_complete),
            displayed=_defect_second_derivative(_defect_forcing_displayed),
        ),
        _spec("energy-rate", DYNAMIC, "dE/dt = -int S^4 + 2 int S G", default=_energy_rate),
        _spec(
            "energy-second-derivative",
            DYNAMIC,
            "d2E/dt2 = int F^2 - 2 int S^3 G + 2 int S R",
            complete=_energy_second_derivative(_defect_forcing_complete),
            displayed=_energy_second_derivative(_defect_forcing_displayed),
        ),
        _spec(
            "quotient-rate",
            DYNAMIC,
            "dN/dt = (E'' E - E'^2) / E^2",
            complete=_quotient_rate(_quotient_rate_complete),
            first_derivation=_quotient_rate(_quotient_rate_first_derivation),
            displayed=_quotient_rate(_quotient_rate_displayed),
        ),
    )
}


def list_identities() -> list[IdentitySpec]:
    """Registry entries in definition order."""
    return list(IDENTITIES.values())


def lookup(name: str) -> IdentitySpec:
    """Registry entry for ``name``.

    Raises:
        InvalidArgument: ``name`` is not a registered identity.
    """
    try:
        return IDENTITIES[name]
    except KeyError:
        raise InvalidArgument(
            f"unknown identity {name!r}; known identities: {', '.join(IDENTITIES)}"
        ) from None


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------
def identity_residual(name: str, context: IdentityContext, variant: str | None = None) -> IdentityReport:
    """Evaluate one identity variant on ``context``.

    Args:
        name: Registered identity name.
        context: Curve and window step to evaluate on.
        variant: Variant name; defaults to the identity's first variant.

    Returns:
        An ``IdentityReport`` without refinement fields.

    Raises:
        InvalidArgument: Unknown identity or variant, or a dynamic identity
            on a context without a time step.

    Example:
        >>> ctx = IdentityContext(circle(2.0, 64))
        >>> identity_residual("curvature-laplacian", ctx).residual < 1e-8
        True
    """
    spec = lookup(name)
    variant = variant or spec.default_variant
    if variant not in spec.variants:
        raise InvalidArgument(f"identity {name!r} has no variant {variant!r}; variants: {', '.join(spec.variants)}")
    source = context.snapshot if spec.kind == STATIC else context.window
    residual = spec.variants[variant](source)
    logger.debug("identity %s/%s at N=%d: residual=%s", name, variant, context.curve.n_points, residual)
    return IdentityReport(
        name=name,
        variant=variant,
        kind=spec.kind,
        n_points=context.curve.n_points,
        dt=context.delta if spec.kind == DYNAMIC else None,
        residual=None if residual is None else float(residual),
        scale=context.scale,
    )


def evaluate_identity(name: str, context: IdentityContext) -> list[IdentityReport]:
    """Reports for every variant of ``name`` on ``context``."""
    return [identity_residual(name, context, variant) for variant in lookup(name).variants]


def refinement_order(coarse: float | None, fine: float | None, scale: float = 1.0) -> float | None:
    """log2(coarse / fine), or None when either residual is at the precision floor."""
    if coarse is None or fine is None:
        return None
    floor = PRECISION_FLOOR * scale
    if coarse <= floor or fine <= floor:
        return None
    return math.log2(coarse / fine)


def run_identity_suite(
    build_curve: Callable[[int], ClosedCurve],
    n_points: int,
    delta: float,
    names: Iterable[str] | None = None,
    method: str = "spectral",
    cfl: float = DEFAULT_CFL,
) -> list[IdentityReport]:
    """Evaluate identities at (N, delta) and (2N, delta / 2) and report orders.

    Args:
        build_curve: Returns the uniformly sampled test curve with the given
            number of points.
        n_points: Coarse resolution N.
        delta: Coarse window step; ``delta / 2`` must be admissible at 2N.
        names: Identities to evaluate; all registered identities by default.
        method: Derivative method for snapshots and flow velocities.
        cfl: Stability constant for the window steps.

    Returns:
        One report per identity variant, in registry order.

    Raises:
        InvalidArgument: An unknown identity name, checked before any work.
    """
    selected = [lookup(name) for name in (names if names is not None else IDENTITIES)]
    coarse = IdentityContext(build_curve(n_points), delta, method, cfl)
    fine = IdentityContext(build_curve(2 * n_points), 0.5 * delta, method, cfl)
    logger.info(
        "identity suite: %d identities at N=%d/%d, delta=%.3g",
        len(selected),
        n_points,
        2 * n_points,
        delta,
    )

    reports: list[IdentityReport] = []
    for spec in selected:
        for variant in spec.variants:
            low = identity_residual(spec.name, coarse, variant)
            high = identity_residual(spec.name, fine, variant)
            reports.append(
                IdentityReport(
                    name=low.name,
                    variant=low.variant,
                    kind=low.kind,
                    n_points=low.n_points,
                    dt=low.dt,
                    residual=low.residual,
                    scale=low.scale,
                    residual_fine=high.residual,
                    order=refinement_order(low.residual, high.residual, low.scale),
                )
            )
    return reports
