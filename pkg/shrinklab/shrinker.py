"""shrinker.py - The round shrinker, normal graphs over it, and convergence-rate checks.

The reference shrinker is the circle of radius sqrt(2) about the origin. A
curve close to it is written as a normal graph: after recentering at its
area centroid, the point at polar angle theta sits at radius
rho(theta) = sqrt(2) - v(theta), so v > 0 means the curve lies inside.

Design decisions:
    - rho(theta) is found by Newton iteration on the trigonometric interpolant
      of the curve, so graph quantities keep the spectral accuracy of the
      snapshot quadrature. Derivatives of v on the uniform theta grid are
      spectral as well.
    - Norms are taken in theta: c0 = sup|v|, c1 = sup|v'|, c2 = sup|v''|, and
      c2_alpha adds the pairwise Hoelder quotient of v'' with exponent 1/2.
    - Rate fits are ordinary least squares on log y (scikit-learn), with the
      largest deviation of log y from the fitted line reported as the
      convexity defect.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.linalg import eigh
from sklearn.linear_model import LinearRegression

from .diagnostics import CheckResult, gaussian_area
from .errors import CheckFailed, FitDegenerate, GraphDecompositionFailed, InsufficientData, InvalidArgument
from .geometry import (
    SHRINKER_RADIUS,
    ClosedCurve,
    centroid,
    circle,
    hausdorff_distance,
    resample_uniform,
    snapshot,
)

logger = logging.getLogger(__name__)

HOELDER_EXPONENT = 0.5
MIN_FIT_SAMPLES = 8
_NEWTON_ITERATIONS = 8


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ReferenceShrinker:
    """The circle of radius sqrt(2) about ``center``, with an M-point angle grid."""

    radius: float = SHRINKER_RADIUS
    n_angles: int = 256
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if self.n_angles < 16:
            raise InvalidArgument(f"n_angles must be >= 16, got {self.n_angles}")

    @property
    def theta(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_angles) / self.n_angles

    @cached_property
    def curve(self) -> ClosedCurve:
        return circle(self.radius, self.n_angles, self.center)

    @property
    def omega(self) -> float:
        """Closed-form Gaussian area 2 pi r e^{-r^2/4}."""
        r = self.radius
        return 2.0 * math.pi * r * math.exp(-0.25 * r * r)


@dataclass(frozen=True, eq=False)
class GraphOverShrinker:
    """Normal graph v over the shrinker on the uniform angle grid.

    Attributes:
        theta: Uniform angle grid.
        v: Offset sqrt(2) - rho, inward positive.
        dv: dv / dtheta.
        d2v: d2v / dtheta2.
        center: Point the polar angle is measured about.
        c0, c1, c2, c2_alpha: Norms of v (see module docstring).
    """

    theta: np.ndarray
    v: np.ndarray
    dv: np.ndarray
    d2v: np.ndarray
    center: np.ndarray
    c0: float
    c1: float
    c2: float
    c2_alpha: float
    radius: float = SHRINKER_RADIUS

    @property
    def rho(self) -> np.ndarray:
        return self.radius - self.v

    def norms(self) -> dict[str, float]:
        return {"c0": self.c0, "c1": self.c1, "c2": self.c2, "c2_alpha": self.c2_alpha}


@dataclass(frozen=True)
class RateFit:
    """y ~ C e^{-m t} fitted on ``window``.

    Attributes:
        C: Amplitude exp(intercept).
        m: Decay rate (negative slope of log y).
        window: Time window the fit used.
        rms: Root-mean-square residual of log y.
        convexity_defect: Largest |log y - fit| on the window.
        n_samples: Samples used.
        exponential: True when the convexity defect is within tolerance.
    """

    C: float
    m: float
    window: tuple[float, float]
    rms: float
    convexity_defect: float
    n_samples: int
    exponential: bool = True

    def to_dict(self) -> dict[str, float | int | bool | list[float]]:
        return {
            "C": self.C,
            "m": self.m,
            "window": list(self.window),
            "rms": self.rms,
            "convexity_defect": self.convexity_defect,
            "n_samples": self.n_samples,
            "exponential": self.exponential,
        }


@dataclass(frozen=True)
class RateLemmaTerms:
    """Split of Omega(graph) - Omega(shrinker) into weight and Jacobian parts."""

    translation: float
    offset: float
    jacobian: float
    extras: dict[str, float] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return self.translation + self.offset + self.jacobian


# ---------------------------------------------------------------------------
# Graph decomposition
# ---------------------------------------------------------------------------
def graph_decompose(
    curve: ClosedCurve,
    shrinker: ReferenceShrinker | None = None,
    recenter: bool = True,
) -> GraphOverShrinker:
    """Write ``curve`` as a normal graph over the shrinker.

    Args:
        curve: A valid closed curve.
        shrinker: Reference shrinker supplying the angle grid.
        recenter: Measure angles about the area centroid (default) rather
            than the shrinker centre.

    Returns:
        The graph with its norms filled in.

    Raises:
        GraphDecompositionFailed: The polar angle about the centre is not
            strictly increasing along the curve (not star-shaped).
    """
    shrinker = shrinker or ReferenceShrinker()
    center = centroid(curve) if recenter else np.asarray(shrinker.center, dtype=float)
    z = (curve.vertices[:, 0] - center[0]) + 1j * (curve.vertices[:, 1] - center[1])
    n = len(z)

    steps = np.angle(np.roll(z, -1) / z)
    if np.any(np.abs(z) <= 0.0) or np.any(steps <= 0.0):
        bad = int(np.argmax(steps <= 0.0)) if np.any(steps <= 0.0) else int(np.argmin(np.abs(z)))
        raise GraphDecompositionFailed(
            f"curve is not star-shaped about ({center[0]:.6g}, {center[1]:.6g})",
            angle=float(np.angle(z[bad]) % (2.0 * np.pi)),
        )
    winding = steps.sum() / (2.0 * np.pi)
    if abs(winding - 1.0) > 1e-6:
        raise GraphDecompositionFailed(f"curve winds {winding:.3f} times about its centre", angle=0.0)

    # Unwrapped polar angle at each vertex parameter s_i = 2 pi i / n.
    phase0 = float(np.angle(z[0]))
    unwrapped = phase0 + np.concatenate([[0.0], np.cumsum(steps[:-1])])
    params = 2.0 * np.pi * np.arange(n) / n

    theta = shrinker.theta
    targets = phase0 + np.mod(theta - phase0, 2.0 * np.pi)
    s = np.interp(
        targets,
        np.concatenate([unwrapped, [unwrapped[0] + 2.0 * np.pi]]),
        np.concatenate([params, [2.0 * np.pi]]),
    )
    interpolant = _TrigInterpolant(z)
    for _ in range(_NEWTON_ITERATIONS):
        zs, dzs = interpolant(s)
        mismatch = np.angle(zs * np.exp(-1j * theta))
        s = s - mismatch / np.imag(dzs / zs)

    zs, dzs = interpolant(s)
    rho = np.abs(zs)
    drho = (np.real(dzs * np.conj(zs)) / rho) / np.imag(dzs / zs)
    v = shrinker.radius - rho
    dv = -drho
    d2v = _spectral_derivative(v, 2)

    graph = GraphOverShrinker(
        theta=theta,
        v=v,
        dv=dv,
        d2v=d2v,
        center=center,
        c0=float(np.max(np.abs(v))),
        c1=float(np.max(np.abs(dv))),
        c2=float(np.max(np.abs(d2v))),
        c2_alpha=0.0,
        radius=shrinker.radius,
    )
    c2_alpha = graph.c0 + graph.c1 + graph.c2 + hoelder_seminorm(d2v, theta)
    logger.debug("graph: c0=%.3g c2=%.3g c2_alpha=%.3g", graph.c0, graph.c2, c2_alpha)
    return replace(graph, c2_alpha=c2_alpha)


def hoelder_seminorm(values: np.ndarray, theta: np.ndarray, alpha: float = HOELDER_EXPONENT) -> float:
    """max_{i != j} |f_i - f_j| / d(theta_i, theta_j)^alpha with periodic distance."""
    gap = np.abs(theta[:, None] - theta[None, :])
    gap = np.minimum(gap, 2.0 * np.pi - gap)
    np.fill_diagonal(gap, np.inf)
    return float(np.max(np.abs(values[:, None] - values[None, :]) / gap**alpha))


def reconstruct(
    graph: GraphOverShrinker,
    shrinker: ReferenceShrinker | None = None,
    n: int | None = None,
) -> ClosedCurve:
    """Rebuild the curve center + rho(theta) e_theta, optionally resampled to ``n`` points."""
    rho = graph.rho
    pts = np.column_stack([rho * np.cos(graph.theta), rho * np.sin(graph.theta)]) + graph.center
    curve = ClosedCurve(pts)
    return resample_uniform(curve, n) if n is not None else curve


# ---------------------------------------------------------------------------
# Gaussian area over the shrinker
# ---------------------------------------------------------------------------
def q_value(curve: ClosedCurve, shrinker: ReferenceShrinker | None = None, method: str = "spectral") -> float:
    """Q = Omega(curve) - Omega(shrinker)."""
    shrinker = shrinker or ReferenceShrinker()
    return gaussian_area(snapshot(curve, method)) - shrinker.omega


def graph_gaussian_area(graph: GraphOverShrinker, shrinker: ReferenceShrinker | None = None) -> float:
    """Omega of the graph as an integral over the angle grid.

    Omega = int e^{-|x|^2/4} sqrt(rho^2 + rho'^2) dtheta with
    x = center + rho e_theta.
    """
    theta, rho = graph.theta, graph.rho
    cx, cy = graph.center
    x_sq = cx * cx + cy * cy + 2.0 * rho * (cx * np.cos(theta) + cy * np.sin(theta)) + rho**2
    element = np.sqrt(rho**2 + graph.dv**2)
    return float(np.sum(np.exp(-0.25 * x_sq) * element) * (2.0 * np.pi / len(theta)))


def rate_lemma_terms(graph: GraphOverShrinker, shrinker: ReferenceShrinker | None = None) -> RateLemmaTerms:
    """Split Omega(graph) - Omega(shrinker) over the shrinker's measure.

    With rho = sqrt(2) - v, dmu = sqrt(2) dtheta and
    |J| = sqrt(rho^2 + rho'^2) / sqrt(2):

        translation = int (e^{sqrt(2) v / 2} - 1) e^{-1/2} e^{-v^2/4} |J| dmu
        offset      = int (e^{-v^2/4} - 1) e^{-1/2} |J| dmu
        jacobian    = int (|J| - 1) e^{-1/2} dmu

    The graph is taken about its own centre, so the sum equals
    ``graph_gaussian_area`` of the graph translated to the origin.
    """
    shrinker = shrinker or ReferenceShrinker()
    r = shrinker.radius
    v, rho = graph.v, graph.rho
    jac = np.sqrt(rho**2 + graph.dv**2) / r
    dmu = r * (2.0 * np.pi / len(v))
    base = math.exp(-0.25 * r * r)
    translation = float(np.sum((np.exp(r * v / 2.0) - 1.0) * base * np.exp(-0.25 * v**2) * jac) * dmu)
    offset = float(np.sum((np.exp(-0.25 * v**2) - 1.0) * base * jac) * dmu)
    jacobian = float(np.sum((jac - 1.0) * base) * dmu)
    return RateLemmaTerms(translation, offset, jacobian, {"max_jacobian": float(np.max(jac))})


def rate_lemma_check(
    t: Sequence[float],
    q: Sequence[float],
    norms: Sequence[float],
    slack: float = 0.10,
    zero_tol: float = 1e-12,
    q_tol: float = 1e-10,
) -> CheckResult:
    """Q <= C~ |v|_{C^{2,1/2}}: report C~ = max Q / |v| and test for growth.

    The ratio must show no increasing trend over the last half of the
    samples: the fitted rise across that half stays below ``slack`` times C~.

    Raises:
        CheckFailed: A sample has |v| = 0 but Q above ``q_tol``.
    """
    t = np.asarray(t, dtype=float)
    q = np.asarray(q, dtype=float)
    norms = np.asarray(norms, dtype=float)
    usable = np.isfinite(q) & np.isfinite(norms)
    zero = usable & (norms <= zero_tol)
    if np.any(zero & (np.abs(q) > q_tol)):
        at = float(t[np.argmax(zero & (np.abs(q) > q_tol))])
        raise CheckFailed(f"graph norm vanishes at t={at:.6g} while Q exceeds {q_tol:g}")

    active = usable & ~zero
    if not active.any():
        return CheckResult(True, {"C_tilde": 0.0, "vacuous": True})

    ratio = q[active] / norms[active]
    c_tilde = float(max(np.max(ratio), 0.0))
    ts = t[active]
    half = ts >= ts[0] + 0.5 * (ts[-1] - ts[0])
    rise = 0.0
    if half.sum() >= 2 and np.ptp(ts[half]) > 0.0:
        model = LinearRegression().fit(ts[half].reshape(-1, 1), ratio[half])
        rise = float(model.coef_[0] * np.ptp(ts[half]))
    passed = rise <= slack * max(c_tilde, zero_tol)
    return CheckResult(
        bool(passed),
        {"C_tilde": c_tilde, "max_ratio": float(np.max(ratio)), "late_rise": rise, "vacuous": False},
    )


# ---------------------------------------------------------------------------
# Rates
# ---------------------------------------------------------------------------
def fit_rate(
    t: Sequence[float],
    y: Sequence[float],
    window: tuple[float, float] | None = None,
    convexity: float = 0.1,
    floor: float = 0.0,
) -> RateFit:
    """Fit y ~ C e^{-m t} by least squares on log y.

    Args:
        t: Sample times.
        y: Positive samples; non-positive or non-finite ones are dropped.
        window: Inclusive time window; the whole series by default.
        convexity: Largest tolerated |log y - fit| for ``exponential``.
        floor: The window ends at the first sample below ``floor``; samples
            there are at the noise level of the run, not on the decay.

    Returns:
        The fitted ``RateFit``.

    Raises:
        InsufficientData: Fewer than eight usable samples in the window.
        FitDegenerate: All usable samples share one time.

    Example:
        >>> t = np.linspace(0.0, 4.0, 20)
        >>> round(fit_rate(t, 3.0 * np.exp(-1.5 * t)).m, 6)
        1.5
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape:
        raise InvalidArgument(f"t and y differ in shape: {t.shape} vs {y.shape}")
    lo, hi = window if window is not None else (float(np.min(t)), float(np.max(t)))
    in_window = (t >= lo) & (t <= hi)
    below = in_window & (y < floor) & (y > 0.0)
    if floor > 0.0 and below.any():
        hi = float(t[below].min())
        in_window &= t < hi
    keep = in_window & np.isfinite(y) & (y > 0.0)
    dropped = int(in_window.sum() - keep.sum())
    if dropped:
        logger.warning("fit_rate: dropped %d non-positive samples in [%g, %g]", dropped, lo, hi)
    if keep.sum() < MIN_FIT_SAMPLES:
        raise InsufficientData(
            f"fit_rate needs >= {MIN_FIT_SAMPLES} positive samples in [{lo:g}, {hi:g}], got {int(keep.sum())}"
        )
    ts = t[keep].reshape(-1, 1)
    log_y = np.log(y[keep])
    if np.ptp(ts) <= 0.0:
        raise FitDegenerate("fit_rate: all samples share one time")

    model = LinearRegression().fit(ts, log_y)
    residual = log_y - model.predict(ts)
    defect = float(np.max(np.abs(residual)))
    return RateFit(
        C=float(np.exp(model.intercept_)),
        m=float(-model.coef_[0]),
        window=(float(lo), float(hi)),
        rms=float(np.sqrt(np.mean(residual**2))),
        convexity_defect=defect,
        n_samples=int(keep.sum()),
        exponential=defect <= convexity,
    )


def dichotomy_check(
    t: Sequence[float],
    norms: Sequence[float],
    fit: RateFit | None,
    margin: float = 0.2,
    zero_tol: float = 1e-12,
) -> CheckResult:
    """Either |v| vanishes identically, or |v(t)| >= C' e^{-m' t} with m' = m + margin.

    C' is the smallest |v| e^{m' t} over the fit window; the branch passes
    when C' is positive and finite.
    """
    t = np.asarray(t, dtype=float)
    norms = np.asarray(norms, dtype=float)
    finite = np.isfinite(norms)
    if finite.any() and np.all(norms[finite] <= zero_tol):
        return CheckResult(True, {"branch": "shrinker"})
    if fit is None or not math.isfinite(fit.m):
        return CheckResult(False, {"branch": "converging", "reason": "no finite rate fit"})
    lo, hi = fit.window
    mask = finite & (t >= lo) & (t <= hi)
    if not mask.any():
        return CheckResult(None, {"branch": "converging", "reason": "no samples in fit window"})
    rate = fit.m + margin
    c_prime = float(np.min(norms[mask] * np.exp(rate * t[mask])))
    return CheckResult(
        bool(c_prime > 0.0 and math.isfinite(c_prime)),
        {"branch": "converging", "m_prime": rate, "C_prime": c_prime},
    )


# ---------------------------------------------------------------------------
# Linearisation
# ---------------------------------------------------------------------------
def stability_spectrum(shrinker: ReferenceShrinker | None = None, m: int | None = None) -> np.ndarray:
    """Eigenvalues of v -> L v + (kappa^2 + 1/2) v on the shrinker, largest first.

    The operator is discretised with periodic second differences in
    arclength; on the sqrt(2) circle the eigenvalues approach 1 - k^2 / 2.
    """
    shrinker = shrinker or ReferenceShrinker()
    snap = snapshot(shrinker.curve)
    n = snap.n_points
    h = snap.length / n
    second = (np.eye(n, k=1) + np.eye(n, k=-1) - 2.0 * np.eye(n)) / h**2
    second[0, -1] = second[-1, 0] = 1.0 / h**2
    operator = second + np.diag(snap.kappa**2 + 0.5)
    values = eigh(0.5 * (operator + operator.T), eigvals_only=True)[::-1]
    return values if m is None else values[:m]


def predicted_rate(k: int) -> float:
    """Decay rate of radial mode k near the shrinker: k^2 / 2 - 1."""
    return 0.5 * k * k - 1.0


def initial_distance(curve: ClosedCurve, shrinker: ReferenceShrinker | None = None) -> float:
    """Hausdorff distance between the vertices of ``curve`` and of the shrinker."""
    shrinker = shrinker or ReferenceShrinker()
    return hausdorff_distance(curve, shrinker.curve)


# ---------------------------------------------------------------------------
# Private helpers
# ---------------------------------------------------------------------------
class _TrigInterpolant:
    """Trigonometric interpolant of complex samples at s_i = 2 pi i / n."""

    def __init__(self, z: np.ndarray) -> None:
        n = len(z)
        coeffs = np.fft.fft(z) / n
        freqs = np.fft.fftfreq(n, d=1.0 / n)
        if n % 2 == 0:
            nyquist = coeffs[n // 2] / 2.0
            coeffs = np.concatenate([coeffs, [nyquist]])
            coeffs[n // 2] = nyquist
            freqs = np.concatenate([freqs, [n // 2]])
        self._coeffs = coeffs
        self._freqs = freqs

    def __call__(self, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        phases = np.exp(1j * np.outer(s, self._freqs))
        return phases @ self._coeffs, phases @ (1j * self._freqs * self._coeffs)


def _spectral_derivative(values: np.ndarray, order: int) -> np.ndarray:
    """Derivative in theta of samples on the uniform periodic grid."""
    n = len(values)
    k = np.fft.rfftfreq(n, d=1.0 / n)
    multiplier = (1j * k) ** order
    if order % 2 == 1 and n % 2 == 0:
        multiplier[-1] = 0.0
    return np.fft.irfft(np.fft.rfft(values) * multiplier, n=n)
