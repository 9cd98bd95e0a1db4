"""geometry.py - Discrete differential geometry of closed plane curves.

A ``ClosedCurve`` is the n = 1 hypersurface the whole package evolves: a
counter-clockwise polygon whose vertices sample a smooth embedded loop. A
``GeometrySnapshot`` holds every pointwise field the evolution identities are
built from (metric, Christoffel term, frame, curvature, the shrinker defect S
and its arclength derivatives, the Gaussian weight) together with the
arclength element used for quadrature.

Conventions:
    - Vertices run counter-clockwise; the unit normal is the tangent rotated
      by +90 degrees, so it points inward and convex curves have positive
      curvature. With H = kappa the shrinker equation reads S = 1/r - r/2 = 0
      on the circle of radius sqrt(2).
    - The parameter u is the vertex index, so g = |phi_u|^2 carries the grid
      spacing and the arclength element of vertex i is |phi_u|_i.

Design decisions:
    - Derivatives in u are either spectral (FFT, the default) or second-order
      central differences. Both are converted to arclength derivatives through
      g and the Christoffel term, so any regular parameterisation works.
    - Quadrature is the periodic trapezoid rule with |phi_u| taken from the
      spectral derivative, which is spectrally accurate for smooth loops.
    - Invalid curves (too few vertices, zero-length edges, clockwise
      orientation) are rejected at construction, never repaired.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial.distance import directed_hausdorff

from .errors import InvalidArgument, NumericDegeneracy

logger = logging.getLogger(__name__)

# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------
MIN_POINTS = 16
MAX_EDGE_RATIO = 1.5
SHRINKER_RADIUS = float(np.sqrt(2.0))

DerivativeMethod = Literal["spectral", "central"]
DERIVATIVE_METHODS: tuple[str, ...] = ("spectral", "central")

_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(5)
_NEWTON_ITERATIONS = 4
_OVERSAMPLE = 16
_CROSSING_BLOCK = 256


# ---------------------------------------------------------------------------
# Curve
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class ClosedCurve:
    """Counter-clockwise closed polygon with implicit closure.

    Attributes:
        vertices: Read-only ``(N, 2)`` float array. Row ``N - 1`` connects back
            to row ``0``; the last row must not repeat the first.

    Raises:
        InvalidArgument: Fewer than ``MIN_POINTS`` vertices, wrong shape, or a
            non-positive signed area (clockwise or degenerate loop).
        NumericDegeneracy: A non-finite coordinate or a zero-length edge; the
            error names the first offending vertex.
    """

    vertices: np.ndarray

    def __post_init__(self) -> None:
        pts = np.array(self.vertices, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InvalidArgument(f"vertices must have shape (N, 2), got {pts.shape}")
        if len(pts) < MIN_POINTS:
            raise InvalidArgument(
                f"a closed curve needs at least {MIN_POINTS} vertices, got {len(pts)}"
            )
        finite = np.isfinite(pts).all(axis=1)
        if not finite.all():
            bad = int(np.argmin(finite))
            raise NumericDegeneracy(f"vertex {bad} has a non-finite coordinate", vertex=bad)
        edges = _edge_lengths(pts)
        if np.any(edges <= 0.0):
            bad = int(np.argmin(edges))
            raise NumericDegeneracy(
                f"edge from vertex {bad} to {(bad + 1) % len(pts)} has zero length",
                vertex=bad,
            )
        area = _polygon_area(pts)
        if area <= 0.0:
            raise InvalidArgument(
                f"curve must be counter-clockwise with positive area, got signed area {area:.6g}"
            )
        pts.setflags(write=False)
        object.__setattr__(self, "vertices", pts)

    @property
    def n_points(self) -> int:
        return len(self.vertices)

    @property
    def edge_lengths(self) -> np.ndarray:
        """Length of edge ``i -> i + 1`` for every vertex ``i``."""
        return _edge_lengths(self.vertices)

    @property
    def edge_ratio(self) -> float:
        edges = self.edge_lengths
        return float(edges.max() / edges.min())

    @property
    def length(self) -> float:
        """Polygon perimeter."""
        return float(self.edge_lengths.sum())

    def translated(self, offset: Sequence[float]) -> "ClosedCurve":
        return ClosedCurve(self.vertices + np.asarray(offset, dtype=float))

    def scaled(self, factor: float) -> "ClosedCurve":
        if factor <= 0.0:
            raise InvalidArgument(f"scale factor must be > 0, got {factor}")
        return ClosedCurve(self.vertices * factor)

    def rotated(self, angle: float) -> "ClosedCurve":
        c, s = np.cos(angle), np.sin(angle)
        rotation = np.array([[c, -s], [s, c]])
        return ClosedCurve(self.vertices @ rotation.T)

    def __len__(self) -> int:
        return self.n_points

    def __repr__(self) -> str:  # pragma: no cover
        return f"ClosedCurve(n_points={self.n_points}, area={enclosed_area(self):.6g})"


# ---------------------------------------------------------------------------
# Snapshot
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class GeometrySnapshot:
    """Per-vertex geometric fields of one curve.

    All arrays have one entry (or one row) per vertex.

    Attributes:
        x: Positions, shape ``(N, 2)``.
        g: Metric |phi_u|^2.
        christoffel: g_u / (2 g), the one-dimensional Christoffel symbol.
        tangent: Unit tangent T, shape ``(N, 2)``.
        normal: Unit normal, T rotated by +90 degrees (inward), shape ``(N, 2)``.
        kappa: Signed curvature; equals H and the only component of A.
        dkappa: Arclength derivative of kappa.
        S: Shrinker defect kappa + (x . normal) / 2.
        dS: Arclength derivative of S.
        d2S: Second arclength derivative of S (the Laplacian at n = 1).
        weight: Gaussian weight exp(-|x|^2 / 4).
        ds: Arclength element per vertex (quadrature weight).
        method: Derivative method the fields were computed with.
    """

    x: np.ndarray
    g: np.ndarray
    christoffel: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    kappa: np.ndarray
    dkappa: np.ndarray
    S: np.ndarray
    dS: np.ndarray
    d2S: np.ndarray
    weight: np.ndarray
    ds: np.ndarray
    method: str = "spectral"

    @property
    def n_points(self) -> int:
        return len(self.g)

    @property
    def length(self) -> float:
        return float(self.ds.sum())

    @property
    def x_dot_tangent(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.x, self.tangent)

    @property
    def x_dot_normal(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.x, self.normal)

    def arc_derivative(self, f: np.ndarray) -> np.ndarray:
        """Arclength derivative of a per-vertex field (scalar or vector)."""
        f = self._check(f)
        return _derivative(f, 1, self.method) / _column(np.sqrt(self.g), f)

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        """Second arclength derivative (f_uu - christoffel * f_u) / g."""
        f = self._check(f)
        fu = _derivative(f, 1, self.method)
        fuu = _derivative(f, 2, self.method)
        return (fuu - _column(self.christoffel, f) * fu) / _column(self.g, f)

    def _check(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape[0] != self.n_points:
            raise InvalidArgument(
                f"field has {f.shape[0]} values but the curve has {self.n_points} vertices"
            )
        return f


def snapshot(curve: ClosedCurve, method: DerivativeMethod = "spectral") -> GeometrySnapshot:
    """Compute every per-vertex geometric field of ``curve``.

    Args:
        curve: A valid closed curve. Any regular parameterisation works;
            uniform arclength spacing gives the best-conditioned derivatives.
        method: ``"spectral"`` (FFT differentiation) or ``"central"``
            (second-order central differences).

    Returns:
        A ``GeometrySnapshot`` with all fields filled.

    Raises:
        InvalidArgument: Unknown derivative method.
        NumericDegeneracy: |phi_u| vanishes at a vertex or a field is not
            finite; the error names the vertex.
    """
    return snapshot_of(curve.vertices, method)


def snapshot_of(points: np.ndarray, method: DerivativeMethod = "spectral") -> GeometrySnapshot:
    """Snapshot of a raw vertex array, skipping ``ClosedCurve`` validation.

    The flow integrator evaluates velocities at intermediate RK stages, which
    are not re-validated as curves.
    """
    if method not in DERIVATIVE_METHODS:
        raise InvalidArgument(f"derivative method must be one of {DERIVATIVE_METHODS}, got {method!r}")
    x = np.asarray(points, dtype=float)

    xu = _derivative(x, 1, method)
    xuu = _derivative(x, 2, method)
    speed = np.linalg.norm(xu, axis=1)
    scale = float(np.mean(speed)) if len(speed) else 0.0
    if not np.isfinite(scale) or scale <= 0.0 or np.min(speed) <= 1e-12 * scale:
        bad = int(np.argmin(speed)) if len(speed) else 0
        raise NumericDegeneracy(f"degenerate edge: |phi_u| vanishes at vertex {bad}", vertex=bad)

    if method == "spectral":
        ds = speed
    else:
        ds = np.linalg.norm(_derivative(x, 1, "spectral"), axis=1)

    g = speed**2
    christoffel = _derivative(g, 1, method) / (2.0 * g)
    tangent = xu / speed[:, None]
    normal = np.column_stack([-tangent[:, 1], tangent[:, 0]])
    kappa = (xu[:, 0] * xuu[:, 1] - xu[:, 1] * xuu[:, 0]) / speed**3
    S = kappa + 0.5 * np.einsum("ij,ij->i", x, normal)

    Su = _derivative(S, 1, method)
    dS = Su / speed
    d2S = (_derivative(S, 2, method) - christoffel * Su) / g
    dkappa = _derivative(kappa, 1, method) / speed
    weight = np.exp(-0.25 * np.einsum("ij,ij->i", x, x))

    for name, field in (("curvature", kappa), ("S", S), ("d2S", d2S)):
        finite = np.isfinite(field)
        if not finite.all():
            bad = int(np.argmin(finite))
            raise NumericDegeneracy(f"{name} is not finite at vertex {bad}", vertex=bad)

    return GeometrySnapshot(
        x=x,
        g=g,
        christoffel=christoffel,
        tangent=tangent,
        normal=normal,
        kappa=kappa,
        dkappa=dkappa,
        S=S,
        dS=dS,
        d2S=d2S,
        weight=weight,
        ds=ds,
        method=method,
    )


# ---------------------------------------------------------------------------
# Operators and quadrature
# ---------------------------------------------------------------------------
def l_operator(f: np.ndarray, snap: GeometrySnapshot) -> np.ndarray:
    """Apply the stability operator L f = f_ss - (x . T) f_s / 2.

    The gradient of a function on a curve is tangential, so the drift term
    <x, grad f> reduces to (x . T) times the arclength derivative.

    Args:
        f: One value per vertex.
        snap: Snapshot of the curve ``f`` lives on.

    Returns:
        L f, one value per vertex.

    Raises:
        InvalidArgument: ``f`` does not have one value per vertex.

    Example:
        >>> snap = snapshot(circle(SHRINKER_RADIUS, 64))
        >>> float(abs(l_operator(np.ones(64), snap)).max()) < 1e-12
        True
    """
    f = np.asarray(f, dtype=float)
    if f.ndim != 1 or len(f) != snap.n_points:
        raise InvalidArgument(
            f"l_operator expects {snap.n_points} scalar values, got shape {f.shape}"
        )
    return snap.laplacian(f) - 0.5 * snap.x_dot_tangent * snap.arc_derivative(f)


def weighted_integral(f: np.ndarray | float, snap: GeometrySnapshot, weighted: bool = False) -> float:
    """Trapezoid sum of ``f`` over the curve, optionally Gaussian-weighted.

    Args:
        f: One value per vertex, or a scalar broadcast to every vertex.
        snap: Snapshot supplying the arclength element and the weight.
        weighted: Multiply by exp(-|x|^2 / 4) when True.

    Returns:
        sum_i f_i (w_i) ds_i.

    Raises:
        InvalidArgument: ``f`` is an array of the wrong length.
    """
    values = np.asarray(f, dtype=float)
    if values.ndim == 0:
        values = np.full(snap.n_points, float(values))
    elif values.shape != (snap.n_points,):
        raise InvalidArgument(
            f"weighted_integral expects {snap.n_points} values, got shape {values.shape}"
        )
    element = snap.ds * snap.weight if weighted else snap.ds
    return float(np.dot(values, element))


def enclosed_area(curve: ClosedCurve) -> float:
    """Signed enclosed area, positive for counter-clockwise curves.

    Evaluates the shoelace integral (1/2) closed-integral (x dy - y dx) with
    spectral derivatives, so smooth loops are integrated to spectral accuracy
    rather than the O(h^2) of the polygon formula.
    """
    x = curve.vertices
    xu = _derivative(x, 1, "spectral")
    return float(0.5 * np.sum(x[:, 0] * xu[:, 1] - x[:, 1] * xu[:, 0]))


def centroid(curve: ClosedCurve) -> np.ndarray:
    """Area centroid, via Green's theorem with spectral derivatives."""
    x = curve.vertices
    xu = _derivative(x, 1, "spectral")
    area = enclosed_area(curve)
    cx = 0.5 * np.sum(x[:, 0] ** 2 * xu[:, 1]) / area
    cy = -0.5 * np.sum(x[:, 1] ** 2 * xu[:, 0]) / area
    return np.array([cx, cy])


def length(curve: ClosedCurve) -> float:
    """Arclength of the smooth loop through the vertices (spectral)."""
    xu = _derivative(curve.vertices, 1, "spectral")
    return float(np.linalg.norm(xu, axis=1).sum())


# ---------------------------------------------------------------------------
# Resampling, distances, simplicity
# ---------------------------------------------------------------------------
def resample_uniform(curve: ClosedCurve, n: int) -> ClosedCurve:
    """Resample ``curve`` to ``n`` vertices at equal arclength spacing.

    A periodic cubic spline is fitted through the vertices with chord-length
    knots. Its arclength is integrated per segment with 5-point Gauss-Legendre
    quadrature and inverted by Newton iteration, so the new vertices lie on
    the spline at equal spline arclength. Vertex 0 is kept in place.

    Args:
        curve: A valid closed curve.
        n: Number of vertices of the result.

    Returns:
        A new ``ClosedCurve`` with ``n`` vertices.

    Raises:
        InvalidArgument: ``n < MIN_POINTS``.
    """
    if n < MIN_POINTS:
        raise InvalidArgument(f"resample_uniform needs n >= {MIN_POINTS}, got {n}")

    pts = curve.vertices
    chords = curve.edge_lengths
    knots = np.concatenate([[0.0], np.cumsum(chords)])
    spline = CubicSpline(knots, np.vstack([pts, pts[:1]]), bc_type="periodic", axis=0)
    velocity = spline.derivative()

    segment_arc = _gauss_arclength(velocity, knots[:-1], knots[1:])
    cumulative = np.concatenate([[0.0], np.cumsum(segment_arc)])
    targets = cumulative[-1] * np.arange(n) / n

    seg = np.clip(np.searchsorted(cumulative, targets, side="right") - 1, 0, len(chords) - 1)
    u = knots[seg] + (targets - cumulative[seg]) / segment_arc[seg] * chords[seg]
    for _ in range(_NEWTON_ITERATIONS):
        arc = cumulative[seg] + _gauss_arclength(velocity, knots[seg], u)
        speed = np.linalg.norm(velocity(u), axis=1)
        u = np.clip(u - (arc - targets) / speed, knots[seg], knots[seg + 1])

    return ClosedCurve(spline(u))


def hausdorff_distance(a: ClosedCurve | np.ndarray, b: ClosedCurve | np.ndarray) -> float:
    """Symmetric Hausdorff distance between two vertex sets."""
    pa = a.vertices if isinstance(a, ClosedCurve) else np.asarray(a, dtype=float)
    pb = b.vertices if isinstance(b, ClosedCurve) else np.asarray(b, dtype=float)
    return float(max(directed_hausdorff(pa, pb)[0], directed_hausdorff(pb, pa)[0]))


def is_simple(curve: ClosedCurve) -> bool:
    """True when no two non-adjacent edges cross."""
    return first_crossing(curve) is None


def first_crossing(curve: ClosedCurve) -> tuple[int, int] | None:
    """Return the first pair of crossing edges ``(i, j)``, or None."""
    p = curve.vertices
    q = np.roll(p, -1, axis=0)
    n = len(p)
    idx = np.arange(n)
    for start in range(0, n, _CROSSING_BLOCK):
        rows = idx[start : start + _CROSSING_BLOCK]
        a, b = p[rows][:, None, :], q[rows][:, None, :]
        c, d = p[None, :, :], q[None, :, :]
        o1 = _orient(a, b, c)
        o2 = _orient(a, b, d)
        o3 = _orient(c, d, a)
        o4 = _orient(c, d, b)
        crossing = (o1 * o2 < 0.0) & (o3 * o4 < 0.0)
        gap = (idx[None, :] - rows[:, None]) % n
        crossing &= (gap > 1) & (gap < n - 1)
        hits = np.argwhere(crossing)
        if len(hits):
            i, j = hits[0]
            return int(rows[i]), int(j)
    return None


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------
def circle(radius: float, n: int, center: Sequence[float] = (0.0, 0.0)) -> ClosedCurve:
    """Circle sampled at ``n`` equally spaced angles, starting at angle 0."""
    if radius <= 0.0:
        raise InvalidArgument(f"circle radius must be > 0, got {radius}")
    theta = 2.0 * np.pi * np.arange(n) / n
    pts = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
    return ClosedCurve(pts + np.asarray(center, dtype=float))


def ellipse(a: float, b: float, n: int) -> ClosedCurve:
    """Axis-aligned centred ellipse at uniform arclength spacing."""
    if a <= 0.0 or b <= 0.0:
        raise InvalidArgument(f"ellipse semi-axes must be > 0, got a={a}, b={b}")
    t = 2.0 * np.pi * np.arange(_OVERSAMPLE * n) / (_OVERSAMPLE * n)
    dense = ClosedCurve(np.column_stack([a * np.cos(t), b * np.sin(t)]))
    return resample_uniform(dense, n)


def radial_curve(
    rho: Callable[[np.ndarray], np.ndarray],
    n: int,
    center: Sequence[float] = (0.0, 0.0),
) -> ClosedCurve:
    """Star-shaped curve r = rho(theta) at uniform arclength spacing."""
    theta = 2.0 * np.pi * np.arange(_OVERSAMPLE * n) / (_OVERSAMPLE * n)
    r = np.asarray(rho(theta), dtype=float)
    if np.any(r <= 0.0):
        raise InvalidArgument("radial profile must be positive at every angle")
    dense = ClosedCurve(np.column_stack([r * np.cos(theta), r * np.sin(theta)]))
    return resample_uniform(dense, n).translated(center)


def fourier_curve(
    modes: Sequence[tuple[int, float]],
    n: int,
    base_radius: float = SHRINKER_RADIUS,
) -> ClosedCurve:
    """Radial cosine perturbation rho = base + sum amp * cos(k theta)."""

    def rho(theta: np.ndarray) -> np.ndarray:
        r = np.full_like(theta, base_radius)
        for k, amplitude in modes:
            r += amplitude * np.cos(k * theta)
        return r

    return radial_curve(rho, n)


# ---------------------------------------------------------------------------
# Private helpers
# ---------------------------------------------------------------------------
def _derivative(values: np.ndarray, order: int, method: str) -> np.ndarray:
    """Derivative along axis 0 with respect to the vertex index."""
    if method == "central":
        forward = np.roll(values, -1, axis=0)
        backward = np.roll(values, 1, axis=0)
        if order == 1:
            return 0.5 * (forward - backward)
        return forward - 2.0 * values + backward

    n = values.shape[0]
    coeffs = np.fft.rfft(values, axis=0)
    wavenumber = 2.0 * np.pi * np.arange(n // 2 + 1) / n
    multiplier = (1j * wavenumber) ** order
    if order % 2 == 1 and n % 2 == 0:
        multiplier[-1] = 0.0
    multiplier = multiplier.reshape((-1,) + (1,) * (values.ndim - 1))
    return np.fft.irfft(coeffs * multiplier, n=n, axis=0)


def _column(weights: np.ndarray, like: np.ndarray) -> np.ndarray:
    return weights[:, None] if like.ndim == 2 else weights


def _edge_lengths(pts: np.ndarray) -> np.ndarray:
    return np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)


def _polygon_area(pts: np.ndarray) -> float:
    nxt = np.roll(pts, -1, axis=0)
    return float(0.5 * np.sum(pts[:, 0] * nxt[:, 1] - nxt[:, 0] * pts[:, 1]))


def _gauss_arclength(velocity: Callable, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Arclength of the spline between parameters ``a`` and ``b`` (elementwise)."""
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * _GAUSS_NODES[None, :]
    speeds = np.linalg.norm(velocity(nodes.ravel()), axis=1).reshape(nodes.shape)
    return half * (speeds @ _GAUSS_WEIGHTS)


def _orient(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    ab = b - a
    ac = c - a
    return ab[..., 0] * ac[..., 1] - ab[..., 1] * ac[..., 0]
