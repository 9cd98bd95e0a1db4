"""test_geometry.py - Unit tests for curves, snapshots and quadrature.

Covers:
    - ClosedCurve validation (vertex count, orientation, zero-length edges)
    - Snapshot fields on circles and ellipses against closed forms
    - S vanishes on the circle of radius sqrt(2)
    - Arbitrary parameterisations give the same curvature
    - Translation keeps the curvature; rotation about the origin keeps S
    - Central differences converge at second order
    - L is self-adjoint for the Gaussian-weighted measure
    - Area, centroid, length, resampling, Hausdorff distance, simplicity
"""

import math

import numpy as np
import pytest

from shrinklab.errors import InvalidArgument, NumericDegeneracy
from shrinklab.geometry import (
    SHRINKER_RADIUS,
    ClosedCurve,
    centroid,
    circle,
    ellipse,
    enclosed_area,
    first_crossing,
    fourier_curve,
    hausdorff_distance,
    is_simple,
    l_operator,
    length,
    resample_uniform,
    snapshot,
    weighted_integral,
)


def _ellipse_curvature(snap, a: float, b: float) -> np.ndarray:
    cos_t = snap.x[:, 0] / a
    sin_t = snap.x[:, 1] / b
    return a * b / (a * a * sin_t**2 + b * b * cos_t**2) ** 1.5


# ---------------------------------------------------------------------------
# ClosedCurve
# ---------------------------------------------------------------------------


class TestClosedCurve:
    def test_too_few_vertices(self):
        with pytest.raises(InvalidArgument, match="at least 16"):
            ClosedCurve(np.random.default_rng(0).normal(size=(8, 2)))

    def test_clockwise_rejected(self):
        """A clockwise loop has negative signed area and is refused."""
        pts = circle(1.0, 32).vertices[::-1]
        with pytest.raises(InvalidArgument, match="counter-clockwise"):
            ClosedCurve(pts)

    def test_repeated_vertex_names_edge(self):
        pts = circle(1.0, 32).vertices.copy()
        pts[5] = pts[4]
        with pytest.raises(NumericDegeneracy, match="zero length") as info:
            ClosedCurve(pts)
        assert info.value.vertex == 4

    def test_non_finite_vertex(self):
        pts = circle(1.0, 32).vertices.copy()
        pts[7, 1] = np.nan
        with pytest.raises(NumericDegeneracy) as info:
            ClosedCurve(pts)
        assert info.value.vertex == 7

    def test_vertices_are_read_only(self):
        curve = circle(1.0, 32)
        with pytest.raises(ValueError):
            curve.vertices[0, 0] = 3.0

    def test_transforms(self):
        """translated, scaled and rotated return new valid curves."""
        curve = circle(1.0, 32)
        assert centroid(curve.translated((1.0, -2.0))) == pytest.approx([1.0, -2.0], abs=1e-12)
        assert enclosed_area(curve.scaled(2.0)) == pytest.approx(4.0 * math.pi, rel=1e-12)
        assert enclosed_area(curve.rotated(0.3)) == pytest.approx(math.pi, rel=1e-12)
        with pytest.raises(InvalidArgument):
            curve.scaled(0.0)


# ---------------------------------------------------------------------------
# Snapshot
# ---------------------------------------------------------------------------


class TestSnapshot:
    def test_shrinker_defect_vanishes(self):
        """S = 0 on the sqrt(2) circle to round-off."""
        snap = snapshot(circle(SHRINKER_RADIUS, 256))
        assert np.max(np.abs(snap.S)) < 1e-9
        assert np.max(np.abs(snap.dS)) < 1e-9
        assert np.max(np.abs(snap.d2S)) < 1e-8

    @pytest.mark.parametrize("radius", [0.5, 1.0, 2.0, 3.0])
    def test_circle_fields(self, radius):
        """kappa = 1/r, the normal points inward and S = 1/r - r/2."""
        snap = snapshot(circle(radius, 64))
        assert snap.kappa == pytest.approx(np.full(64, 1.0 / radius), abs=1e-10)
        assert snap.S == pytest.approx(np.full(64, 1.0 / radius - radius / 2.0), abs=1e-10)
        assert np.all(snap.x_dot_normal < 0.0)
        assert snap.x_dot_tangent == pytest.approx(np.zeros(64), abs=1e-10)
        assert snap.length == pytest.approx(2.0 * math.pi * radius, rel=1e-12)

    def test_ellipse_curvature(self):
        a, b = 2.0, 1.0
        snap = snapshot(ellipse(a, b, 128))
        assert np.max(np.abs(snap.kappa - _ellipse_curvature(snap, a, b))) < 1e-6

    def test_reparameterisation_invariance(self):
        """A non-uniform angle grid gives the same curvature (spectral)."""
        s = 2.0 * np.pi * np.arange(64) / 64
        theta = s + 0.2 * np.sin(s)
        curve = ClosedCurve(np.column_stack([np.cos(theta), np.sin(theta)]))
        snap = snapshot(curve)
        assert snap.kappa == pytest.approx(np.ones(64), abs=1e-8)
        assert snap.length == pytest.approx(2.0 * math.pi, rel=1e-10)

    def test_translation_keeps_curvature(self):
        base = snapshot(ellipse(2.0, 1.0, 64))
        moved = snapshot(ellipse(2.0, 1.0, 64).translated((3.0, 1.0)))
        assert moved.kappa == pytest.approx(base.kappa, abs=1e-10)

    def test_rotation_keeps_defect(self):
        """S and the weight depend on x only through |x| and x.nu."""
        curve = fourier_curve([(2, 0.1), (3, 0.05)], 64)
        base = snapshot(curve)
        turned = snapshot(curve.rotated(0.7))
        assert turned.S == pytest.approx(base.S, abs=1e-10)
        assert turned.dS == pytest.approx(base.dS, abs=1e-9)
        assert turned.weight == pytest.approx(base.weight, abs=1e-12)

    def test_unknown_method(self):
        with pytest.raises(InvalidArgument, match="derivative method"):
            snapshot(circle(1.0, 32), method="upwind")

    def test_central_is_second_order(self):
        """Curvature error of central differences drops by about four per refinement."""
        a, b = 2.0, 1.0
        errors = []
        for n in (64, 128):
            snap = snapshot(ellipse(a, b, n), method="central")
            errors.append(np.max(np.abs(snap.kappa - _ellipse_curvature(snap, a, b))))
        assert np.log2(errors[0] / errors[1]) > 1.8

    def test_field_length_checked(self):
        snap = snapshot(circle(1.0, 32))
        with pytest.raises(InvalidArgument, match="31 values"):
            snap.arc_derivative(np.ones(31))


# ---------------------------------------------------------------------------
# Operators and quadrature
# ---------------------------------------------------------------------------


class TestOperators:
    def test_l_annihilates_constants(self):
        snap = snapshot(ellipse(2.0, 1.0, 64))
        assert np.max(np.abs(l_operator(np.ones(64), snap))) < 1e-9

    def test_l_on_circle_modes(self):
        """On the sqrt(2) circle, L cos(k theta) = -(k^2 / 2) cos(k theta)."""
        snap = snapshot(circle(SHRINKER_RADIUS, 64))
        theta = np.arctan2(snap.x[:, 1], snap.x[:, 0])
        for k in (1, 2, 3):
            f = np.cos(k * theta)
            assert l_operator(f, snap) == pytest.approx(-0.5 * k * k * f, abs=1e-9)

    def test_l_is_self_adjoint(self):
        """int f L g dmu~ = int g L f dmu~ on an ellipse."""
        snap = snapshot(ellipse(2.0, 1.0, 128))
        f = snap.x[:, 0] ** 2 + snap.x[:, 1]
        g = np.sin(snap.x[:, 0]) * snap.x[:, 1]
        left = weighted_integral(f * l_operator(g, snap), snap, weighted=True)
        right = weighted_integral(g * l_operator(f, snap), snap, weighted=True)
        assert left == pytest.approx(right, abs=1e-8)

    def test_l_rejects_vector_field(self):
        snap = snapshot(circle(1.0, 32))
        with pytest.raises(InvalidArgument, match="scalar"):
            l_operator(snap.x, snap)

    @pytest.mark.parametrize("radius,omega", [(SHRINKER_RADIUS, 5.38945), (2.0, 4.62290)])
    def test_gaussian_area_of_circles(self, radius, omega):
        """Omega = 2 pi r e^{-r^2/4}."""
        snap = snapshot(circle(radius, 128))
        value = weighted_integral(1.0, snap, weighted=True)
        assert value == pytest.approx(2.0 * math.pi * radius * math.exp(-0.25 * radius**2), rel=1e-12)
        assert value == pytest.approx(omega, abs=1e-4)

    def test_weighted_integral_length_checked(self):
        snap = snapshot(circle(1.0, 32))
        with pytest.raises(InvalidArgument):
            weighted_integral(np.ones(5), snap)


class TestMeasurements:
    def test_ellipse_area_and_length(self):
        curve = ellipse(2.0, 1.0, 128)
        assert enclosed_area(curve) == pytest.approx(2.0 * math.pi, rel=1e-9)
        # Ramanujan's second approximation, far more accurate than rel=1e-6 at b/a = 1/2.
        h = (2.0 - 1.0) ** 2 / (2.0 + 1.0) ** 2
        perimeter = math.pi * 3.0 * (1.0 + 3.0 * h / (10.0 + math.sqrt(4.0 - 3.0 * h)))
        assert length(curve) == pytest.approx(perimeter, rel=1e-6)

    def test_centroid_of_shifted_fourier_curve(self):
        curve = fourier_curve([(2, 0.1)], 64).translated((0.5, 0.25))
        assert centroid(curve) == pytest.approx([0.5, 0.25], abs=1e-10)

    def test_resample_uniform_spacing(self):
        """Resampling equalises edges and keeps vertex 0."""
        s = 2.0 * np.pi * np.arange(80) / 80
        theta = s + 0.3 * np.sin(s)
        uneven = ClosedCurve(np.column_stack([2.0 * np.cos(theta), np.sin(theta)]))
        resampled = resample_uniform(uneven, 64)
        assert resampled.n_points == 64
        assert resampled.edge_ratio < 1.01
        assert resampled.vertices[0] == pytest.approx(uneven.vertices[0], abs=1e-12)
        assert enclosed_area(resampled) == pytest.approx(enclosed_area(uneven), rel=1e-3)

    def test_resample_too_few(self):
        with pytest.raises(InvalidArgument, match="n >= 16"):
            resample_uniform(circle(1.0, 32), 8)

    def test_hausdorff_between_circles(self):
        assert hausdorff_distance(circle(1.0, 64), circle(1.5, 64)) == pytest.approx(0.5, abs=1e-12)

    def test_simple_curves(self):
        assert is_simple(ellipse(2.0, 1.0, 64))
        assert is_simple(fourier_curve([(3, 0.2)], 64))

    def test_limacon_with_inner_loop_is_not_simple(self):
        """r = 1/2 + cos(theta) crosses itself at the origin."""
        theta = 2.0 * np.pi * np.arange(64) / 64
        r = 0.5 + np.cos(theta)
        curve = ClosedCurve(np.column_stack([r * np.cos(theta), r * np.sin(theta)]))
        assert not is_simple(curve)
        assert first_crossing(curve) is not None
