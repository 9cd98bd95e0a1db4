"""test_identities.py - Unit tests for the identity residual suite.

Covers:
    - Registry contents and variant names
    - Unknown identities and variants raise InvalidArgument before any work
    - Dynamic identities need a time step
    - Static identities hold to round-off with spectral derivatives
    - Dynamic identities on the shrinker and on an ellipse
    - The complete second-derivative variants agree with the flow
    - Refinement orders: precision floor and second order for central differences
"""

import math

import numpy as np
import pytest

from shrinklab.diagnostics import (
    IDENTITIES,
    IdentityContext,
    evaluate_identity,
    identity_residual,
    list_identities,
    lookup,
    refinement_order,
    run_identity_suite,
)
from shrinklab.diagnostics.identities import PRECISION_FLOOR
from shrinklab.errors import InvalidArgument
from shrinklab.geometry import SHRINKER_RADIUS, ClosedCurve, circle

STATIC_NAMES = [
    "curvature-laplacian",
    "curvature-hessian",
    "curvature-squared-laplacian",
    "quotient-cauchy-schwarz",
]
FIRST_ORDER_NAMES = [
    "metric",
    "inverse-metric",
    "normal",
    "second-fundamental-form",
    "second-fundamental-form-stability",
    "curvature-squared",
    "defect",
    "weighted-measure",
    "energy-rate",
]

# Below 128 points the fields of the angle-parameterised ellipse are not
# resolved to the identity tolerances.
ELLIPSE_POINTS = 128


def _angle_ellipse(n: int) -> ClosedCurve:
    """Ellipse with semi-axes 2 and 1 sampled at equal parameter angles."""
    t = 2.0 * np.pi * np.arange(n) / n
    return ClosedCurve(np.column_stack([2.0 * np.cos(t), np.sin(t)]))


def _shrinker(n: int) -> ClosedCurve:
    return circle(SHRINKER_RADIUS, n)


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------


class TestRegistry:
    def test_contents(self):
        names = [spec.name for spec in list_identities()]
        assert len(names) == 17
        assert names[:4] == STATIC_NAMES
        assert all(lookup(name).kind == "static" for name in STATIC_NAMES)
        assert all(lookup(name).kind == "dynamic" for name in FIRST_ORDER_NAMES)

    def test_variants(self):
        assert list(IDENTITIES["quotient-rate"].variants) == ["complete", "first-derivation", "displayed"]
        assert list(IDENTITIES["energy-second-derivative"].variants) == ["complete", "displayed"]
        assert list(IDENTITIES["metric"].variants) == ["default"]

    def test_unknown_identity(self):
        with pytest.raises(InvalidArgument, match="unknown identity"):
            lookup("gauss-bonnet")

    def test_suite_checks_names_first(self):
        """The curve builder is never called for an unknown name."""

        def build(n):
            raise AssertionError("curve built before the names were checked")

        with pytest.raises(InvalidArgument, match="unknown identity"):
            run_identity_suite(build, 64, 1e-4, names=["metric", "nope"])

    def test_unknown_variant(self):
        ctx = IdentityContext(_angle_ellipse(64))
        with pytest.raises(InvalidArgument, match="has no variant"):
            identity_residual("curvature-laplacian", ctx, "displayed")

    def test_dynamic_needs_delta(self):
        ctx = IdentityContext(_angle_ellipse(64))
        with pytest.raises(InvalidArgument, match="need a time step"):
            identity_residual("metric", ctx)


# ---------------------------------------------------------------------------
# Residuals
# ---------------------------------------------------------------------------


class TestStaticIdentities:
    @pytest.mark.parametrize("name", STATIC_NAMES)
    def test_hold_on_ellipse(self, name):
        ctx = IdentityContext(_angle_ellipse(ELLIPSE_POINTS))
        report = identity_residual(name, ctx)
        assert report.kind == "static"
        assert report.dt is None
        assert report.residual < 1e-6 * report.scale

    def test_scale(self):
        """max(1, |kappa|^2 L): the ellipse has kappa = 2 at the ends of the major axis."""
        ctx = IdentityContext(_angle_ellipse(128))
        assert ctx.scale == pytest.approx(4.0 * ctx.snapshot.length, rel=1e-8)
        assert IdentityContext(_shrinker(64)).scale == pytest.approx(0.5 * 2.0 * math.pi * SHRINKER_RADIUS)

    def test_cauchy_schwarz_gap_is_nonnegative(self):
        ctx = IdentityContext(_angle_ellipse(64))
        assert identity_residual("quotient-cauchy-schwarz", ctx).residual == 0.0


class TestDynamicIdentities:
    def test_shrinker_suite(self):
        """The shrinker does not move, so every residual is round-off."""
        reports = run_identity_suite(_shrinker, 64, 1e-3, names=STATIC_NAMES + FIRST_ORDER_NAMES)
        assert len(reports) == len(STATIC_NAMES) + len(FIRST_ORDER_NAMES)
        for report in reports:
            assert report.residual < 1e-8, report.name
            assert report.residual_fine < 1e-8, report.name
        dynamic = [r for r in reports if r.kind == "dynamic"]
        assert all(r.dt == 1e-3 and r.n_points == 64 for r in dynamic)

    def test_quotient_rate_undefined_on_shrinker(self):
        ctx = IdentityContext(_shrinker(64), delta=1e-3)
        reports = evaluate_identity("quotient-rate", ctx)
        assert [r.variant for r in reports] == ["complete", "first-derivation", "displayed"]
        assert all(r.residual is None for r in reports)

    @pytest.mark.parametrize("name", FIRST_ORDER_NAMES)
    def test_first_order_on_ellipse(self, name):
        ctx = IdentityContext(_angle_ellipse(ELLIPSE_POINTS), delta=1e-4)
        report = identity_residual(name, ctx)
        assert report.dt == 1e-4
        assert report.residual < 1e-5 * report.scale

    @pytest.mark.parametrize("name", ["defect-second-derivative", "energy-second-derivative", "quotient-rate"])
    def test_complete_variants_on_ellipse(self, name):
        ctx = IdentityContext(_angle_ellipse(ELLIPSE_POINTS), delta=1e-4)
        report = identity_residual(name, ctx, "complete")
        assert report.residual is not None
        assert report.residual < 1e-4 * report.scale

    def test_report_to_dict(self):
        report = identity_residual("defect", IdentityContext(_angle_ellipse(64), delta=1e-4))
        assert set(report.to_dict()) == {
            "name",
            "variant",
            "kind",
            "n_points",
            "dt",
            "residual",
            "scale",
            "residual_fine",
            "order",
        }


# ---------------------------------------------------------------------------
# Refinement
# ---------------------------------------------------------------------------


class TestRefinementOrder:
    def test_log_ratio(self):
        assert refinement_order(1e-4, 2.5e-5) == pytest.approx(2.0)

    def test_precision_floor(self):
        assert refinement_order(1e-4, 0.5 * PRECISION_FLOOR) is None
        assert refinement_order(1e-9, 1e-10, scale=100.0) is None
        assert refinement_order(None, 1e-5) is None

    def test_central_differences_are_second_order(self):
        reports = run_identity_suite(
            _angle_ellipse, 64, 1e-4, names=["curvature-laplacian", "curvature-hessian"], method="central"
        )
        for report in reports:
            assert report.residual > report.residual_fine
            assert report.order > 1.7, report.name
