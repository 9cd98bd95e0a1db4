"""test_shrinker.py - Unit tests for graphs over the shrinker and the rate checks.

Covers:
    - ReferenceShrinker: closed-form Gaussian area, angle grid validation
    - graph_decompose on the shrinker and on a mode-2 perturbation
    - Curves that are not star-shaped about their centroid are refused
    - The Gaussian area of a graph and its three-way split
    - fit_rate on exponential and non-exponential series, and its noise floor
    - rate_lemma_check and dichotomy_check branches
    - The linearised spectrum 1 - k^2 / 2 and the predicted decay rates
"""

import logging
import math

import numpy as np
import pytest

from shrinklab.errors import CheckFailed, FitDegenerate, GraphDecompositionFailed, InsufficientData, InvalidArgument
from shrinklab.geometry import SHRINKER_RADIUS, ClosedCurve, circle, enclosed_area, fourier_curve
from shrinklab.shrinker import (
    ReferenceShrinker,
    dichotomy_check,
    fit_rate,
    graph_decompose,
    graph_gaussian_area,
    hoelder_seminorm,
    initial_distance,
    predicted_rate,
    q_value,
    rate_lemma_check,
    rate_lemma_terms,
    reconstruct,
    stability_spectrum,
)


@pytest.fixture(scope="module")
def mode_two():
    """rho = sqrt(2) + 0.1 cos(2 theta)."""
    return fourier_curve([(2, 0.1)], 128)


# ---------------------------------------------------------------------------
# Shrinker and graphs
# ---------------------------------------------------------------------------


class TestReferenceShrinker:
    def test_omega(self):
        assert ReferenceShrinker().omega == pytest.approx(2.0 * math.pi * SHRINKER_RADIUS * math.exp(-0.5))
        assert ReferenceShrinker().omega == pytest.approx(5.38945, abs=1e-4)

    def test_angle_grid(self):
        shrinker = ReferenceShrinker(n_angles=64)
        assert shrinker.theta.shape == (64,)
        assert shrinker.curve.n_points == 64
        with pytest.raises(InvalidArgument, match="n_angles"):
            ReferenceShrinker(n_angles=8)

    def test_q_value_vanishes_on_shrinker(self):
        assert q_value(circle(SHRINKER_RADIUS, 128)) == pytest.approx(0.0, abs=1e-12)

    def test_initial_distance(self):
        assert initial_distance(circle(2.0, 256)) == pytest.approx(2.0 - SHRINKER_RADIUS, abs=1e-12)


class TestGraphDecompose:
    def test_shrinker_has_zero_graph(self):
        graph = graph_decompose(circle(SHRINKER_RADIUS, 64))
        assert graph.c0 < 1e-12
        assert graph.c2_alpha < 1e-9
        assert graph.center == pytest.approx([0.0, 0.0], abs=1e-12)

    def test_mode_two_norms(self, mode_two):
        """v = -0.1 cos(2 theta): |v| = 0.1, |v'| = 0.2, |v''| = 0.4."""
        graph = graph_decompose(mode_two)
        assert graph.v == pytest.approx(-0.1 * np.cos(2.0 * graph.theta), abs=1e-6)
        assert graph.c0 == pytest.approx(0.1, abs=1e-6)
        assert graph.c1 == pytest.approx(0.2, abs=1e-5)
        assert graph.c2 == pytest.approx(0.4, abs=1e-4)
        assert graph.c2_alpha > graph.c0 + graph.c1 + graph.c2
        assert set(graph.norms()) == {"c0", "c1", "c2", "c2_alpha"}

    def test_translation_is_removed(self, mode_two):
        moved = graph_decompose(mode_two.translated((0.3, -0.2)))
        assert moved.center == pytest.approx([0.3, -0.2], abs=1e-9)
        assert moved.c0 == pytest.approx(0.1, abs=1e-6)

    def test_without_recentering(self, mode_two):
        graph = graph_decompose(mode_two.translated((0.05, 0.0)), recenter=False)
        assert graph.c0 > 0.1

    def test_not_star_shaped(self):
        """A limacon with an inner loop cannot be a graph over a circle."""
        theta = 2.0 * np.pi * np.arange(64) / 64
        r = 0.5 + np.cos(theta)
        curve = ClosedCurve(np.column_stack([r * np.cos(theta), r * np.sin(theta)]))
        with pytest.raises(GraphDecompositionFailed):
            graph_decompose(curve)

    def test_reconstruct(self, mode_two):
        graph = graph_decompose(mode_two)
        rebuilt = reconstruct(graph)
        assert rebuilt.n_points == 256
        assert enclosed_area(rebuilt) == pytest.approx(enclosed_area(mode_two), rel=1e-3)
        assert reconstruct(graph, n=64).n_points == 64

    def test_hoelder_seminorm_of_constant(self):
        theta = ReferenceShrinker(n_angles=32).theta
        assert hoelder_seminorm(np.full(32, 3.0), theta) == 0.0


class TestGaussianAreaOfGraph:
    def test_matches_curve_quadrature(self, mode_two):
        graph = graph_decompose(mode_two)
        assert graph_gaussian_area(graph) - ReferenceShrinker().omega == pytest.approx(q_value(mode_two), abs=1e-7)

    def test_split_adds_up(self, mode_two):
        graph = graph_decompose(mode_two)
        terms = rate_lemma_terms(graph)
        expected = graph_gaussian_area(graph) - ReferenceShrinker().omega
        assert terms.total == pytest.approx(expected, abs=1e-9)
        assert terms.extras["max_jacobian"] > 1.0


# ---------------------------------------------------------------------------
# Rates
# ---------------------------------------------------------------------------


class TestFitRate:
    def test_exponential(self):
        t = np.linspace(0.0, 4.0, 41)
        fit = fit_rate(t, 3.0 * np.exp(-1.5 * t))
        assert fit.m == pytest.approx(1.5, rel=1e-10)
        assert fit.C == pytest.approx(3.0, rel=1e-10)
        assert fit.exponential is True
        assert fit.n_samples == 41

    def test_window(self):
        t = np.linspace(0.0, 4.0, 41)
        fit = fit_rate(t, np.exp(-t), window=(0.95, 3.05))
        assert fit.window == (0.95, 3.05)
        assert fit.n_samples == 21
        assert fit.to_dict()["window"] == [0.95, 3.05]

    def test_floor_ends_window(self):
        """Samples at the noise floor would flatten the slope; the window stops before them."""
        t = np.linspace(0.0, 20.0, 201)
        y = 3.0 * np.exp(-1.5 * t) + 1e-9
        assert fit_rate(t, y).m < 1.3
        fit = fit_rate(t, y, floor=1e-7)
        assert fit.m == pytest.approx(1.5, rel=1e-2)
        assert fit.window[1] == pytest.approx(t[y < 1e-7][0])
        assert fit.n_samples == int(np.sum(y >= 1e-7))

    def test_non_exponential(self):
        t = np.linspace(0.0, 4.0, 41)
        fit = fit_rate(t, np.exp(-(t**2)))
        assert fit.exponential is False
        assert fit.convexity_defect > 0.1

    def test_drops_non_positive(self, caplog):
        t = np.linspace(0.0, 1.0, 12)
        y = np.exp(-t)
        y[3] = 0.0
        with caplog.at_level(logging.WARNING, logger="shrinklab.shrinker"):
            fit = fit_rate(t, y)
        assert fit.n_samples == 11
        assert "dropped 1" in caplog.text

    def test_too_few_samples(self):
        with pytest.raises(InsufficientData, match=">= 8"):
            fit_rate(np.arange(5.0), np.ones(5))

    def test_single_time(self):
        with pytest.raises(FitDegenerate):
            fit_rate(np.ones(8), np.linspace(1.0, 2.0, 8))

    def test_shape_mismatch(self):
        with pytest.raises(InvalidArgument, match="differ in shape"):
            fit_rate(np.arange(10.0), np.ones(9))


class TestRateLemmaCheck:
    def test_bounded_ratio(self):
        t = np.linspace(0.0, 5.0, 51)
        norms = np.exp(-t)
        result = rate_lemma_check(t, 0.5 * norms**2, norms)
        assert result.passed is True
        assert result.details["C_tilde"] == pytest.approx(0.5)

    def test_growing_ratio_fails(self):
        t = np.linspace(0.0, 5.0, 51)
        norms = np.exp(-t)
        assert rate_lemma_check(t, norms * (1.0 + t), norms).passed is False

    def test_vanishing_norm_with_positive_q(self):
        with pytest.raises(CheckFailed, match="graph norm vanishes"):
            rate_lemma_check([0.0, 1.0], [1e-3, 1e-3], [0.1, 0.0])

    def test_vacuous_on_shrinker(self):
        result = rate_lemma_check([0.0, 1.0], [0.0, 0.0], [0.0, 0.0])
        assert result.passed is True
        assert result.details["vacuous"] is True


class TestDichotomy:
    def test_shrinker_branch(self):
        assert dichotomy_check([0.0, 1.0], [0.0, 0.0], None).details["branch"] == "shrinker"

    def test_converging_branch(self):
        t = np.linspace(0.0, 5.0, 51)
        norms = 0.1 * np.exp(-t)
        fit = fit_rate(t, norms)
        result = dichotomy_check(t, norms, fit)
        assert result.passed is True
        assert result.details["m_prime"] == pytest.approx(1.2)
        assert result.details["C_prime"] == pytest.approx(0.1, rel=1e-6)

    def test_without_fit(self):
        assert dichotomy_check([0.0, 1.0], [0.1, 0.05], None).passed is False


class TestLinearisation:
    def test_spectrum(self):
        """1 - k^2 / 2: mode 0 once, every other mode twice."""
        values = stability_spectrum(m=7)
        expected = [1.0, 0.5, 0.5, -1.0, -1.0, -3.5, -3.5]
        assert values == pytest.approx(expected, abs=5e-3)

    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_predicted_rate_matches_spectrum(self, k):
        values = stability_spectrum()
        assert predicted_rate(k) == pytest.approx(-values[2 * k - 1], rel=1e-2)

    def test_predicted_rate(self):
        assert predicted_rate(2) == 1.0
        assert predicted_rate(3) == 3.5
