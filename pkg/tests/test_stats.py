"""Kernel tests: exact values from hand arithmetic, properties, and oracles."""

from __future__ import annotations

import numpy as np
import pytest

from micromap.stats import (
    LowessParams,
    LQInput,
    StatsError,
    WageStatRow,
    ci_from_prse,
    location_quotient,
    lowess_fit,
    lowess_residuals,
    over_year_pct_change,
    pca_scores,
)

from .oracles import lowess_oracle, pca_scores_oracle


class TestLocationQuotient:
    def test_equal_concentrations_give_one(self):
        assert location_quotient(LQInput(10, 100, 1000, 10000)) == pytest.approx(1.0)

    def test_hand_arithmetic(self):
        # (50/1000) / (200/10000) = 0.05 / 0.02
        assert location_quotient(LQInput(50, 1000, 200, 10000)) == pytest.approx(2.5, abs=1e-12)

    def test_area_equal_to_nation_gives_one(self):
        assert location_quotient(LQInput(321, 4567, 321, 4567)) == pytest.approx(1.0)

    def test_zero_national_category_is_undefined(self):
        with pytest.raises(StatsError, match="national concentration zero"):
            location_quotient(LQInput(5, 100, 0, 10000))

    def test_scale_invariance(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            total_area = rng.uniform(10, 1e6)
            cat_area = rng.uniform(0, total_area)
            total_nat = rng.uniform(10, 1e8)
            cat_nat = rng.uniform(1, total_nat)
            scale = rng.uniform(0.01, 1000)
            base = location_quotient(LQInput(cat_area, total_area, cat_nat, total_nat))
            scaled = location_quotient(
                LQInput(cat_area * scale, total_area * scale, cat_nat * scale, total_nat * scale)
            )
            assert scaled == pytest.approx(base, rel=1e-12)

    def test_category_above_total_rejected(self):
        with pytest.raises(StatsError):
            LQInput(200, 100, 1, 10)


class TestOverYearChange:
    def test_constant_series_is_zero(self):
        out = over_year_pct_change([7.0] * 10, lag=4)
        assert np.isnan(out[:4]).all()
        assert out[4:] == pytest.approx([0.0] * 6)

    def test_hand_arithmetic(self):
        out = over_year_pct_change([100, 105, 102, 108, 110], lag=4)
        assert out[4] == pytest.approx(10.0)

    def test_zero_base_marks_entry_missing(self):
        out = over_year_pct_change([0.0, 5.0, 10.0, 20.0], lag=2)
        assert np.isnan(out[2])
        assert out[3] == pytest.approx(300.0)

    def test_scaled_series_unchanged(self):
        rng = np.random.default_rng(11)
        series = rng.uniform(1, 100, size=16)
        base = over_year_pct_change(series, lag=4)
        scaled = over_year_pct_change(series * 3.7, lag=4)
        np.testing.assert_allclose(scaled[4:], base[4:], rtol=1e-12)

    def test_length_must_exceed_lag(self):
        with pytest.raises(StatsError):
            over_year_pct_change([1, 2, 3], lag=3)


class TestCiFromPrse:
    def test_zero_prse_degenerates(self):
        assert ci_from_prse(42.0, 0.0, 0.90) == (42.0, 42.0)

    def test_table_values(self):
        lo, hi = ci_from_prse(83.55, 0.8, 0.90)
        assert lo == pytest.approx(82.45, abs=0.01)
        assert hi == pytest.approx(84.65, abs=0.01)
        lo, hi = ci_from_prse(53.19, 1.5, 0.90)
        assert lo == pytest.approx(51.88, abs=0.01)
        assert hi == pytest.approx(54.50, abs=0.01)

    def test_width_monotone_in_prse_and_level(self):
        widths_prse = []
        for prse in (0.5, 1.0, 2.0, 4.0):
            lo, hi = ci_from_prse(50.0, prse, 0.90)
            widths_prse.append(hi - lo)
        assert widths_prse == sorted(widths_prse)
        assert len(set(widths_prse)) == len(widths_prse)
        widths_level = []
        for level in (0.5, 0.8, 0.9, 0.99):
            lo, hi = ci_from_prse(50.0, 1.0, level)
            widths_level.append(hi - lo)
        assert widths_level == sorted(widths_level)
        assert len(set(widths_level)) == len(widths_level)

    def test_negative_prse_rejected(self):
        with pytest.raises(StatsError):
            ci_from_prse(50.0, -1.0, 0.90)


TOY_X = np.array([0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
TOY_Y = np.array([1.2, 0.7, 2.9, 2.1, 4.8, 3.9, 6.1])


class TestLowess:
    def test_exact_line_reproduced(self):
        x = np.linspace(0, 10, 25)
        y = 2.0 * x + 1.0
        for span in (0.3, 2.0 / 3.0, 1.0):
            for iters in (0, 3):
                fit = lowess_fit(x, y, LowessParams(span=span, robust_iters=iters))
                np.testing.assert_allclose(fit, y, atol=1e-9)

    def test_toy_set_matches_oracle(self):
        fit = lowess_fit(TOY_X, TOY_Y, LowessParams(span=2.0 / 3.0, robust_iters=0))
        expected = lowess_oracle(TOY_X, TOY_Y, span=2.0 / 3.0, robust_iters=0)
        np.testing.assert_allclose(fit, expected, atol=1e-8)

    def test_span_sensitivity(self):
        wide = lowess_fit(TOY_X, TOY_Y, LowessParams(span=2.0 / 3.0, robust_iters=0))
        narrow = lowess_fit(TOY_X, TOY_Y, LowessParams(span=0.3, robust_iters=0))
        assert np.max(np.abs(wide - narrow)) > 1e-6

    def test_shift_equivariance(self):
        rng = np.random.default_rng(3)
        x = np.sort(rng.uniform(0, 10, 40))
        y = np.sin(x) + rng.normal(0, 0.2, 40)
        params = LowessParams(span=0.5, robust_iters=3)
        base = lowess_fit(x, y, params)
        shifted = lowess_fit(x, y + 11.5, params)
        np.testing.assert_allclose(shifted, base + 11.5, atol=1e-9)

    def test_scale_equivariance(self):
        rng = np.random.default_rng(4)
        x = np.sort(rng.uniform(0, 10, 40))
        y = np.cos(x) + rng.normal(0, 0.3, 40)
        params = LowessParams(span=0.4, robust_iters=2)
        base = lowess_fit(x, y, params)
        scaled = lowess_fit(x, 250.0 * y, params)
        np.testing.assert_allclose(scaled, 250.0 * base, rtol=1e-9, atol=1e-9)

    def test_ties_in_x_allowed(self):
        x = np.array([0.0, 1.0, 1.0, 2.0, 3.0, 4.0])
        y = np.array([0.0, 1.1, 0.9, 2.0, 3.2, 4.1])
        fit = lowess_fit(x, y, LowessParams(span=0.8, robust_iters=1))
        expected = lowess_oracle(x, y, span=0.8, robust_iters=1)
        np.testing.assert_allclose(fit, expected, atol=1e-8)

    def test_degenerate_abscissa_rejected(self):
        with pytest.raises(StatsError, match="degenerate abscissa"):
            lowess_fit([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])

    def test_too_few_points_rejected(self):
        with pytest.raises(StatsError):
            lowess_fit([1.0, 2.0], [1.0, 2.0])

    def test_residuals_of_line_are_zero(self):
        x = np.linspace(0, 5, 12)
        res = lowess_residuals(x, 3.0 * x - 2.0)
        np.testing.assert_allclose(res, 0.0, atol=1e-9)

    def test_residuals_match_oracle(self):
        res = lowess_residuals(TOY_X, TOY_Y, LowessParams(span=2.0 / 3.0, robust_iters=0))
        expected = TOY_Y - lowess_oracle(TOY_X, TOY_Y, span=2.0 / 3.0, robust_iters=0)
        np.testing.assert_allclose(res, expected, atol=1e-8)

    def test_residuals_shift_invariant(self):
        rng = np.random.default_rng(5)
        x = np.sort(rng.uniform(0, 8, 30))
        y = rng.normal(0, 1, 30)
        params = LowessParams(span=0.6, robust_iters=0)
        np.testing.assert_allclose(
            lowess_residuals(x, y + 99.0, params), lowess_residuals(x, y, params), atol=1e-9
        )

    def test_tricube_window_boundary_weight_vanishes(self):
        # farthest selected neighbor contributes nothing: perturbing its y
        # leaves the fit at the query point unchanged when span covers all
        x = np.array([0.0, 1.0, 2.0, 3.0, 10.0])
        y = np.array([0.0, 1.0, 2.0, 3.0, 50.0])
        fit_a = lowess_fit(x, y, LowessParams(span=1.0, robust_iters=0))
        y2 = y.copy()
        y2[4] = -50.0
        fit_b = lowess_fit(x, y2, LowessParams(span=1.0, robust_iters=0))
        assert fit_a[0] == pytest.approx(fit_b[0], abs=1e-12)


class TestPcaScores:
    def test_single_column_is_standardized_column(self):
        rng = np.random.default_rng(6)
        col = rng.uniform(0, 50, 12)
        scores = pca_scores(col.reshape(-1, 1), component=1)
        z = (col - col.mean()) / col.std(ddof=1)
        np.testing.assert_allclose(scores, z, atol=1e-12)

    def test_perfectly_correlated_columns_second_component_flat(self):
        rng = np.random.default_rng(8)
        a = rng.normal(0, 1, 20)
        X = np.column_stack([a, 3.0 * a + 2.0])
        scores = pca_scores(X, component=2)
        assert float(np.var(scores, ddof=1)) < 1e-9

    def test_matches_eigh_oracle(self):
        rng = np.random.default_rng(9)
        X = rng.normal(0, 1, (10, 3)) @ np.diag([3.0, 1.0, 0.5]) + rng.uniform(-2, 2, 3)
        for component in (1, 2, 3):
            scores = pca_scores(X, component)
            expected = pca_scores_oracle(X, component)
            np.testing.assert_allclose(scores, expected, atol=1e-8)

    def test_components_orthogonal(self):
        rng = np.random.default_rng(10)
        X = rng.normal(0, 1, (20, 4))
        s1 = pca_scores(X, 1)
        s2 = pca_scores(X, 2)
        s3 = pca_scores(X, 3)
        assert abs(np.dot(s1, s2)) < 1e-8
        assert abs(np.dot(s1, s3)) < 1e-8
        assert abs(np.dot(s2, s3)) < 1e-8

    def test_zero_variance_column_named(self):
        X = np.column_stack([np.ones(5), np.arange(5.0)])
        with pytest.raises(StatsError, match="zero-variance column flat"):
            pca_scores(X, 1, column_names=["flat", "ramp"])


class TestWageStatRow:
    def test_ordered_percentiles_accepted(self):
        row = WageStatRow(mean=53.19, prse=1.5, p10=29.58, p25=37.73, p50=49.39, p75=64.57, p90=81.29)
        assert row.percentiles() == (29.58, 37.73, 49.39, 64.57, 81.29)

    def test_disordered_percentiles_rejected(self):
        with pytest.raises(StatsError):
            WageStatRow(mean=10.0, prse=1.0, p10=5.0, p25=4.0, p50=6.0, p75=7.0, p90=8.0)

    def test_negative_prse_rejected(self):
        with pytest.raises(StatsError):
            WageStatRow(mean=10.0, prse=-0.5, p10=1, p25=2, p50=3, p75=4, p90=5)
