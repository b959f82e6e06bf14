"""Unit tests for parameter counting, information criteria, quality, and scans."""

import dataclasses
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from distlogit.errors import DataError
from distlogit.model import Dataset, DimensionAssignment, ModelParams, deviance, log_odds
from distlogit.selection import (
    ModelSummary,
    count_parameters,
    dimension_scan,
    fit_univariate_logistic,
    information_criteria,
    predictor_drop_scan,
    quality_of_representation,
)
from distlogit.solver import FitConfig, FitResult, fit_constrained, fit_unconstrained

RNG = np.random.default_rng


def make_dataset(seed, n=80, p=3, r=3, m=2, scale=1.0, loc_scale=0.3,
                 weights=None):
    rng = RNG(seed)
    x = rng.normal(size=(n, p))
    x = x - x.mean(axis=0)
    true = ModelParams(
        weights if weights is not None else rng.normal(size=(p, m)),
        rng.normal(size=(r, m), scale=scale),
        rng.normal(size=(r, m), scale=loc_scale),
    )
    probs = 1.0 / (1.0 + np.exp(-log_odds(x, true)))
    y = (rng.uniform(size=(n, r)) < probs).astype(float)
    counts = y.sum(axis=0)
    assert ((counts > 0) & (counts < n)).all()
    return Dataset.from_arrays(x, y)


class TestCountParameters:
    def test_nine_predictors_eleven_responses(self):
        # weights + category points net of scale/rotation/location ties
        expected = {1: 30, 2: 48, 3: 65, 4: 81, 5: 96, 6: 110, 7: 123}
        for m, k in expected.items():
            assert count_parameters(9, 11, m) == k

    def test_drop_one_predictor_count(self):
        assert count_parameters(8, 11, 2) == 46

    def test_small_unconstrained(self):
        assert count_parameters(8, 5, 2) == 28

    def test_constrained_counts(self):
        one_dim = DimensionAssignment(np.ones((5, 1), dtype=int))
        assert count_parameters(8, 5, 1, one_dim) == 17

        split = DimensionAssignment(
            np.array([[1, 0], [1, 0], [0, 1], [0, 1], [0, 1]])
        )
        assert count_parameters(8, 5, 2, split) == 24

        with_double = DimensionAssignment(
            np.array([[1, 0], [1, 0], [0, 1], [0, 1], [1, 1]])
        )
        assert count_parameters(8, 5, 2, with_double) == 25

    def test_identity_assignment_equals_separate_logistics(self):
        # one dimension per response costs the same as R univariate fits
        p, r = 6, 4
        ident = DimensionAssignment.identity(r)
        assert count_parameters(p, r, r, ident) == r * (p + 1)

    def test_shape_mismatch_rejected(self):
        pattern = DimensionAssignment(np.ones((3, 1), dtype=int))
        with pytest.raises(ValueError):
            count_parameters(4, 5, 1, pattern)
        with pytest.raises(ValueError):
            count_parameters(4, 3, 2, pattern)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            count_parameters(0, 3, 1)


class TestInformationCriteria:
    def test_large_survey_row(self):
        aic, bic = information_criteria(18311.0, 30, 1885)
        assert aic == 18371.0
        assert_allclose(bic, 18311.0 + 30 * math.log(1885))
        assert round(bic, 1) == 18537.3

    def test_zero_model(self):
        assert information_criteria(0.0, 0, 10) == (0.0, 0.0)

    def test_theory_row(self):
        aic, bic = information_criteria(4553.34, 17, 786)
        assert_allclose(aic, 4587.34)
        assert_allclose(bic, 4553.34 + 17 * math.log(786))
        assert abs(bic - 4666.7) < 0.05

    def test_summary_build_invariants(self):
        summary = ModelSummary.build("M=2", 100.0, 7, 50)
        assert summary.aic == 100.0 + 14.0
        assert_allclose(summary.bic, 100.0 + 7 * math.log(50))
        assert summary.n == 50

    def test_rejects_empty_sample(self):
        with pytest.raises(ValueError):
            information_criteria(1.0, 1, 0)


class TestUnivariateLogistic:
    def test_intercept_only_balanced(self):
        design = np.ones((10, 1))
        y = np.array([1.0] * 5 + [0.0] * 5)
        fit = fit_univariate_logistic(design, y)
        assert_allclose(fit.deviance, 20.0 * math.log(2.0), rtol=1e-12)
        assert fit.converged and not fit.separation

    def test_intercept_only_skewed(self):
        design = np.ones((10, 1))
        y = np.array([1.0] * 8 + [0.0] * 2)
        fit = fit_univariate_logistic(design, y)
        expected = -2.0 * (8.0 * math.log(0.8) + 2.0 * math.log(0.2))
        assert_allclose(fit.deviance, expected, rtol=1e-10)
        assert_allclose(fit.coefficients, [math.log(4.0)], rtol=1e-8)

    def test_agrees_with_quasi_newton_route(self):
        from distlogit.oracles import reference_logistic

        rng = RNG(60)
        for _ in range(20):
            n = 70
            x = rng.normal(size=(n, 2))
            beta = rng.normal(size=2)
            p = 1.0 / (1.0 + np.exp(-(x @ beta)))
            y = (rng.uniform(size=n) < p).astype(float)
            if y.sum() in (0, n):
                continue
            design = np.column_stack([np.ones(n), x])
            a = fit_univariate_logistic(design, y)
            b = reference_logistic(design, y)
            if a.separation or b.separation:
                continue
            assert abs(a.deviance - b.deviance) < 1e-6

    def test_two_point_separation(self):
        design = np.array([[1.0, -1.0], [1.0, 1.0]])
        fit = fit_univariate_logistic(design, np.array([0.0, 1.0]))
        assert fit.separation
        assert fit.deviance < 1e-8

    def test_misaligned_shapes(self):
        with pytest.raises(ValueError):
            fit_univariate_logistic(np.ones((4, 1)), np.zeros(5))


class TestQualityOfRepresentation:
    def test_identity_assignment_full_quality(self):
        ds = make_dataset(70, n=200, p=4, r=3)
        fit = fit_constrained(
            ds,
            FitConfig(n_dimensions=3, assignment=DimensionAssignment.identity(3),
                      tol=1e-12),
        )
        report = quality_of_representation(ds, fit)
        assert report.undefined == ()
        assert_allclose(report.quality, 1.0, atol=1e-3)

    def test_zero_discrimination_is_non_contributing(self):
        ds = make_dataset(71, r=2)
        fit = fit_unconstrained(ds, FitConfig(n_dimensions=1))
        params = fit.params
        disc = params.discriminations.copy()
        disc[1] = 0.0
        loc = params.locations.copy()
        loc[1] = 0.0
        hollowed = ModelParams(params.weights, disc, loc)
        stub = dataclasses.replace(fit, params=hollowed,
                                   deviance=deviance(ds, hollowed))
        report = quality_of_representation(ds, stub)
        # coincident category points predict one half everywhere
        assert_allclose(report.model_deviance[1], 2.0 * ds.n * math.log(2.0))
        assert report.quality[1] <= 0.0

    def test_uninformative_predictors_undefined(self):
        y = np.array([0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0])
        x = np.array([1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0])[:, None]
        ds = Dataset.from_arrays(x, y[:, None])
        fit = fit_unconstrained(ds, FitConfig(n_dimensions=1))
        report = quality_of_representation(ds, fit)
        assert report.undefined == (0,)
        assert math.isnan(report.quality[0])

    def test_rotation_invariance(self):
        ds = make_dataset(72, r=4)
        fit = fit_unconstrained(ds, FitConfig(n_dimensions=2))
        base = quality_of_representation(ds, fit)

        angle = 0.7
        rot = np.array([[math.cos(angle), -math.sin(angle)],
                        [math.sin(angle), math.cos(angle)]])
        params = fit.params
        rotated = ModelParams(params.weights @ rot,
                              params.discriminations @ rot,
                              params.locations @ rot)
        spun = dataclasses.replace(fit, params=rotated)
        other = quality_of_representation(ds, spun)
        assert_allclose(other.quality, base.quality, atol=1e-10)

    def test_bounds_on_healthy_fit(self):
        ds = make_dataset(73, n=150, r=3, scale=1.5)
        fit = fit_unconstrained(ds, FitConfig(n_dimensions=2))
        report = quality_of_representation(ds, fit)
        assert (report.intercept_deviance >= report.logistic_deviance - 1e-8).all()
        assert np.isfinite(report.quality).all()
        assert (report.quality <= 1.0 + 1e-6).all()


class TestDimensionScan:
    def test_labels_and_arithmetic(self):
        ds = make_dataset(80, n=120, p=4, r=4)
        scan = dimension_scan(ds, [1, 2, 3], FitConfig(n_dimensions=1))
        assert [row.label for row in scan.rows] == ["M=1", "M=2", "M=3"]
        for row in scan.rows:
            assert row.error is None
            s = row.summary
            assert s.aic == s.deviance + 2 * s.n_params
            assert_allclose(s.bic, s.deviance + math.log(ds.n) * s.n_params)

    def test_deviance_non_increasing(self):
        ds = make_dataset(81, n=120, p=4, r=4)
        scan = dimension_scan(ds, [1, 2, 3, 4], FitConfig(n_dimensions=1))
        devs = [row.summary.deviance for row in scan.rows]
        for lo, hi in zip(devs[1:], devs[:-1]):
            assert lo <= hi + 1e-3

    def test_deterministic(self):
        ds = make_dataset(82)
        config = FitConfig(n_dimensions=1, restarts=2, seed=9)
        assert dimension_scan(ds, [1, 2], config) == dimension_scan(ds, [1, 2], config)

    def test_error_rows_do_not_abort(self):
        ds = make_dataset(83, p=3, r=3)
        scan = dimension_scan(ds, [1, 5], FitConfig(n_dimensions=1))
        good, bad = scan.rows
        assert good.error is None
        assert bad.summary is None
        assert not bad.converged
        assert "dimension" in bad.error

    def test_best_labels(self):
        ds = make_dataset(84, n=150, p=4, r=4, m=1, scale=1.5)
        scan = dimension_scan(ds, [1, 2, 3], FitConfig(n_dimensions=1))
        rows = {row.label: row.summary for row in scan.rows}
        assert scan.best_aic_label == min(rows, key=lambda k: rows[k].aic)
        assert scan.best_bic_label == min(rows, key=lambda k: rows[k].bic)

    def test_rejects_assignment_config(self):
        ds = make_dataset(85)
        config = FitConfig(n_dimensions=1,
                           assignment=DimensionAssignment(np.ones((3, 1), dtype=int)))
        with pytest.raises(DataError):
            dimension_scan(ds, [1], config)


class TestPredictorDropScan:
    def test_row_per_predictor(self):
        ds = make_dataset(90, p=4, r=3)
        scan = predictor_drop_scan(ds, FitConfig(n_dimensions=2))
        assert [row.label for row in scan.rows] == list(ds.predictor_names)
        for row in scan.rows:
            assert row.summary.n_params == count_parameters(3, 3, 2)

    def test_strong_predictor_costs_deviance(self):
        # only the first predictor carries signal
        weights = np.zeros((3, 1))
        weights[0, 0] = 1.0
        ds = make_dataset(91, n=300, p=3, r=3, m=1, scale=2.0, weights=weights)
        full = fit_unconstrained(ds, FitConfig(n_dimensions=1))
        scan = predictor_drop_scan(ds, FitConfig(n_dimensions=1))
        increases = [row.summary.deviance - full.deviance for row in scan.rows]
        assert increases[0] > 10.0
        assert increases[0] > max(increases[1:])

    def test_matches_direct_rebuild(self):
        rng = RNG(92)
        x = rng.normal(size=(100, 3)) * np.array([1.0, 3.0, 0.5])
        y = (rng.uniform(size=(100, 2)) < 0.5).astype(float)
        full = Dataset.from_arrays(x, y, standardize=True)
        scan = predictor_drop_scan(full, FitConfig(n_dimensions=1))
        direct = Dataset.from_arrays(x[:, 1:], y, standardize=True)
        refit = fit_unconstrained(direct, FitConfig(n_dimensions=1))
        assert_allclose(scan.rows[0].summary.deviance, refit.deviance, rtol=1e-9)

    def test_single_predictor_rejected(self):
        ds = make_dataset(93, p=1, r=2, m=1)
        with pytest.raises(DataError):
            predictor_drop_scan(ds, FitConfig(n_dimensions=1))

    def test_deterministic(self):
        ds = make_dataset(94, p=3)
        config = FitConfig(n_dimensions=2)
        assert predictor_drop_scan(ds, config) == predictor_drop_scan(ds, config)
