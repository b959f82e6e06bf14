"""Tests for the synthetic generator, independent fitters, and validation suite."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from distlogit.errors import DataError, DegenerateSpecError
from distlogit.model import Dataset, implied_coefficients, log_odds
from distlogit.oracles import (
    SyntheticSpec,
    brute_force_fit,
    generate_synthetic,
    reference_logistic,
    run_validation,
)
from distlogit.solver import FitConfig, fit_unconstrained

RNG = np.random.default_rng


class TestSyntheticGenerator:
    def test_deterministic(self):
        spec = SyntheticSpec(n=60, n_predictors=3, n_responses=3, n_dimensions=2, seed=7)
        a_data, a_truth = generate_synthetic(spec)
        b_data, b_truth = generate_synthetic(spec)
        assert_allclose(a_data.X, b_data.X)
        assert_allclose(a_data.Y, b_data.Y)
        assert_allclose(a_truth.weights, b_truth.weights)

    def test_truth_is_identified_like_a_fit(self):
        spec = SyntheticSpec(n=100, n_predictors=4, n_responses=3, n_dimensions=2, seed=8)
        data, truth = generate_synthetic(spec)
        gram = truth.weights.T @ (data.X.T @ data.X) @ truth.weights / data.n
        assert_allclose(gram, np.eye(2), atol=1e-10)
        lead = truth.weights[0]
        assert (lead >= 0).all()
        # minimum-norm locations are collinear with the discriminations
        for r in range(3):
            k = truth.discriminations[r]
            l = truth.locations[r]
            cross = l[0] * k[1] - l[1] * k[0]
            assert abs(cross) < 1e-12

    def test_balance_controls_prevalence(self):
        spec = SyntheticSpec(n=4000, n_predictors=3, n_responses=4, n_dimensions=2,
                             scale=0.8, balance=0.5, seed=9)
        data, truth = generate_synthetic(spec)
        # at the score origin each response has the requested prior odds
        mid = 1.0 / (1.0 + np.exp(-log_odds(np.zeros((1, 3)), truth)))
        assert_allclose(mid, 0.5, atol=1e-12)
        assert (abs(data.Y.mean(axis=0) - 0.5) < 0.1).all()

    def test_skewed_balance(self):
        spec = SyntheticSpec(n=4000, n_predictors=3, n_responses=3, n_dimensions=1,
                             scale=0.5, balance=0.8, seed=10)
        data, truth = generate_synthetic(spec)
        mid = 1.0 / (1.0 + np.exp(-log_odds(np.zeros((1, 3)), truth)))
        assert_allclose(mid, 0.8, atol=1e-12)
        assert (data.Y.mean(axis=0) > 0.6).all()

    def test_degenerate_spec_raises(self):
        spec = SyntheticSpec(n=4, n_predictors=2, n_responses=6, n_dimensions=1,
                             scale=0.01, balance=0.999, seed=11)
        with pytest.raises(DegenerateSpecError):
            generate_synthetic(spec)

    def test_fit_recovers_generating_structure(self):
        spec = SyntheticSpec(n=1500, n_predictors=4, n_responses=5, n_dimensions=2,
                             scale=1.0, balance=0.5, seed=12)
        data, truth = generate_synthetic(spec)
        fit = fit_unconstrained(data, FitConfig(n_dimensions=2, tol=1e-10))
        _, b_true = implied_coefficients(truth)
        _, b_hat = implied_coefficients(fit.params)
        corr = np.corrcoef(b_true.ravel(), b_hat.ravel())[0, 1]
        assert corr > 0.95

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            SyntheticSpec(n=0, n_predictors=2, n_responses=2, n_dimensions=1)
        with pytest.raises(ValueError):
            SyntheticSpec(n=10, n_predictors=2, n_responses=2, n_dimensions=3)
        with pytest.raises(ValueError):
            SyntheticSpec(n=10, n_predictors=2, n_responses=2, n_dimensions=1,
                          balance=1.0)


class TestBruteForce:
    def test_matches_mm_on_tiny_instance(self):
        spec = SyntheticSpec(n=40, n_predictors=3, n_responses=2, n_dimensions=1,
                             scale=1.0, balance=0.5, seed=20)
        data, _ = generate_synthetic(spec)
        mm = fit_unconstrained(data, FitConfig(n_dimensions=1, tol=1e-12))
        bf = brute_force_fit(data, n_restarts=10, seed=0)
        assert mm.deviance <= bf.deviance + 1e-4

    def test_restart_stability(self):
        spec = SyntheticSpec(n=35, n_predictors=2, n_responses=2, n_dimensions=1,
                             scale=1.0, balance=0.5, seed=21)
        data, _ = generate_synthetic(spec)
        a = brute_force_fit(data, n_restarts=8, seed=1)
        b = brute_force_fit(data, n_restarts=8, seed=2)
        assert abs(a.deviance - b.deviance) < 1e-3

    def test_size_guard(self):
        spec = SyntheticSpec(n=80, n_predictors=3, n_responses=2, n_dimensions=1,
                             balance=0.5, seed=22)
        data, _ = generate_synthetic(spec)
        with pytest.raises(DataError):
            brute_force_fit(data)


class TestReferenceLogistic:
    def test_two_point_separation(self):
        design = np.array([[1.0, -1.0], [1.0, 1.0]])
        fit = reference_logistic(design, np.array([0.0, 1.0]))
        assert fit.separation
        assert fit.deviance < 1e-8

    def test_intercept_only(self):
        fit = reference_logistic(np.ones((12, 1)), np.array([1.0] * 3 + [0.0] * 9))
        assert_allclose(fit.deviance,
                        -2.0 * (3 * math.log(0.25) + 9 * math.log(0.75)),
                        rtol=1e-8)
        assert not fit.separation


class TestValidationSuite:
    def test_all_checks_pass_at_default_curvature(self):
        results = run_validation(seed=0, quick=True)
        names = [r.name for r in results]
        assert names == [
            "majorization-inequality",
            "monotone-descent",
            "full-rank-equivalence",
            "tiny-instance-optimality",
            "logistic-dual-implementation",
        ]
        for r in results:
            assert r.passed, f"{r.name}: {r.detail}"

    def test_loose_curvature_is_caught(self):
        results = run_validation(seed=0, curvature=0.125, quick=True)
        failed = {r.name for r in results if not r.passed}
        assert "majorization-inequality" in failed
        assert "monotone-descent" in failed
