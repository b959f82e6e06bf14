"""Tests for the scikit-learn style estimator wrapper."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import Pipeline

from distlogit.errors import DataError
from distlogit.estimator import LogisticDistanceClassifier
from distlogit.model import Dataset, ModelParams, log_odds
from distlogit.solver import FitConfig, fit_unconstrained

RNG = np.random.default_rng


def raw_instance(seed=0, n=120, p=4, r=3, m=2):
    rng = RNG(seed)
    x = rng.normal(size=(n, p)) * np.array([1.0, 5.0, 0.3, 1.0])[:p]
    true = ModelParams(rng.normal(size=(p, m)),
                       rng.normal(size=(r, m)),
                       rng.normal(size=(r, m), scale=0.3))
    xc = x - x.mean(axis=0)
    y = (rng.uniform(size=(n, r)) < 1 / (1 + np.exp(-log_odds(xc, true)))).astype(int)
    assert ((y.sum(axis=0) > 0) & (y.sum(axis=0) < n)).all()
    return x, y


class TestFit:
    def test_matches_functional_api(self):
        x, y = raw_instance()
        clf = LogisticDistanceClassifier(n_dimensions=2).fit(x, y)
        ds = Dataset.from_arrays(x, y.astype(float), standardize=True)
        direct = fit_unconstrained(ds, FitConfig(n_dimensions=2))
        assert clf.deviance_ == direct.deviance
        assert_allclose(clf.weights_, direct.params.weights)
        assert clf.n_iter_ == direct.iterations
        assert clf.converged_ == direct.converged

    def test_fitted_attribute_shapes(self):
        x, y = raw_instance()
        clf = LogisticDistanceClassifier(n_dimensions=2).fit(x, y)
        assert clf.weights_.shape == (4, 2)
        assert clf.discriminations_.shape == (3, 2)
        assert clf.locations_.shape == (3, 2)
        assert clf.category_points_.shape == (6, 2)
        assert clf.n_features_in_ == 4
        assert clf.n_outputs_ == 3
        assert len(clf.classes_) == 3
        assert clf.trace_[-1] == clf.deviance_

    def test_standardize_off(self):
        x, y = raw_instance()
        clf = LogisticDistanceClassifier(standardize=False).fit(x, y)
        assert_allclose(clf.scaling_factors_, 1.0)
        assert_allclose(clf.centering_offsets_, x.mean(axis=0))

    def test_assignment_as_nested_list(self):
        x, y = raw_instance()
        clf = LogisticDistanceClassifier(
            n_dimensions=2, assignment=[[1, 0], [1, 0], [0, 1]]).fit(x, y)
        assert clf.discriminations_[0, 1] == 0.0
        assert clf.discriminations_[2, 0] == 0.0

    def test_non_binary_response_rejected(self):
        x, y = raw_instance()
        with pytest.raises(DataError, match="0/1"):
            LogisticDistanceClassifier().fit(x, y + 1)

    def test_too_many_dimensions_rejected(self):
        x, y = raw_instance()
        with pytest.raises(DataError, match="dimension"):
            LogisticDistanceClassifier(n_dimensions=4).fit(x, y)


class TestPredict:
    def test_score_transform_shapes(self):
        x, y = raw_instance(seed=1)
        clf = LogisticDistanceClassifier(n_dimensions=2).fit(x, y)
        u = clf.transform(x)
        assert u.shape == (len(x), 2)
        # fitted scores are identified to unit covariance
        assert_allclose(u.T @ u / len(x), np.eye(2), atol=1e-6)

    def test_proba_pairs_sum_to_one(self):
        x, y = raw_instance(seed=2)
        clf = LogisticDistanceClassifier(n_dimensions=2).fit(x, y)
        probas = clf.predict_proba(x)
        assert isinstance(probas, list) and len(probas) == 3
        for block in probas:
            assert block.shape == (len(x), 2)
            assert_allclose(block.sum(axis=1), 1.0)

    def test_predict_is_probability_argmax(self):
        x, y = raw_instance(seed=3)
        clf = LogisticDistanceClassifier(n_dimensions=2, tol=1e-6).fit(x, y)
        labels = clf.predict(x)
        for r, block in enumerate(clf.predict_proba(x)):
            assert_allclose(labels[:, r], block.argmax(axis=1))

    def test_decision_sign_matches_predict(self):
        x, y = raw_instance(seed=4)
        clf = LogisticDistanceClassifier(n_dimensions=2).fit(x, y)
        assert_allclose(clf.predict(x), clf.decision_function(x) > 0)

    def test_single_output_shapes(self):
        x, y = raw_instance(seed=5)
        clf = LogisticDistanceClassifier(n_dimensions=1).fit(x, y[:, 0])
        assert clf.predict(x).shape == (len(x),)
        assert clf.predict_proba(x).shape == (len(x), 2)
        assert clf.decision_function(x).shape == (len(x),)
        assert_allclose(clf.classes_, [0, 1])

    def test_feature_count_checked(self):
        x, y = raw_instance(seed=6)
        clf = LogisticDistanceClassifier().fit(x, y)
        with pytest.raises(ValueError, match="features"):
            clf.predict(x[:, :2])

    def test_unfitted_raises(self):
        x, y = raw_instance(seed=7)
        with pytest.raises(NotFittedError):
            LogisticDistanceClassifier().predict(x)

    def test_score_is_subset_accuracy(self):
        x, y = raw_instance(seed=8)
        clf = LogisticDistanceClassifier(n_dimensions=2).fit(x, y)
        manual = (clf.predict(x) == y).all(axis=1).mean()
        assert clf.score(x, y) == manual


class TestSklearnProtocol:
    def test_get_set_params_round_trip(self):
        clf = LogisticDistanceClassifier(n_dimensions=3, tol=1e-10)
        params = clf.get_params()
        assert params["n_dimensions"] == 3
        other = LogisticDistanceClassifier().set_params(**params)
        assert other.get_params() == params

    def test_clone_preserves_params(self):
        clf = LogisticDistanceClassifier(n_dimensions=1, restarts=2, seed=5)
        twin = clone(clf)
        assert twin.get_params() == clf.get_params()

    def test_refit_after_set_params(self):
        x, y = raw_instance(seed=9)
        clf = LogisticDistanceClassifier(n_dimensions=2, tol=1e-6).fit(x, y)
        clf.set_params(n_dimensions=1).fit(x, y)
        assert clf.weights_.shape == (4, 1)

    def test_pipeline_embedding(self):
        x, y = raw_instance(seed=10)
        pipe = Pipeline([("embed", LogisticDistanceClassifier(n_dimensions=2))])
        u = pipe.fit_transform(x, y)
        assert u.shape == (len(x), 2)

    def test_deterministic_across_instances(self):
        x, y = raw_instance(seed=11)
        a = LogisticDistanceClassifier(n_dimensions=2, restarts=2, tol=1e-6).fit(x, y)
        b = LogisticDistanceClassifier(n_dimensions=2, restarts=2, tol=1e-6).fit(x, y)
        assert a.deviance_ == b.deviance_
        assert_allclose(a.weights_, b.weights_)
