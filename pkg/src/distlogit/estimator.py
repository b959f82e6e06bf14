"""Scikit-learn style front end for the distance-model solvers.

The estimator follows the usual protocol: constructor arguments are
stored untouched, ``fit`` validates and computes, fitted state lives in
trailing-underscore attributes, and ``get_params``/``set_params`` come
from the base class. ``transform`` returns the low-dimensional subject
scores, which makes the model usable inside pipelines as a supervised
embedding.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .model import (
    Dataset,
    DimensionAssignment,
    ModelParams,
    category_coordinates,
    class_probabilities,
    log_odds,
)
from .solver import FitConfig, fit_constrained, fit_unconstrained

__all__ = ["LogisticDistanceClassifier"]


class LogisticDistanceClassifier(ClassifierMixin, TransformerMixin, BaseEstimator):
    """Multivariate binary classifier in a shared low-dimensional space.

    Each response gets two category points; a subject is assigned the
    closer one, with logistic probabilities driven by the distance gap.
    Subject positions are linear in the predictors, so one fitted map
    serves all responses at once.

    Parameters
    ----------
    n_dimensions : int
        Dimensionality of the joint space.
    assignment : array-like of 0/1, shape (R, n_dimensions), optional
        Response-to-dimension pattern. When given, each response's
        category points may only separate along its flagged dimensions.
    standardize : bool
        Scale predictors to unit sample standard deviation after
        centering (centering always happens).
    tol : float
        Relative deviance-change stopping rule.
    max_iter : int
        Iteration cap.
    restarts : int
        Extra jittered starts; the best final deviance wins.
    location_update : {"min-norm", "equal"}
        Identification rule for the per-response location component.
    seed : int
        Seed for restart jitter.
    """

    def __init__(self, n_dimensions=2, assignment=None, standardize=True,
                 tol=1e-8, max_iter=65536, restarts=0,
                 location_update="min-norm", seed=0):
        self.n_dimensions = n_dimensions
        self.assignment = assignment
        self.standardize = standardize
        self.tol = tol
        self.max_iter = max_iter
        self.restarts = restarts
        self.location_update = location_update
        self.seed = seed

    def _coerced_assignment(self):
        if self.assignment is None:
            return None
        if isinstance(self.assignment, DimensionAssignment):
            return self.assignment
        return DimensionAssignment(np.asarray(self.assignment, dtype=int))

    def fit(self, X, y):
        """Fit the model to raw predictors and 0/1 responses."""
        X, y = check_X_y(X, y, multi_output=True, dtype=np.float64)
        single_output = y.ndim == 1
        Y = y.reshape(-1, 1) if single_output else y
        dataset = Dataset.from_arrays(X, Y, standardize=self.standardize)
        config = FitConfig(
            n_dimensions=self.n_dimensions,
            assignment=self._coerced_assignment(),
            tol=self.tol,
            max_iter=self.max_iter,
            restarts=self.restarts,
            seed=self.seed,
            location_update=self.location_update,
        )
        if config.assignment is not None:
            result = fit_constrained(dataset, config)
        else:
            result = fit_unconstrained(dataset, config)

        self.n_features_in_ = X.shape[1]
        self.n_outputs_ = Y.shape[1]
        self.single_output_ = single_output
        self.classes_ = (np.array([0, 1]) if single_output
                         else [np.array([0, 1])] * Y.shape[1])
        self.centering_offsets_ = dataset.centering_offsets
        self.scaling_factors_ = dataset.scaling_factors
        self.weights_ = result.params.weights
        self.discriminations_ = result.params.discriminations
        self.locations_ = result.params.locations
        self.category_points_ = category_coordinates(result.params)
        self.deviance_ = result.deviance
        self.trace_ = np.asarray(result.trace)
        self.n_iter_ = result.iterations
        self.converged_ = result.converged
        self.degenerate_responses_ = result.degenerate_responses
        self.quasi_separation_ = result.quasi_separation
        return self

    def _params(self) -> ModelParams:
        return ModelParams(self.weights_, self.discriminations_,
                           self.locations_)

    def _model_scale(self, X) -> np.ndarray:
        check_is_fitted(self, "weights_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, but the model "
                             f"was fitted with {self.n_features_in_}")
        return (X - self.centering_offsets_) / self.scaling_factors_

    def transform(self, X) -> np.ndarray:
        """Subject scores: the low-dimensional representation of X."""
        return self._model_scale(X) @ self.weights_

    def decision_function(self, X) -> np.ndarray:
        """Per-response log odds of class 1."""
        odds = log_odds(self._model_scale(X), self._params())
        return odds[:, 0] if self.single_output_ else odds

    def predict(self, X) -> np.ndarray:
        """Closest-category classes, shaped like the training response."""
        odds = log_odds(self._model_scale(X), self._params())
        labels = (odds > 0).astype(int)
        return labels[:, 0] if self.single_output_ else labels

    def predict_proba(self, X):
        """Class probabilities.

        A single-output fit returns one (n, 2) array; a multi-output fit
        returns a list with one such array per response, matching the
        usual multi-output layout.
        """
        flat = class_probabilities(self._model_scale(X), self._params())
        paired = flat.reshape(flat.shape[0], self.n_outputs_, 2)
        if self.single_output_:
            return paired[:, 0, :]
        return [paired[:, r, :] for r in range(self.n_outputs_)]

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.target_tags.single_output = True
        tags.target_tags.multi_output = True
        return tags
