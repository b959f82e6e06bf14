"""Core quantities of the distance-based multivariate binary logistic model.

Subjects are mapped into a low-dimensional Euclidean space as linear
combinations of centered predictors.  Every binary response contributes a
pair of category points in the same space, and the half squared distances
from a subject to the two points of a pair determine the class
probabilities through a two-term softmax.  All functions here are pure;
the value types are frozen dataclasses wrapping read-only arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError

__all__ = [
    "Dataset",
    "DimensionAssignment",
    "ModelParams",
    "category_coordinates",
    "split_category_coordinates",
    "subject_scores",
    "half_squared_distance",
    "linear_predictors",
    "pair_softmax",
    "pair_log_softmax",
    "class_probabilities",
    "log_odds",
    "implied_coefficients",
    "deviance",
    "deviance_from_linear_predictors",
    "deviance_gradient",
    "indicator_matrix",
    "transform_predictors",
    "predict",
    "count_representable_profiles",
]

# Relative slack allowed on the column sums of a centered design matrix.
CENTERING_TOL = 1e-10


def _readonly(a, dtype=np.float64) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True, order="C")
    out.setflags(write=False)
    return out


def indicator_matrix(y: np.ndarray) -> np.ndarray:
    """Expand an n x R binary response matrix into its n x 2R indicator form.

    Column 2r holds the indicator of class 0 for response r, column 2r + 1
    the indicator of class 1, so each consecutive pair sums to one row-wise.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 2:
        raise ValueError("response matrix must be two-dimensional")
    n, r = y.shape
    g = np.empty((n, 2 * r))
    g[:, 0::2] = 1.0 - y
    g[:, 1::2] = y
    return g


def transform_predictors(x_raw, offsets, factors) -> np.ndarray:
    """Apply stored centering offsets and scaling factors to raw predictors."""
    x_raw = np.asarray(x_raw, dtype=np.float64)
    return (x_raw - np.asarray(offsets)) / np.asarray(factors)


@dataclass(frozen=True)
class Dataset:
    """A centered design matrix with binary responses and their indicators.

    Attributes
    ----------
    X : ndarray, shape (n, P)
        Centered (optionally scaled) predictor matrix.
    Y : ndarray, shape (n, R)
        Binary responses in {0, 1}.
    indicators : ndarray, shape (n, 2R)
        Two-column indicator expansion of ``Y``; pairs sum to one.
    centering_offsets, scaling_factors : ndarray, shape (P,)
        The transform taking raw predictors to ``X``.
    """

    X: np.ndarray
    Y: np.ndarray
    indicators: np.ndarray
    centering_offsets: np.ndarray
    scaling_factors: np.ndarray
    predictor_names: tuple
    response_names: tuple

    def __post_init__(self):
        object.__setattr__(self, "X", _readonly(self.X))
        object.__setattr__(self, "Y", _readonly(self.Y))
        object.__setattr__(self, "indicators", _readonly(self.indicators))
        object.__setattr__(self, "centering_offsets", _readonly(self.centering_offsets))
        object.__setattr__(self, "scaling_factors", _readonly(self.scaling_factors))
        object.__setattr__(self, "predictor_names", tuple(self.predictor_names))
        object.__setattr__(self, "response_names", tuple(self.response_names))
        n, p = self.X.shape
        if self.Y.ndim != 2 or self.Y.shape[0] != n:
            raise DataError("response matrix does not align with the design matrix")
        r = self.Y.shape[1]
        if not np.isin(self.Y, (0.0, 1.0)).all():
            raise DataError("responses must be coded 0/1")
        if self.indicators.shape != (n, 2 * r):
            raise DataError("indicator matrix has the wrong shape")
        if not (self.indicators[:, 1::2] == self.Y).all():
            raise DataError("odd indicator columns must equal the response columns")
        pair_sums = self.indicators[:, 0::2] + self.indicators[:, 1::2]
        if not (pair_sums == 1.0).all():
            raise DataError("indicator column pairs must sum to one in every row")
        col_sums = np.abs(self.X.sum(axis=0))
        if (col_sums > CENTERING_TOL * max(n, 1)).any():
            worst = int(np.argmax(col_sums))
            raise DataError(
                f"design matrix is not centered: column {worst} sums to "
                f"{self.X.sum(axis=0)[worst]:.3e}"
            )
        if len(self.predictor_names) != p or len(self.response_names) != r:
            raise DataError("name lists do not match the matrix shapes")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def n_predictors(self) -> int:
        return self.X.shape[1]

    @property
    def n_responses(self) -> int:
        return self.Y.shape[1]

    @classmethod
    def from_arrays(cls, x_raw, y, predictor_names=None, response_names=None,
                    standardize=False) -> "Dataset":
        """Center (and optionally scale to unit variance) raw predictors.

        Scaling uses the n - 1 denominator.  A zero-variance predictor
        cannot be standardized and raises :class:`DataError`.
        """
        x_raw = np.asarray(x_raw, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if x_raw.ndim != 2:
            raise DataError("design matrix must be two-dimensional")
        n, p = x_raw.shape
        if n < 2:
            raise DataError("at least two rows are required")
        offsets = x_raw.mean(axis=0)
        if standardize:
            factors = x_raw.std(axis=0, ddof=1)
            if (factors == 0.0).any():
                col = int(np.argmin(factors))
                raise DataError(
                    f"predictor column {col} has zero variance and cannot be standardized"
                )
        else:
            factors = np.ones(p)
        x = (x_raw - offsets) / factors
        if predictor_names is None:
            predictor_names = tuple(f"x{j + 1}" for j in range(p))
        if response_names is None:
            response_names = tuple(f"y{j + 1}" for j in range(y.shape[1]))
        return cls(
            X=x,
            Y=y,
            indicators=indicator_matrix(y),
            centering_offsets=offsets,
            scaling_factors=factors,
            predictor_names=predictor_names,
            response_names=response_names,
        )


@dataclass(frozen=True)
class DimensionAssignment:
    """Binary R x M pattern assigning each response to one or more dimensions."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.int8, copy=True)
        if m.ndim != 2:
            raise DataError("assignment pattern must be an R x M matrix")
        if not np.isin(m, (0, 1)).all():
            raise DataError("assignment pattern entries must be 0 or 1")
        if (m.sum(axis=1) == 0).any():
            row = int(np.argmin(m.sum(axis=1)))
            raise DataError(f"response {row} is assigned to no dimension")
        if (m.sum(axis=0) == 0).any():
            col = int(np.argmin(m.sum(axis=0)))
            raise DataError(f"dimension {col} has no assigned response")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n_responses(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_dimensions(self) -> int:
        return self.matrix.shape[1]

    @property
    def n_ones(self) -> int:
        return int(self.matrix.sum())

    def dims_of(self, response: int) -> tuple:
        return tuple(int(j) for j in np.flatnonzero(self.matrix[response]))

    def responses_on(self, dim: int) -> tuple:
        return tuple(int(i) for i in np.flatnonzero(self.matrix[:, dim]))

    @classmethod
    def identity(cls, n_responses: int) -> "DimensionAssignment":
        return cls(np.eye(n_responses, dtype=np.int8))


@dataclass(frozen=True)
class ModelParams:
    """Fitted or candidate parameter matrices.

    ``weights`` (P x M) map centered predictors to subject scores,
    ``discriminations`` (R x M) are half the differences between the two
    category points of each response, and ``locations`` (R x M) are half
    their sums.
    """

    weights: np.ndarray
    discriminations: np.ndarray
    locations: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _readonly(self.weights))
        object.__setattr__(self, "discriminations", _readonly(self.discriminations))
        object.__setattr__(self, "locations", _readonly(self.locations))
        if self.weights.ndim != 2 or self.discriminations.ndim != 2 or self.locations.ndim != 2:
            raise ValueError("parameter matrices must be two-dimensional")
        if self.discriminations.shape != self.locations.shape:
            raise ValueError("discriminations and locations must share a shape")
        if self.weights.shape[1] != self.discriminations.shape[1]:
            raise ValueError("weights and discriminations disagree on the dimension count")

    @property
    def n_predictors(self) -> int:
        return self.weights.shape[0]

    @property
    def n_responses(self) -> int:
        return self.discriminations.shape[0]

    @property
    def n_dimensions(self) -> int:
        return self.weights.shape[1]


# ---------------------------------------------------------------- geometry #


def category_coordinates(params: ModelParams) -> np.ndarray:
    """Assemble the 2R x M category point matrix.

    Row 2r holds the class-0 point of response r (location plus
    discrimination), row 2r + 1 the class-1 point (location minus
    discrimination).
    """
    k = params.discriminations
    l = params.locations
    v = np.empty((2 * k.shape[0], k.shape[1]))
    v[0::2] = l + k
    v[1::2] = l - k
    return v


def split_category_coordinates(v: np.ndarray):
    """Invert :func:`category_coordinates`: recover (discriminations, locations).

    Returns the pair ``(K, L)`` with ``K = (V0 - V1) / 2`` and
    ``L = (V0 + V1) / 2`` taken over consecutive row pairs.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 2 or v.shape[0] % 2 != 0:
        raise ValueError("category coordinate matrix must have an even row count")
    k = (v[0::2] - v[1::2]) / 2.0
    l = (v[0::2] + v[1::2]) / 2.0
    return k, l


def _design(x) -> np.ndarray:
    if isinstance(x, Dataset):
        return x.X
    return np.asarray(x, dtype=np.float64)


def subject_scores(x, params: ModelParams) -> np.ndarray:
    """Project subjects into the model space: scores = X @ weights."""
    x = _design(x)
    if x.shape[1] != params.n_predictors:
        raise ValueError("design matrix and weights disagree on the predictor count")
    return x @ params.weights


def half_squared_distance(u, v) -> float:
    """Half the squared Euclidean distance between two coordinate vectors."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError("coordinate vectors must have equal length")
    d = u - v
    return 0.5 * float(d @ d)


# ---------------------------------------------------- probabilities, loss #


def linear_predictors(x, params: ModelParams) -> np.ndarray:
    """Per-category utilities theta with the common subject term dropped.

    theta[i, 2r + c] = u_i' v_rc - ||v_rc||^2 / 2, which differs from the
    negative half squared distance only by a per-subject constant that
    cancels inside each response pair.
    """
    u = subject_scores(x, params)
    v = category_coordinates(params)
    return u @ v.T - 0.5 * np.square(v).sum(axis=1)


def pair_softmax(theta: np.ndarray) -> np.ndarray:
    """Row-wise two-term softmax over consecutive column pairs.

    The pair maximum is subtracted before exponentiation, so arbitrarily
    large utilities do not overflow.
    """
    theta = np.asarray(theta, dtype=np.float64)
    shape = theta.shape
    t = theta.reshape(shape[:-1] + (shape[-1] // 2, 2))
    t = t - t.max(axis=-1, keepdims=True)
    e = np.exp(t)
    p = e / e.sum(axis=-1, keepdims=True)
    return p.reshape(shape)


def pair_log_softmax(theta: np.ndarray) -> np.ndarray:
    """Logarithm of :func:`pair_softmax`, computed without underflow."""
    theta = np.asarray(theta, dtype=np.float64)
    shape = theta.shape
    t = theta.reshape(shape[:-1] + (shape[-1] // 2, 2))
    t = t - t.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(t).sum(axis=-1, keepdims=True))
    return (t - lse).reshape(shape)


def class_probabilities(x, params: ModelParams) -> np.ndarray:
    """n x 2R matrix of class probabilities; column pairs sum to one."""
    return pair_softmax(linear_predictors(x, params))


def log_odds(x, params: ModelParams) -> np.ndarray:
    """n x R matrix of log odds of class 1 against class 0.

    Equals the half squared distance to the class-0 point minus the half
    squared distance to the class-1 point.
    """
    theta = linear_predictors(x, params)
    return theta[:, 1::2] - theta[:, 0::2]


def implied_coefficients(params: ModelParams):
    """Intercepts and slopes of the equivalent reduced-rank logistic model.

    Returns
    -------
    intercepts : ndarray, shape (R,)
        ``2 * sum_m locations[r, m] * discriminations[r, m]``.
    coefficients : ndarray, shape (P, R)
        ``-2 * weights @ discriminations.T``; its rank is at most M.
    """
    intercepts = 2.0 * (params.locations * params.discriminations).sum(axis=1)
    coefficients = -2.0 * params.weights @ params.discriminations.T
    return intercepts, coefficients


def deviance_from_linear_predictors(theta: np.ndarray, indicators: np.ndarray) -> float:
    """Minus twice the log-likelihood given per-category utilities."""
    return -2.0 * float((indicators * pair_log_softmax(theta)).sum())


def deviance(dataset: Dataset, params: ModelParams) -> float:
    """Minus twice the log-likelihood of the dataset under the parameters."""
    theta = linear_predictors(dataset.X, params)
    return deviance_from_linear_predictors(theta, dataset.indicators)


def deviance_gradient(theta: np.ndarray, indicators: np.ndarray) -> np.ndarray:
    """Gradient of the deviance with respect to the utilities: -2 (G - Pi)."""
    return -2.0 * (indicators - pair_softmax(theta))


# ------------------------------------------------------------- prediction #


def predict(new_x, params: ModelParams, centering_offsets, scaling_factors):
    """Class probabilities and hard classes for raw predictor values.

    Parameters
    ----------
    new_x : array_like, shape (P,) or (k, P)
        Raw (uncentered, unscaled) predictor values.
    params : ModelParams
    centering_offsets, scaling_factors : array_like, shape (P,)
        The transform the model was fitted under.

    Returns
    -------
    probabilities : ndarray, shape (..., R, 2)
    hard_classes : ndarray, shape (..., R)
        Class 1 exactly when the log odds are positive; ties go to class 0.
    """
    new_x = np.asarray(new_x, dtype=np.float64)
    single = new_x.ndim == 1
    x2 = np.atleast_2d(new_x)
    if x2.shape[1] != params.n_predictors:
        raise ValueError(
            f"expected {params.n_predictors} predictor values, got {x2.shape[1]}"
        )
    x = transform_predictors(x2, centering_offsets, scaling_factors)
    theta = linear_predictors(x, params)
    probs = pair_softmax(theta).reshape(x2.shape[0], params.n_responses, 2)
    classes = (theta[:, 1::2] - theta[:, 0::2] > 0.0).astype(np.int64)
    if single:
        return probs[0], classes[0]
    return probs, classes


def count_representable_profiles(n_responses: int, n_dimensions: int | None = None,
                                 assignment: DimensionAssignment | None = None) -> int:
    """Number of distinct hard 0/1 profiles the model geometry can emit.

    Unconstrained in M dimensions the R decision hyperplanes cut predictor
    space into ``sum_{m=0}^{min(M, R)} C(R, m)`` cells.  Under an assignment
    in which no response loads on more than one dimension the count is the
    product over dimensions of (number of responses on that dimension + 1).
    """
    if assignment is None:
        if n_dimensions is None:
            raise ValueError("either a dimension count or an assignment is required")
        if n_dimensions < 1 or n_responses < 1:
            raise ValueError("counts must be positive")
        return sum(math.comb(n_responses, m)
                   for m in range(min(n_dimensions, n_responses) + 1))
    if assignment.n_responses != n_responses:
        raise ValueError("assignment row count does not match the response count")
    if n_dimensions is not None and assignment.n_dimensions != n_dimensions:
        raise ValueError("assignment width does not match the dimension count")
    row_counts = assignment.matrix.sum(axis=1)
    if (row_counts > 1).any():
        row = int(np.argmax(row_counts))
        raise ValueError(
            f"response {row} loads on several dimensions; the profile count "
            f"for such patterns is not supported"
        )
    per_dim = assignment.matrix.sum(axis=0)
    out = 1
    for c in per_dim:
        out *= int(c) + 1
    return out
