"""Parameter counting, information criteria, scans, and per-response quality."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import DataError, DistlogitError
from .model import Dataset, DimensionAssignment, pair_log_softmax, linear_predictors
from .solver import FitConfig, FitResult, fit_constrained, fit_unconstrained

__all__ = [
    "ModelSummary",
    "QualityReport",
    "ScanRow",
    "ScanResult",
    "UnivariateLogisticFit",
    "count_parameters",
    "information_criteria",
    "fit_univariate_logistic",
    "quality_of_representation",
    "dimension_scan",
    "predictor_drop_scan",
]

# Q_r is reported as undefined when the intercept-only and full logistic
# deviances of a response differ by less than this.
QUALITY_DENOM_FLOOR = 1e-8

# Fitted log odds beyond this magnitude mark a logistic fit as separated.
_SEPARATION_ETA = 20.0

# A total deviance this small relative to n means every observation is
# classified perfectly, which also signals separation.
_SEPARATION_DEV = 1e-9


def count_parameters(n_predictors: int, n_responses: int, n_dimensions: int,
                     assignment: DimensionAssignment | None = None) -> int:
    """Effective parameter count of a fitted model.

    Unconstrained: ``(P + R) M + R - M (M + 1) / 2``, the net of weights,
    discriminations, and locations after the scale, rotation, and
    location-identification restrictions.  Constrained by an assignment:
    ``(P - 1) M`` for the per-dimension weight directions plus one
    discrimination per assigned cell plus one location product per response.
    """
    if n_predictors < 1 or n_responses < 1 or n_dimensions < 1:
        raise ValueError("counts must be positive")
    if assignment is None:
        m = n_dimensions
        return (n_predictors + n_responses) * m + n_responses - m * (m + 1) // 2
    if assignment.n_responses != n_responses or assignment.n_dimensions != n_dimensions:
        raise ValueError("assignment shape does not match the stated counts")
    return (n_predictors - 1) * n_dimensions + assignment.n_ones + n_responses


def information_criteria(deviance: float, n_params: int, n: int):
    """Return ``(AIC, BIC)`` using natural-log penalties."""
    if n < 1:
        raise ValueError("n must be positive")
    aic = deviance + 2.0 * n_params
    bic = deviance + math.log(n) * n_params
    return aic, bic


@dataclass(frozen=True)
class ModelSummary:
    """One comparison-table row."""

    label: str
    deviance: float
    n_params: int
    aic: float
    bic: float
    n: int

    @classmethod
    def build(cls, label: str, deviance: float, n_params: int, n: int) -> "ModelSummary":
        aic, bic = information_criteria(deviance, n_params, n)
        return cls(label, deviance, n_params, aic, bic, n)


# ------------------------------------------------------- logistic fitting #


@dataclass(frozen=True)
class UnivariateLogisticFit:
    coefficients: np.ndarray
    deviance: float
    converged: bool
    separation: bool


def _binomial_deviance(eta: np.ndarray, y: np.ndarray) -> float:
    return 2.0 * float((np.logaddexp(0.0, eta) - y * eta).sum())


def fit_univariate_logistic(design, y, tol: float = 1e-10,
                            max_iter: int = 100) -> UnivariateLogisticFit:
    """Newton-Raphson logistic regression for a single binary response.

    The design matrix is taken as given; include an intercept column if
    one is wanted.  Step halving keeps the deviance monotone.  Under
    perfect separation the deviance keeps shrinking toward zero; the fit
    then stops at the iteration cap or at a negligible deviance change and
    is flagged through ``separation``.
    """
    design = np.asarray(design, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if design.ndim != 2 or design.shape[0] != y.shape[0]:
        raise ValueError("design matrix and response do not align")
    beta = np.zeros(design.shape[1])
    eta = design @ beta
    dev = _binomial_deviance(eta, y)
    converged = False
    for _ in range(max_iter):
        pi = expit(eta)
        w = np.maximum(pi * (1.0 - pi), 1e-10)
        grad = design.T @ (y - pi)
        hess = (design * w[:, None]).T @ design
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            break
        new_beta = beta + step
        new_eta = design @ new_beta
        new_dev = _binomial_deviance(new_eta, y)
        halvings = 0
        while new_dev > dev and halvings < 30:
            step = step / 2.0
            new_beta = beta + step
            new_eta = design @ new_beta
            new_dev = _binomial_deviance(new_eta, y)
            halvings += 1
        beta, eta = new_beta, new_eta
        if dev - new_dev <= tol * max(new_dev, 1.0):
            dev = new_dev
            converged = True
            break
        dev = new_dev
    separation = bool(
        dev < _SEPARATION_DEV * max(y.shape[0], 1)
        or np.abs(eta).max(initial=0.0) > _SEPARATION_ETA
    )
    return UnivariateLogisticFit(beta, dev, converged, separation)


# -------------------------------------------------------------- quality #


@dataclass(frozen=True)
class QualityReport:
    """Per-response deviance accounting against two logistic baselines.

    ``quality`` holds ``(L0 - L) / (L0 - Llr)`` per response, unclamped,
    with NaN where the denominator fell below the floor (those indices are
    repeated in ``undefined``).
    """

    response_names: tuple
    intercept_deviance: np.ndarray
    logistic_deviance: np.ndarray
    model_deviance: np.ndarray
    quality: np.ndarray
    undefined: tuple


def quality_of_representation(dataset: Dataset, fit: FitResult) -> QualityReport:
    """How much of each response's logistic signal the fit retains."""
    n = dataset.n
    ones = np.ones((n, 1))
    full = np.column_stack([ones, dataset.X])
    theta = linear_predictors(dataset.X, fit.params)
    logp = pair_log_softmax(theta)
    intercept_dev = np.empty(dataset.n_responses)
    logistic_dev = np.empty(dataset.n_responses)
    model_dev = np.empty(dataset.n_responses)
    for r in range(dataset.n_responses):
        y_r = dataset.Y[:, r]
        intercept_dev[r] = fit_univariate_logistic(ones, y_r).deviance
        logistic_dev[r] = fit_univariate_logistic(full, y_r).deviance
        block = dataset.indicators[:, 2 * r: 2 * r + 2] * logp[:, 2 * r: 2 * r + 2]
        model_dev[r] = -2.0 * float(block.sum())
    denom = intercept_dev - logistic_dev
    bad = denom < QUALITY_DENOM_FLOOR
    quality = np.where(bad, np.nan, (intercept_dev - model_dev) / np.where(bad, 1.0, denom))
    return QualityReport(
        response_names=dataset.response_names,
        intercept_deviance=intercept_dev,
        logistic_deviance=logistic_dev,
        model_deviance=model_dev,
        quality=quality,
        undefined=tuple(int(i) for i in np.flatnonzero(bad)),
    )


# ----------------------------------------------------------------- scans #


@dataclass(frozen=True)
class ScanRow:
    label: str
    summary: ModelSummary | None
    converged: bool
    error: str | None = None


@dataclass(frozen=True)
class ScanResult:
    scan_type: str
    rows: tuple

    def _best(self, key) -> str | None:
        usable = [row for row in self.rows if row.summary is not None]
        if not usable:
            return None
        return min(usable, key=lambda row: key(row.summary)).label

    @property
    def best_aic_label(self) -> str | None:
        return self._best(lambda s: s.aic)

    @property
    def best_bic_label(self) -> str | None:
        return self._best(lambda s: s.bic)


def _fit_for(dataset: Dataset, config: FitConfig) -> FitResult:
    if config.assignment is not None:
        return fit_constrained(dataset, config)
    return fit_unconstrained(dataset, config)


def dimension_scan(dataset: Dataset, dimension_values, config: FitConfig) -> ScanResult:
    """Refit with each dimension count and summarize; failures do not abort.

    The scan compares unconstrained models, so the supplied configuration
    must not carry an assignment pattern.
    """
    if config.assignment is not None:
        raise DataError("dimension scans compare unconstrained fits only")
    rows = []
    for m in dimension_values:
        label = f"M={m}"
        try:
            fit = fit_unconstrained(
                dataset,
                FitConfig(
                    n_dimensions=int(m),
                    tol=config.tol,
                    max_iter=config.max_iter,
                    seed=config.seed,
                    record_trace=False,
                    restarts=config.restarts,
                    location_update=config.location_update,
                    curvature=config.curvature,
                ),
            )
        except DistlogitError as err:
            rows.append(ScanRow(label, None, False, str(err)))
            continue
        n_params = count_parameters(
            dataset.n_predictors, dataset.n_responses, int(m)
        )
        summary = ModelSummary.build(label, fit.deviance, n_params, dataset.n)
        rows.append(ScanRow(label, summary, fit.converged))
    return ScanResult("dimensions", tuple(rows))


def _drop_predictor(dataset: Dataset, index: int) -> Dataset:
    """Dataset without one predictor; centering and scaling are column-local,
    so the remaining columns keep theirs."""
    keep = [j for j in range(dataset.n_predictors) if j != index]
    return Dataset(
        X=dataset.X[:, keep],
        Y=dataset.Y,
        indicators=dataset.indicators,
        centering_offsets=dataset.centering_offsets[keep],
        scaling_factors=dataset.scaling_factors[keep],
        predictor_names=tuple(dataset.predictor_names[j] for j in keep),
        response_names=dataset.response_names,
    )


def predictor_drop_scan(dataset: Dataset, config: FitConfig) -> ScanResult:
    """Refit once per left-out predictor at a fixed dimension count."""
    if dataset.n_predictors < 2:
        raise DataError("drop-one scans need at least two predictors")
    rows = []
    for p in range(dataset.n_predictors):
        label = dataset.predictor_names[p]
        try:
            reduced = _drop_predictor(dataset, p)
            fit = _fit_for(reduced, config)
            n_params = count_parameters(
                reduced.n_predictors,
                reduced.n_responses,
                config.n_dimensions,
                config.assignment,
            )
        except DistlogitError as err:
            rows.append(ScanRow(label, None, False, str(err)))
            continue
        summary = ModelSummary.build(label, fit.deviance, n_params, reduced.n)
        rows.append(ScanRow(label, summary, fit.converged))
    return ScanResult("drop-predictor", tuple(rows))
