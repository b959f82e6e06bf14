"""Majorization-minimization fitting of the distance-based logistic model.

Each iteration majorizes the deviance at the current utilities by a
separable quadratic, then minimizes that quadratic in closed form through
a generalized singular value decomposition of the working matrix.  The
deviance therefore never increases.  Two fitting routines are provided:
an unconstrained one in which every response loads on every dimension,
and a constrained one that honors a binary response-by-dimension
assignment pattern.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DataError, SingularDesignError
from .model import (
    Dataset,
    DimensionAssignment,
    ModelParams,
    deviance_from_linear_predictors,
    linear_predictors,
    pair_log_softmax,
    pair_softmax,
    split_category_coordinates,
)

__all__ = [
    "FitConfig",
    "FitResult",
    "MajorizationState",
    "cholesky_factor",
    "pair_contrast",
    "offset_update",
    "gsvd_update",
    "update_locations",
    "majorization_gap",
    "fit_unconstrained",
    "fit_constrained",
]

# Curvature of the quadratic majorizer of the per-observation negative
# log-likelihood.  1/4 is the smallest value for which the quadratic still
# dominates the loss; anything smaller voids the descent guarantee.
DEFAULT_CURVATURE = 0.25

# Convergence is declared when the deviance decrease falls below
# tol * deviance, or below this absolute floor for near-zero deviances.
DEVIANCE_FLOOR = 1e-12

# A discrimination row with squared norm below this is treated as zero.
DEGENERATE_NORM = 1e-14

# Largest discrimination magnitude before a fit is flagged as possibly
# quasi-separated.
SEPARATION_LIMIT = 1e3

_PIVOT_REL = 1e-12
_SIGN_EPS = 1e-10


@dataclass(frozen=True)
class FitConfig:
    """Options controlling a single model fit.

    ``seed`` only matters when ``restarts`` is positive: the base fit is
    deterministic, and restarts perturb its initialization with seeded
    noise.  ``curvature`` is a testing hook; leave it at the default.
    """

    n_dimensions: int
    assignment: DimensionAssignment | None = None
    tol: float = 1e-8
    max_iter: int = 65536
    seed: int = 0
    record_trace: bool = True
    restarts: int = 0
    location_update: str = "min-norm"
    curvature: float = DEFAULT_CURVATURE

    def __post_init__(self):
        if self.n_dimensions < 1:
            raise ValueError("n_dimensions must be at least 1")
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.restarts < 0:
            raise ValueError("restarts cannot be negative")
        if self.location_update not in ("min-norm", "equal"):
            raise ValueError("location_update must be 'min-norm' or 'equal'")
        if not self.curvature > 0.0:
            raise ValueError("curvature must be positive")


@dataclass(frozen=True)
class FitResult:
    """Outcome of one fit.

    ``trace`` holds the deviance at the initialization followed by one
    entry per iteration; it is empty when trace recording was disabled.
    ``degenerate_responses`` lists responses whose discrimination row
    collapsed to zero, and ``quasi_separation`` is set when any
    discrimination grew past :data:`SEPARATION_LIMIT`.
    """

    params: ModelParams
    deviance: float
    trace: tuple
    iterations: int
    converged: bool
    degenerate_responses: tuple = ()
    quasi_separation: bool = False


@dataclass
class MajorizationState:
    """Quantities the majorization step needs at the current parameters."""

    chol_factor: np.ndarray
    theta: np.ndarray
    probabilities: np.ndarray
    working: np.ndarray
    deviance: float

    @classmethod
    def from_params(cls, dataset: Dataset, params: ModelParams,
                    chol_factor: np.ndarray,
                    curvature: float = DEFAULT_CURVATURE) -> "MajorizationState":
        theta = linear_predictors(dataset.X, params)
        probabilities = pair_softmax(theta)
        dev = -2.0 * float((dataset.indicators * pair_log_softmax(theta)).sum())
        step = 1.0 / (2.0 * curvature)
        working = theta + step * (dataset.indicators - probabilities)
        return cls(chol_factor, theta, probabilities, working, dev)


# ------------------------------------------------------------ inner steps #


def cholesky_factor(xtx: np.ndarray) -> np.ndarray:
    """Lower-triangular factor R with ``xtx = R R'``.

    Raises :class:`SingularDesignError` naming the predictor column whose
    pivot falls below ``1e-12 * trace(xtx)``.
    """
    xtx = np.asarray(xtx, dtype=np.float64)
    p = xtx.shape[0]
    floor = _PIVOT_REL * float(np.trace(xtx))
    r = np.zeros((p, p))
    for j in range(p):
        pivot = xtx[j, j] - r[j, :j] @ r[j, :j]
        if pivot <= floor:
            raise SingularDesignError(column=j)
        r[j, j] = math.sqrt(pivot)
        if j + 1 < p:
            r[j + 1:, j] = (xtx[j + 1:, j] - r[j + 1:, :j] @ r[j, :j]) / r[j, j]
    return r


def pair_contrast(working: np.ndarray) -> np.ndarray:
    """Half the difference of each consecutive column pair: n x 2R -> n x R."""
    working = np.asarray(working, dtype=np.float64)
    return 0.5 * (working[:, 0::2] - working[:, 1::2])


def offset_update(contrast: np.ndarray) -> np.ndarray:
    """Optimal per-response offsets: minus the column means of the contrast.

    The offsets are the discrimination-location row products the next
    location update must realize.
    """
    return -np.asarray(contrast).mean(axis=0)


def gsvd_update(x: np.ndarray, target: np.ndarray, chol_factor: np.ndarray,
                n_dimensions: int):
    """Best rank-M factorization ``X @ weights @ discriminations'`` of a target.

    Minimizes ``||target - X B K'||_F`` subject to the identification
    constraint ``B' X'X B / n = I``.  Works through the thin singular value
    decomposition of ``R^-1 X' target``; when singular values are tied at
    the M/M+1 boundary the factorization's own ordering decides, which can
    differ across linear-algebra backends.

    Returns
    -------
    weights : ndarray, shape (P, M)
    discriminations : ndarray, shape (R, M)
    """
    n = x.shape[0]
    c = solve_triangular(chol_factor, x.T @ target, lower=True)
    left, values, right_t = np.linalg.svd(c, full_matrices=False)
    m = n_dimensions
    # The constraint involves X'X, so the weight step solves against the
    # transposed factor; R^-1 itself would break B'X'XB/n = I.
    weights = math.sqrt(n) * solve_triangular(
        chol_factor.T, left[:, :m], lower=False
    )
    discriminations = (right_t[:m].T * values[:m]) / math.sqrt(n)
    return weights, discriminations


def update_locations(offsets: np.ndarray, discriminations: np.ndarray,
                     assignment: DimensionAssignment | None = None,
                     mode: str = "min-norm"):
    """Locations realizing the given row products with the discriminations.

    Any row of locations with ``sum_m K[r, m] L[r, m] = offsets[r]`` yields
    the same probabilities, so the choice is pure identification.  The
    default picks the minimum-norm solution along each discrimination row;
    ``mode='equal'`` instead makes all coordinates of a row equal, the two
    coinciding whenever a response loads on a single dimension.  Rows whose
    discriminations vanish get zero locations and are reported as
    degenerate.

    Returns
    -------
    locations : ndarray, shape (R, M)
    degenerate : tuple of int
        Indices of responses with a vanishing discrimination row.
    """
    offsets = np.asarray(offsets, dtype=np.float64)
    k = np.asarray(discriminations, dtype=np.float64)
    if assignment is not None:
        k = k * assignment.matrix
    norms = np.square(k).sum(axis=1)
    degenerate = tuple(int(r) for r in np.flatnonzero(norms < DEGENERATE_NORM))
    safe = np.where(norms < DEGENERATE_NORM, 1.0, norms)
    if mode == "min-norm":
        locations = (offsets / safe)[:, None] * k
    elif mode == "equal":
        sums = k.sum(axis=1)
        locations = np.empty_like(k)
        for r in range(k.shape[0]):
            support = k[r] != 0.0
            if abs(sums[r]) < 1e-12 * max(1.0, math.sqrt(norms[r])):
                # shared-coordinate form is undefined here; fall back
                locations[r] = offsets[r] / safe[r] * k[r]
            else:
                locations[r] = np.where(support, offsets[r] / sums[r], 0.0)
    else:
        raise ValueError("mode must be 'min-norm' or 'equal'")
    locations[list(degenerate)] = 0.0
    if assignment is not None:
        locations = locations * assignment.matrix
    return locations, degenerate


def majorization_gap(theta, theta_tilde, indicators, curvature: float = DEFAULT_CURVATURE):
    """Loss and quadratic majorizer for per-observation utility pairs.

    Both arguments may carry leading batch axes; the trailing axis holds
    the two per-category utilities.  The loss is minus twice the observed
    class's log probability; the majorizer is the tangent quadratic at
    ``theta_tilde`` whose curvature dominates the loss everywhere.

    Returns
    -------
    loss, majorizer : ndarray
        With the batch shape of the inputs.
    """
    theta = np.asarray(theta, dtype=np.float64)
    tilde = np.asarray(theta_tilde, dtype=np.float64)
    g = np.asarray(indicators, dtype=np.float64)
    # loss route: indicator-weighted log softmax
    loss = -2.0 * (g * pair_log_softmax(theta)).sum(axis=-1)
    # majorizer route: explicit margin formula plus tangent quadratic
    margin = (tilde * (2.0 * g - 1.0)).sum(axis=-1) * -1.0
    loss_at_tilde = 2.0 * np.logaddexp(0.0, margin)
    pi = pair_softmax(tilde)
    grad = -2.0 * (g - pi)
    delta = theta - tilde
    majorizer = (
        loss_at_tilde
        + (delta * grad).sum(axis=-1)
        + 2.0 * curvature * np.square(delta).sum(axis=-1)
    )
    return loss, majorizer


# ------------------------------------------------------------ fit drivers #


def _validate_fit_inputs(dataset: Dataset, config: FitConfig, constrained: bool):
    n, p = dataset.X.shape
    r = dataset.n_responses
    m = config.n_dimensions
    if m > min(p, r):
        raise DataError(
            f"{m} dimensions exceed min(predictors, responses) = {min(p, r)}"
        )
    counts = dataset.Y.sum(axis=0)
    bad = np.flatnonzero((counts == 0) | (counts == n))
    if bad.size:
        names = ", ".join(dataset.response_names[i] for i in bad)
        raise DataError(f"responses with a single observed class: {names}")
    if constrained:
        if config.assignment is None:
            raise DataError("a constrained fit requires an assignment pattern")
        a = config.assignment
        if a.n_responses != r or a.n_dimensions != m:
            raise DataError(
                f"assignment pattern is {a.n_responses} x {a.n_dimensions}, "
                f"expected {r} x {m}"
            )
    elif config.assignment is not None:
        raise DataError("fit_unconstrained does not accept an assignment pattern")


def _initial_params(dataset: Dataset, chol: np.ndarray, config: FitConfig) -> ModelParams:
    n = dataset.n
    m = config.n_dimensions
    c0 = solve_triangular(chol, dataset.X.T @ dataset.indicators, lower=True)
    left, values, right_t = np.linalg.svd(c0, full_matrices=False)
    weights = math.sqrt(n) * solve_triangular(chol.T, left[:, :m], lower=False)
    v0 = (right_t[:m].T * values[:m]) / math.sqrt(n)
    k0, l0 = split_category_coordinates(v0)
    if config.assignment is not None:
        k0 = k0 * config.assignment.matrix
        l0 = l0 * config.assignment.matrix
    return ModelParams(weights, k0, l0)


def _jittered(params: ModelParams, rng, assignment: DimensionAssignment | None) -> ModelParams:
    def wobble(a):
        scale = 0.25 * (float(np.sqrt(np.mean(np.square(a)))) + 0.1)
        return a + rng.normal(scale=scale, size=a.shape)

    k = wobble(params.discriminations)
    l = wobble(params.locations)
    if assignment is not None:
        k = k * assignment.matrix
        l = l * assignment.matrix
    return ModelParams(wobble(params.weights), k, l)


def _constrained_step(dataset: Dataset, chol: np.ndarray,
                      params: ModelParams, base: np.ndarray,
                      assignment: DimensionAssignment):
    """One cycle of per-dimension rank-one updates on the working target."""
    x = dataset.X
    n = dataset.n
    weights = np.array(params.weights)
    disc = np.array(params.discriminations)
    for s in range(params.n_dimensions):
        scores = x @ weights
        total = scores @ disc.T
        own = np.outer(scores[:, s], disc[:, s])
        residual = base - (total - own)
        cols = list(assignment.responses_on(s))
        c = solve_triangular(chol, x.T @ residual[:, cols], lower=True)
        left, values, right_t = np.linalg.svd(c, full_matrices=False)
        weights[:, s] = math.sqrt(n) * solve_triangular(
            chol.T, left[:, 0], lower=False
        )
        disc[:, s] = 0.0
        disc[cols, s] = right_t[0] * values[0] / math.sqrt(n)
    return weights, disc


def _mm_loop(dataset: Dataset, init: ModelParams, config: FitConfig,
             chol: np.ndarray) -> FitResult:
    assignment = config.assignment
    state = MajorizationState.from_params(dataset, init, chol, config.curvature)
    params = init
    trace = [state.deviance] if config.record_trace else None
    degenerate: tuple = ()
    converged = False
    iterations = 0
    for iterations in range(1, config.max_iter + 1):
        contrast = pair_contrast(state.working)
        offsets = offset_update(contrast)
        target = contrast + offsets
        if assignment is None:
            weights, disc = gsvd_update(dataset.X, target, chol, config.n_dimensions)
        else:
            weights, disc = _constrained_step(dataset, chol, params, target, assignment)
        locations, degenerate = update_locations(
            offsets, disc, assignment, config.location_update
        )
        params = ModelParams(weights, disc, locations)
        new_state = MajorizationState.from_params(dataset, params, chol, config.curvature)
        delta = state.deviance - new_state.deviance
        state = new_state
        if trace is not None:
            trace.append(state.deviance)
        if delta <= config.tol * state.deviance or delta <= DEVIANCE_FLOOR:
            converged = True
            break
    return FitResult(
        params=params,
        deviance=state.deviance,
        trace=tuple(trace) if trace is not None else (),
        iterations=iterations,
        converged=converged,
        degenerate_responses=degenerate,
        quasi_separation=bool(
            np.abs(params.discriminations).max(initial=0.0) > SEPARATION_LIMIT
        ),
    )


def _canonical_signs(result: FitResult) -> FitResult:
    """Flip dimensions so the leading usable weight is non-negative."""
    weights = np.array(result.params.weights)
    disc = np.array(result.params.discriminations)
    loc = np.array(result.params.locations)
    for m in range(weights.shape[1]):
        col = weights[:, m]
        usable = np.flatnonzero(np.abs(col) >= _SIGN_EPS)
        if usable.size == 0:
            continue
        if col[usable[0]] < 0.0:
            weights[:, m] = -weights[:, m]
            disc[:, m] = -disc[:, m]
            loc[:, m] = -loc[:, m]
    return replace(result, params=ModelParams(weights, disc, loc))


def _fit(dataset: Dataset, config: FitConfig, constrained: bool) -> FitResult:
    _validate_fit_inputs(dataset, config, constrained)
    xtx = dataset.X.T @ dataset.X
    try:
        chol = cholesky_factor(xtx)
    except SingularDesignError as err:
        raise SingularDesignError(
            err.column, dataset.predictor_names[err.column]
        ) from None
    base_init = _initial_params(dataset, chol, config)
    best = _mm_loop(dataset, base_init, config, chol)
    if config.restarts:
        rng = np.random.default_rng(config.seed)
        for _ in range(config.restarts):
            candidate = _mm_loop(
                dataset, _jittered(base_init, rng, config.assignment), config, chol
            )
            if candidate.deviance < best.deviance:
                best = candidate
    return _canonical_signs(best)


def fit_unconstrained(dataset: Dataset, config: FitConfig) -> FitResult:
    """Fit with every response free to load on every dimension."""
    return _fit(dataset, config, constrained=False)


def fit_constrained(dataset: Dataset, config: FitConfig) -> FitResult:
    """Fit under a binary response-by-dimension assignment pattern."""
    return _fit(dataset, config, constrained=True)
