"""CSV ingestion, fit-configuration parsing, and dataset interchange."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .model import Dataset, DimensionAssignment, indicator_matrix
from .schemas import read_document, validate_document, write_document
from .solver import FitConfig

__all__ = [
    "IngestConfig",
    "load_csv",
    "read_predictor_columns",
    "parse_fit_config",
    "dataset_to_document",
    "dataset_from_document",
    "save_dataset",
    "load_dataset",
]

logger = logging.getLogger("distlogit")


@dataclass(frozen=True)
class IngestConfig:
    """Which columns to read and how to turn them into a Dataset.

    ``binarize_rule`` maps a response column name to either
    ``{"threshold": c}`` (code 1 when the numeric cell is >= c) or
    ``{"map": {raw: 0 or 1}}`` (explicit recode of raw cell text).
    Responses without a rule must already contain 0/1 values; nothing
    is ever inferred from the data.  ``prevalence_bounds`` keeps only
    responses whose observed rate lies inside the closed interval.
    """

    predictor_columns: tuple
    response_columns: tuple
    standardize: bool = True
    binarize_rule: dict | None = None
    prevalence_bounds: tuple | None = None

    def __post_init__(self):
        preds = tuple(self.predictor_columns)
        resps = tuple(self.response_columns)
        object.__setattr__(self, "predictor_columns", preds)
        object.__setattr__(self, "response_columns", resps)
        if not preds or not resps:
            raise ValueError("predictor and response column lists must be nonempty")
        if len(set(preds)) != len(preds) or len(set(resps)) != len(resps):
            raise ValueError("column lists contain duplicates")
        overlap = set(preds) & set(resps)
        if overlap:
            raise ValueError(f"columns used as both predictor and response: "
                             f"{sorted(overlap)}")
        if self.prevalence_bounds is not None:
            lo, hi = self.prevalence_bounds
            if not (0.0 <= lo < hi <= 1.0):
                raise ValueError("prevalence bounds must satisfy 0 <= low < high <= 1")
            object.__setattr__(self, "prevalence_bounds", (float(lo), float(hi)))
        if self.binarize_rule is not None:
            unknown = set(self.binarize_rule) - set(resps)
            if unknown:
                raise ValueError(f"binarize_rule names non-response columns: "
                                 f"{sorted(unknown)}")
            for name, rule in self.binarize_rule.items():
                if set(rule) not in ({"threshold"}, {"map"}):
                    raise ValueError(f"binarize_rule for '{name}' must have exactly "
                                     f"one of 'threshold' or 'map'")


def _parse_number(cell: str, line: int, column: str) -> float:
    text = cell.strip()
    if not text:
        raise DataError(f"missing value at line {line}, column '{column}'")
    try:
        return float(text)
    except ValueError:
        raise DataError(f"non-numeric value '{text}' at line {line}, "
                        f"column '{column}'") from None


def _binarize(cell: str, rule, line: int, column: str) -> float:
    text = cell.strip()
    if not text:
        raise DataError(f"missing value at line {line}, column '{column}'")
    if rule is None:
        value = _parse_number(cell, line, column)
        if value not in (0.0, 1.0):
            raise DataError(
                f"response value '{text}' at line {line}, column '{column}' "
                f"is not 0/1; supply a binarize_rule for this column")
        return value
    if "threshold" in rule:
        return 1.0 if _parse_number(cell, line, column) >= rule["threshold"] else 0.0
    mapped = rule["map"].get(text)
    if mapped is None:
        raise DataError(f"unmapped response value '{text}' at line {line}, "
                        f"column '{column}'")
    return float(mapped)


def _read_rows(path: Path):
    if not path.is_file():
        raise DataError(f"data file not found: {path}")
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = [cell.strip() for cell in next(reader)]
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        rows = [row for row in reader
                if row and any(cell.strip() for cell in row)]
    if not rows:
        raise DataError(f"{path} has a header but no data rows")
    width = len(header)
    for i, row in enumerate(rows, start=2):
        if len(row) != width:
            raise DataError(f"line {i} has {len(row)} cells, expected {width}")
    return header, rows


def _locate(header, names, path: Path) -> dict:
    positions = {}
    duplicated = set()
    for j, name in enumerate(header):
        if name in positions:
            duplicated.add(name)
        else:
            positions[name] = j
    for name in names:
        if name in duplicated:
            raise DataError(f"column '{name}' appears more than once "
                            f"in {path.name}")
        if name not in positions:
            raise DataError(f"column '{name}' not found in {path.name}")
    return positions


def read_predictor_columns(path, names) -> np.ndarray:
    """Raw numeric columns from a CSV, in the requested order.

    Used to score new data against an already-fitted model, whose stored
    offsets and factors are applied afterwards.
    """
    path = Path(path)
    names = list(names)
    header, rows = _read_rows(path)
    positions = _locate(header, names, path)
    x = np.empty((len(rows), len(names)))
    for j, name in enumerate(names):
        col = positions[name]
        for i, row in enumerate(rows):
            x[i, j] = _parse_number(row[col], i + 2, name)
    return x


def load_csv(path, ingest: IngestConfig) -> Dataset:
    """Read a UTF-8 comma-separated file with a header row into a Dataset.

    Predictor columns are centered (and standardized when enabled) after
    any response filtering.  Responses whose prevalence falls outside the
    configured closed bounds are dropped with a logged notice.
    """
    path = Path(path)
    header, rows = _read_rows(path)
    wanted = list(ingest.predictor_columns) + list(ingest.response_columns)
    positions = _locate(header, wanted, path)

    rules = ingest.binarize_rule or {}
    x = np.empty((len(rows), len(ingest.predictor_columns)))
    for j, name in enumerate(ingest.predictor_columns):
        col = positions[name]
        for i, row in enumerate(rows):
            x[i, j] = _parse_number(row[col], i + 2, name)
    y = np.empty((len(rows), len(ingest.response_columns)))
    for j, name in enumerate(ingest.response_columns):
        col = positions[name]
        rule = rules.get(name)
        for i, row in enumerate(rows):
            y[i, j] = _binarize(row[col], rule, i + 2, name)

    kept_names = list(ingest.response_columns)
    if ingest.prevalence_bounds is not None:
        lo, hi = ingest.prevalence_bounds
        rates = y.mean(axis=0)
        keep = [j for j, rate in enumerate(rates) if lo <= rate <= hi]
        for j, rate in enumerate(rates):
            if j not in keep:
                logger.info("dropped response '%s': prevalence %.4f outside "
                            "[%g, %g]", kept_names[j], rate, lo, hi)
        if not keep:
            raise DataError("prevalence bounds removed every response")
        y = y[:, keep]
        kept_names = [kept_names[j] for j in keep]

    for j, name in enumerate(kept_names):
        if y[:, j].min() == y[:, j].max():
            raise DataError(f"response '{name}' has zero variance")

    return Dataset.from_arrays(
        x, y,
        predictor_names=tuple(ingest.predictor_columns),
        response_names=tuple(kept_names),
        standardize=ingest.standardize,
    )


# --------------------------------------------------------- configuration #

_CONFIG_DEFAULTS = {
    "standardize": True,
    "tol": 1e-8,
    "max_iter": 65536,
    "restarts": 0,
}


def parse_fit_config(source, seed: int = 0):
    """Parse a config document into ``(FitConfig, IngestConfig)``.

    ``source`` may be a path to a JSON file or an already-parsed mapping.
    The random seed comes from the caller (a command-line flag), not the
    document, so two invocations with different seeds can share a config.
    """
    if isinstance(source, (str, Path)):
        doc = read_document(source, "config")
    else:
        doc = source
        validate_document(doc, "config")

    predictors = list(doc["predictors"])
    responses = list(doc["responses"])
    n_dimensions = doc["dimensions"]

    assignment = None
    constraints = doc.get("constraints")
    if constraints:
        widths = {len(row) for row in constraints}
        if widths != {n_dimensions}:
            raise ConfigError(
                f"constraints: rows have widths {sorted(widths)}, "
                f"expected dimensions = {n_dimensions}")
        if len(constraints) != len(responses):
            raise ConfigError(
                f"constraints: {len(constraints)} rows for "
                f"{len(responses)} responses")
        matrix = np.array(constraints, dtype=int)
        zero_rows = np.flatnonzero(matrix.sum(axis=1) == 0)
        if zero_rows.size:
            raise ConfigError(f"constraints: response "
                              f"'{responses[zero_rows[0]]}' is assigned "
                              f"no dimension")
        zero_cols = np.flatnonzero(matrix.sum(axis=0) == 0)
        if zero_cols.size:
            raise ConfigError(f"constraints: dimension {zero_cols[0] + 1} "
                              f"has no responses")
        assignment = DimensionAssignment(matrix)

    bounds = doc.get("prevalence_bounds")
    if bounds is not None:
        lo, hi = bounds
        if not lo < hi:
            raise ConfigError("prevalence_bounds: low must be below high")
        bounds = (float(lo), float(hi))

    try:
        ingest = IngestConfig(
            predictor_columns=tuple(predictors),
            response_columns=tuple(responses),
            standardize=doc.get("standardize", _CONFIG_DEFAULTS["standardize"]),
            binarize_rule=doc.get("binarize_rule"),
            prevalence_bounds=bounds,
        )
        fit = FitConfig(
            n_dimensions=n_dimensions,
            assignment=assignment,
            tol=doc.get("tol", _CONFIG_DEFAULTS["tol"]),
            max_iter=doc.get("max_iter", _CONFIG_DEFAULTS["max_iter"]),
            restarts=doc.get("restarts", _CONFIG_DEFAULTS["restarts"]),
            seed=seed,
        )
    except ValueError as err:
        raise ConfigError(str(err)) from err
    return fit, ingest


# ----------------------------------------------------------- interchange #


def dataset_to_document(dataset: Dataset) -> dict:
    return {
        "format": "dataset",
        "version": 1,
        "predictor_names": list(dataset.predictor_names),
        "response_names": list(dataset.response_names),
        "centering_offsets": dataset.centering_offsets.tolist(),
        "scaling_factors": dataset.scaling_factors.tolist(),
        "X": dataset.X.tolist(),
        "Y": dataset.Y.tolist(),
    }


def dataset_from_document(doc) -> Dataset:
    validate_document(doc, "dataset")
    x = np.array(doc["X"], dtype=np.float64)
    y = np.array(doc["Y"], dtype=np.float64)
    n_predictors = len(doc["predictor_names"])
    n_responses = len(doc["response_names"])
    if x.ndim != 2 or x.shape[1] != n_predictors:
        raise DataError("dataset document: X width does not match "
                        "predictor_names")
    if y.ndim != 2 or y.shape[1] != n_responses:
        raise DataError("dataset document: Y width does not match "
                        "response_names")
    if y.shape[0] != x.shape[0]:
        raise DataError("dataset document: X and Y row counts differ")
    offsets = np.array(doc["centering_offsets"], dtype=np.float64)
    factors = np.array(doc["scaling_factors"], dtype=np.float64)
    if offsets.shape != (n_predictors,) or factors.shape != (n_predictors,):
        raise DataError("dataset document: offsets/factors length does not "
                        "match predictor_names")
    return Dataset(
        X=x,
        Y=y,
        indicators=indicator_matrix(y),
        centering_offsets=offsets,
        scaling_factors=factors,
        predictor_names=tuple(doc["predictor_names"]),
        response_names=tuple(doc["response_names"]),
    )


def save_dataset(dataset: Dataset, path) -> None:
    write_document(dataset_to_document(dataset), path)


def load_dataset(path) -> Dataset:
    return dataset_from_document(read_document(path, "dataset"))
