"""Document formats shared by the command line tools.

Every artifact the tools read or write is plain JSON carrying a
``format`` marker (the fit configuration is the one exception: its key
set is fixed by the config contract and has no marker). Floats are
serialized with Python's shortest round-trip repr, so a reloaded
document reproduces the stored doubles bit for bit. NaN is never
emitted; undefined quality values appear as null.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from jsonschema import Draft202012Validator

from .errors import ConfigError, DataError

__all__ = [
    "SCHEMAS",
    "validate_document",
    "dumps_document",
    "write_document",
    "read_document",
    "number_or_null",
]

_NUMBERS = {"type": "array", "items": {"type": "number"}}
_MATRIX = {"type": "array", "items": _NUMBERS}
_NAMES = {"type": "array", "items": {"type": "string", "minLength": 1}, "minItems": 1}
_BINARY_ROW = {"type": "array", "items": {"type": "integer", "enum": [0, 1]},
               "minItems": 1}
_POINT = {"type": "array", "items": {"type": "number"},
          "minItems": 2, "maxItems": 2}


def _doc_header(kind: str) -> dict:
    return {
        "format": {"const": kind},
        "version": {"const": 1},
    }


CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["dimensions", "predictors", "responses"],
    "properties": {
        "dimensions": {"type": "integer", "minimum": 1},
        "constraints": {
            "type": ["array", "null"],
            "items": _BINARY_ROW,
        },
        "standardize": {"type": "boolean"},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "max_iter": {"type": "integer", "minimum": 1},
        "restarts": {"type": "integer", "minimum": 0},
        "prevalence_bounds": {
            "type": ["array", "null"],
            "items": {"type": "number", "minimum": 0, "maximum": 1},
            "minItems": 2,
            "maxItems": 2,
        },
        "predictors": _NAMES,
        "responses": _NAMES,
        "binarize_rule": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "oneOf": [
                    {
                        "additionalProperties": False,
                        "required": ["threshold"],
                        "properties": {"threshold": {"type": "number"}},
                    },
                    {
                        "additionalProperties": False,
                        "required": ["map"],
                        "properties": {
                            "map": {
                                "type": "object",
                                "minProperties": 1,
                                "additionalProperties": {
                                    "type": "integer", "enum": [0, 1]
                                },
                            }
                        },
                    },
                ],
            },
        },
    },
}

DATASET_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["format", "version", "predictor_names", "response_names",
                 "centering_offsets", "scaling_factors", "X", "Y"],
    "properties": {
        **_doc_header("dataset"),
        "predictor_names": _NAMES,
        "response_names": _NAMES,
        "centering_offsets": _NUMBERS,
        "scaling_factors": _NUMBERS,
        "X": _MATRIX,
        "Y": _MATRIX,
    },
}

FIT_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["format", "version", "model", "data", "parameters",
                 "deviance", "converged", "iterations", "summary",
                 "implied_coefficients", "quality", "flags"],
    "properties": {
        **_doc_header("fit"),
        "model": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n_dimensions", "constrained", "assignment",
                         "location_update"],
            "properties": {
                "n_dimensions": {"type": "integer", "minimum": 1},
                "constrained": {"type": "boolean"},
                "assignment": {"type": ["array", "null"], "items": _BINARY_ROW},
                "location_update": {"enum": ["min-norm", "equal"]},
            },
        },
        "data": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n", "predictor_names", "response_names",
                         "centering_offsets", "scaling_factors",
                         "predictor_sd"],
            "properties": {
                "n": {"type": "integer", "minimum": 1},
                "predictor_names": _NAMES,
                "response_names": _NAMES,
                "centering_offsets": _NUMBERS,
                "scaling_factors": _NUMBERS,
                "predictor_sd": _NUMBERS,
            },
        },
        "parameters": {
            "type": "object",
            "additionalProperties": False,
            "required": ["weights", "discriminations", "locations",
                         "category_points"],
            "properties": {
                "weights": _MATRIX,
                "discriminations": _MATRIX,
                "locations": _MATRIX,
                "category_points": _MATRIX,
            },
        },
        "deviance": {"type": "number"},
        "converged": {"type": "boolean"},
        "iterations": {"type": "integer", "minimum": 0},
        "trace": _NUMBERS,
        "summary": {
            "type": "object",
            "additionalProperties": False,
            "required": ["label", "deviance", "n_params", "aic", "bic", "n"],
            "properties": {
                "label": {"type": "string"},
                "deviance": {"type": "number"},
                "n_params": {"type": "integer", "minimum": 0},
                "aic": {"type": "number"},
                "bic": {"type": "number"},
                "n": {"type": "integer", "minimum": 1},
            },
        },
        "implied_coefficients": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["response", "intercept", "coefficients"],
                "properties": {
                    "response": {"type": "string"},
                    "intercept": {"type": "number"},
                    "coefficients": _NUMBERS,
                },
            },
        },
        "quality": {
            "type": "object",
            "additionalProperties": False,
            "required": ["intercept_deviance", "logistic_deviance",
                         "model_deviance", "quality", "undefined"],
            "properties": {
                "intercept_deviance": _NUMBERS,
                "logistic_deviance": _NUMBERS,
                "model_deviance": _NUMBERS,
                "quality": {"type": "array",
                            "items": {"type": ["number", "null"]}},
                "undefined": {"type": "array", "items": {"type": "integer"}},
            },
        },
        "flags": {
            "type": "object",
            "additionalProperties": False,
            "required": ["degenerate_responses", "quasi_separation"],
            "properties": {
                "degenerate_responses": {"type": "array",
                                         "items": {"type": "string"}},
                "quasi_separation": {"type": "boolean"},
            },
        },
    },
}

SCAN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["format", "version", "scan_type", "n", "rows",
                 "best_aic", "best_bic"],
    "properties": {
        **_doc_header("scan"),
        "scan_type": {"enum": ["dimensions", "drop-predictor"]},
        "n": {"type": "integer", "minimum": 1},
        "rows": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["label", "deviance", "n_params", "aic", "bic",
                             "converged", "error"],
                "properties": {
                    "label": {"type": "string"},
                    "deviance": {"type": ["number", "null"]},
                    "n_params": {"type": ["integer", "null"]},
                    "aic": {"type": ["number", "null"]},
                    "bic": {"type": ["number", "null"]},
                    "converged": {"type": "boolean"},
                    "error": {"type": ["string", "null"]},
                },
            },
        },
        "best_aic": {"type": ["string", "null"]},
        "best_bic": {"type": ["string", "null"]},
    },
}

GEOMETRY_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["format", "version", "dimension_pair", "window",
                 "category_points", "decision_lines", "variable_axes",
                 "subject_points"],
    "properties": {
        **_doc_header("geometry"),
        "dimension_pair": {"type": "array", "items": {"type": "integer"},
                           "minItems": 2, "maxItems": 2},
        "window": {
            "type": "object",
            "additionalProperties": False,
            "required": ["x0", "x1", "y0", "y1"],
            "properties": {k: {"type": "number"} for k in
                           ("x0", "x1", "y0", "y1")},
        },
        "category_points": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["label", "response", "klass", "x", "y"],
                "properties": {
                    "label": {"type": "string"},
                    "response": {"type": "string"},
                    "klass": {"type": "integer", "enum": [0, 1]},
                    "x": {"type": "number"},
                    "y": {"type": "number"},
                },
            },
        },
        "decision_lines": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["response", "midpoint", "direction", "segment"],
                "properties": {
                    "response": {"type": "string"},
                    "midpoint": _POINT,
                    "direction": _POINT,
                    "segment": {
                        "type": ["array", "null"],
                        "items": _POINT,
                        "minItems": 2,
                        "maxItems": 2,
                    },
                },
            },
        },
        "variable_axes": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["predictor", "direction", "sd", "markers",
                             "label_position"],
                "properties": {
                    "predictor": {"type": "string"},
                    "direction": _POINT,
                    "sd": {"type": "number"},
                    "markers": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["t", "x", "y"],
                            "properties": {
                                "t": {"type": "integer"},
                                "x": {"type": "number"},
                                "y": {"type": "number"},
                            },
                        },
                    },
                    "label_position": _POINT,
                },
            },
        },
        "subject_points": _MATRIX,
    },
}

PREDICTIONS_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["format", "version", "response_names", "probabilities",
                 "classes"],
    "properties": {
        **_doc_header("predictions"),
        "response_names": _NAMES,
        # probabilities[i][r] = [p(class 0), p(class 1)]
        "probabilities": {
            "type": "array",
            "items": {
                "type": "array",
                "items": {"type": "array", "items": {"type": "number"},
                          "minItems": 2, "maxItems": 2},
            },
        },
        "classes": {
            "type": "array",
            "items": {"type": "array",
                      "items": {"type": "integer", "enum": [0, 1]}},
        },
    },
}

SCHEMAS = {
    "config": CONFIG_SCHEMA,
    "dataset": DATASET_SCHEMA,
    "fit": FIT_SCHEMA,
    "scan": SCAN_SCHEMA,
    "geometry": GEOMETRY_SCHEMA,
    "predictions": PREDICTIONS_SCHEMA,
}

_VALIDATORS = {kind: Draft202012Validator(schema)
               for kind, schema in SCHEMAS.items()}


def validate_document(doc, kind: str) -> None:
    """Check a parsed document against its schema.

    Raises ConfigError for config documents and DataError otherwise,
    pointing at the first offending field.
    """
    if kind not in _VALIDATORS:
        raise ValueError(f"unknown document kind: {kind!r}")
    errors = sorted(_VALIDATORS[kind].iter_errors(doc),
                    key=lambda e: e.json_path)
    if errors:
        first = errors[0]
        cls = ConfigError if kind == "config" else DataError
        raise cls(f"{kind} document invalid at {first.json_path}: "
                  f"{first.message}")


def number_or_null(values) -> list:
    """Floats with NaN mapped to None, ready for strict JSON."""
    out = []
    for v in values:
        v = float(v)
        out.append(None if math.isnan(v) else v)
    return out


def dumps_document(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def write_document(doc, path) -> None:
    Path(path).write_text(dumps_document(doc), encoding="utf-8")


def read_document(path, kind: str):
    """Load and validate a JSON document of the given kind."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise DataError(f"cannot read {path}: {err}") from err
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise DataError(f"{path} is not valid JSON: {err}") from err
    if kind != "config":
        if not isinstance(doc, dict) or doc.get("format") != kind:
            raise DataError(f"{path} is not a {kind} document")
    elif not isinstance(doc, dict):
        raise ConfigError(f"{path} must hold a JSON object")
    validate_document(doc, kind)
    return doc
