"""Command-line front end.

Subcommands: ``fit``, ``scan``, ``biplot``, ``predict``, ``validate``.
Exit codes: 0 success, 1 input error, 2 non-convergence, 3 validation
failure.  All documents are deterministic functions of their inputs;
nothing carries a timestamp, so identical invocations produce identical
bytes.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .biplot import Window, build_geometry, geometry_to_document, render_svg
from .dataio import load_csv, parse_fit_config, read_predictor_columns
from .errors import ConfigError, DistlogitError
from .model import (
    ModelParams,
    category_coordinates,
    implied_coefficients,
    predict,
)
from .oracles import DEFAULT_CURVATURE, run_validation
from .schemas import number_or_null, read_document, validate_document, write_document
from .selection import (
    count_parameters,
    dimension_scan,
    ModelSummary,
    predictor_drop_scan,
    quality_of_representation,
)
from .solver import FitConfig, fit_constrained, fit_unconstrained

__all__ = ["main", "fit_to_document", "params_from_fit_document"]

logger = logging.getLogger("distlogit")


# -------------------------------------------------------------- documents #


def fit_to_document(dataset, config: FitConfig, fit, quality) -> dict:
    """Assemble the fit document from a dataset, its config, and results."""
    intercepts, coefficients = implied_coefficients(fit.params)
    doc = {
        "format": "fit",
        "version": 1,
        "model": {
            "n_dimensions": config.n_dimensions,
            "constrained": config.assignment is not None,
            "assignment": None if config.assignment is None
            else config.assignment.matrix.tolist(),
            "location_update": config.location_update,
        },
        "data": {
            "n": dataset.n,
            "predictor_names": list(dataset.predictor_names),
            "response_names": list(dataset.response_names),
            "centering_offsets": dataset.centering_offsets.tolist(),
            "scaling_factors": dataset.scaling_factors.tolist(),
            "predictor_sd": dataset.X.std(axis=0, ddof=1).tolist(),
        },
        "parameters": {
            "weights": fit.params.weights.tolist(),
            "discriminations": fit.params.discriminations.tolist(),
            "locations": fit.params.locations.tolist(),
            "category_points": category_coordinates(fit.params).tolist(),
        },
        "deviance": float(fit.deviance),
        "converged": bool(fit.converged),
        "iterations": int(fit.iterations),
        "trace": [float(v) for v in fit.trace],
        "summary": _summary_dict(ModelSummary.build(
            f"M={config.n_dimensions}",
            float(fit.deviance),
            count_parameters(dataset.n_predictors, dataset.n_responses,
                             config.n_dimensions, config.assignment),
            dataset.n,
        )),
        "implied_coefficients": [
            {
                "response": name,
                "intercept": float(intercepts[r]),
                "coefficients": coefficients[:, r].tolist(),
            }
            for r, name in enumerate(dataset.response_names)
        ],
        "quality": {
            "intercept_deviance": quality.intercept_deviance.tolist(),
            "logistic_deviance": quality.logistic_deviance.tolist(),
            "model_deviance": quality.model_deviance.tolist(),
            "quality": number_or_null(quality.quality),
            "undefined": list(quality.undefined),
        },
        "flags": {
            "degenerate_responses": [dataset.response_names[r]
                                     for r in fit.degenerate_responses],
            "quasi_separation": bool(fit.quasi_separation),
        },
    }
    validate_document(doc, "fit")
    return doc


def _summary_dict(summary: ModelSummary) -> dict:
    return {
        "label": summary.label,
        "deviance": float(summary.deviance),
        "n_params": int(summary.n_params),
        "aic": float(summary.aic),
        "bic": float(summary.bic),
        "n": int(summary.n),
    }


def params_from_fit_document(doc) -> ModelParams:
    block = doc["parameters"]
    return ModelParams(
        np.array(block["weights"], dtype=np.float64),
        np.array(block["discriminations"], dtype=np.float64),
        np.array(block["locations"], dtype=np.float64),
    )


def scan_to_document(scan, n: int) -> dict:
    rows = []
    for row in scan.rows:
        if row.summary is None:
            rows.append({"label": row.label, "deviance": None,
                         "n_params": None, "aic": None, "bic": None,
                         "converged": False, "error": row.error})
        else:
            entry = _summary_dict(row.summary)
            entry["converged"] = bool(row.converged)
            entry["error"] = None
            del entry["n"]
            rows.append(entry)
    doc = {
        "format": "scan",
        "version": 1,
        "scan_type": scan.scan_type,
        "n": n,
        "rows": rows,
        "best_aic": scan.best_aic_label,
        "best_bic": scan.best_bic_label,
    }
    validate_document(doc, "scan")
    return doc


def render_scan_table(doc) -> str:
    """Aligned text table with the information-criterion minima marked."""
    header = ["model", "deviance", "#params", "AIC", "BIC", "note"]
    body = []
    for row in doc["rows"]:
        if row["error"] is not None:
            body.append([row["label"], "-", "-", "-", "-",
                         f"error: {row['error']}"])
            continue
        notes = []
        if row["label"] == doc["best_aic"]:
            notes.append("min AIC")
        if row["label"] == doc["best_bic"]:
            notes.append("min BIC")
        if not row["converged"]:
            notes.append("not converged")
        body.append([
            row["label"],
            f"{row['deviance']:.2f}",
            str(row["n_params"]),
            f"{row['aic']:.2f}",
            f"{row['bic']:.2f}",
            ", ".join(notes),
        ])
    widths = [max(len(line[i]) for line in [header] + body)
              for i in range(len(header))]
    rendered = []
    for line in [header] + body:
        rendered.append("  ".join(cell.ljust(width)
                                  for cell, width in zip(line, widths)).rstrip())
    return "\n".join(rendered) + "\n"


# ------------------------------------------------------------- subcommands #


def _fit_dataset(args):
    config, ingest = parse_fit_config(args.config, seed=args.seed)
    dataset = load_csv(args.data, ingest)
    return config, dataset


def _run_fit(dataset, config: FitConfig):
    if config.assignment is not None:
        return fit_constrained(dataset, config)
    return fit_unconstrained(dataset, config)


def cmd_fit(args) -> int:
    config, dataset = _fit_dataset(args)
    fit = _run_fit(dataset, config)
    quality = quality_of_representation(dataset, fit)
    write_document(fit_to_document(dataset, config, fit, quality), args.out)
    if not fit.converged:
        logger.warning("fit did not converge within %d iterations; "
                       "document written to %s", config.max_iter, args.out)
        return 2
    logger.info("fit converged: deviance %.6f after %d iterations",
                fit.deviance, fit.iterations)
    return 0


def _parse_dims_range(text: str):
    parts = text.split("..")
    try:
        if len(parts) == 1:
            return [int(parts[0])]
        if len(parts) == 2:
            lo, hi = int(parts[0]), int(parts[1])
            if lo > hi:
                raise ValueError
            return list(range(lo, hi + 1))
    except ValueError:
        pass
    raise ConfigError(f"cannot parse --dims '{text}'; expected e.g. 2 or 1..4")


def cmd_scan(args) -> int:
    if (args.dims is None) == (not args.drop_predictors):
        raise ConfigError("scan needs exactly one of --dims or --drop-predictors")
    config, dataset = _fit_dataset(args)
    if args.dims is not None:
        if config.assignment is not None:
            raise ConfigError("dimension scans use unconstrained fits; remove "
                              "the constraints from the config")
        scan = dimension_scan(dataset, _parse_dims_range(args.dims), config)
    else:
        scan = predictor_drop_scan(dataset, config)
    doc = scan_to_document(scan, dataset.n)
    write_document(doc, args.out)
    if not args.quiet:
        sys.stdout.write(render_scan_table(doc))
    succeeded = [row for row in doc["rows"] if row["error"] is None]
    if not succeeded:
        logger.warning("every scan row failed")
        return 1
    if any(not row["converged"] for row in succeeded):
        return 2
    return 0


def _parse_pair(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"cannot parse --dims '{text}'; expected i,j")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise ConfigError(f"cannot parse --dims '{text}'; expected i,j") from None


def _parse_window(text: str):
    if text == "auto":
        return None
    parts = text.split(",")
    if len(parts) != 4:
        raise ConfigError(f"cannot parse --window '{text}'; expected "
                          f"auto or x0,x1,y0,y1")
    try:
        values = [float(part) for part in parts]
        return Window(*values)
    except ValueError as err:
        raise ConfigError(f"bad --window '{text}': {err}") from None


def cmd_biplot(args) -> int:
    doc = read_document(args.model, "fit")
    params = params_from_fit_document(doc)
    data_block = doc["data"]
    raw = read_predictor_columns(args.data, data_block["predictor_names"])
    offsets = np.array(data_block["centering_offsets"], dtype=np.float64)
    factors = np.array(data_block["scaling_factors"], dtype=np.float64)
    x = (raw - offsets) / factors
    geometry = build_geometry(
        params,
        x,
        data_block["predictor_names"],
        data_block["response_names"],
        np.array(data_block["predictor_sd"], dtype=np.float64),
        pair=_parse_pair(args.dims),
        window=_parse_window(args.window),
    )
    write_document(geometry_to_document(geometry), args.out)
    if args.svg:
        decision = True if args.decision_lines else None
        with open(args.svg, "w", encoding="utf-8") as handle:
            handle.write(render_svg(geometry, decision_lines=decision))
    logger.info("wrote biplot geometry for dimensions %s", args.dims)
    return 0


def cmd_predict(args) -> int:
    doc = read_document(args.model, "fit")
    params = params_from_fit_document(doc)
    data_block = doc["data"]
    raw = read_predictor_columns(args.input, data_block["predictor_names"])
    probabilities, classes = predict(
        raw,
        params,
        centering_offsets=np.array(data_block["centering_offsets"]),
        scaling_factors=np.array(data_block["scaling_factors"]),
    )
    out = {
        "format": "predictions",
        "version": 1,
        "response_names": list(data_block["response_names"]),
        "probabilities": probabilities.tolist(),
        "classes": classes.astype(int).tolist(),
    }
    validate_document(out, "predictions")
    write_document(out, args.out)
    return 0


def cmd_validate(args) -> int:
    results = run_validation(seed=args.seed, curvature=args.curvature,
                             quick=args.quick)
    width = max(len(result.name) for result in results)
    if not args.quiet:
        for result in results:
            status = "PASS" if result.passed else "FAIL"
            sys.stdout.write(f"{result.name.ljust(width)}  {status}  "
                             f"{result.detail}\n")
    failed = [result.name for result in results if not result.passed]
    if failed:
        print(f"validation failed: {', '.join(failed)}", file=sys.stderr)
        return 3
    return 0


# ------------------------------------------------------------------ wiring #


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="distlogit",
        description="Distance-based logistic models for multivariate "
                    "binary data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0,
                       help="random seed for restart jitter")
        p.add_argument("--quiet", action="store_true",
                       help="suppress informational output")

    p = sub.add_parser("fit", help="fit one model and write a fit document")
    p.add_argument("--data", required=True, help="CSV data file")
    p.add_argument("--config", required=True, help="JSON fit configuration")
    p.add_argument("--out", required=True, help="output fit document path")
    common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("scan", help="compare fits across dimensions or "
                                    "with single predictors removed")
    p.add_argument("--data", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output scan document path")
    p.add_argument("--dims", help="dimension counts to fit, e.g. 1..4")
    p.add_argument("--drop-predictors", action="store_true",
                   help="refit once per left-out predictor")
    common(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("biplot", help="export plot geometry and SVG for "
                                      "a fitted model")
    p.add_argument("--model", required=True, help="fit document")
    p.add_argument("--data", required=True, help="CSV with the training "
                                                 "predictor columns")
    p.add_argument("--out", required=True, help="output geometry document")
    p.add_argument("--svg", help="also render an SVG to this path")
    p.add_argument("--dims", default="1,2", help="dimension pair, e.g. 1,2")
    p.add_argument("--window", default="auto",
                   help="auto or x0,x1,y0,y1 in model coordinates")
    p.add_argument("--decision-lines", action="store_true",
                   help="draw decision lines even for many responses")
    common(p)
    p.set_defaults(func=cmd_biplot)

    p = sub.add_parser("predict", help="score new rows with a fit document")
    p.add_argument("--model", required=True, help="fit document")
    p.add_argument("--input", required=True, help="CSV with predictor columns")
    p.add_argument("--out", required=True, help="output predictions document")
    common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("validate", help="run the numerical arbitration suite")
    p.add_argument("--curvature", type=float, default=DEFAULT_CURVATURE,
                   help="majorization curvature (testing hook)")
    p.add_argument("--quick", action="store_true",
                   help="smaller sample sizes for a faster run")
    common(p)
    p.set_defaults(func=cmd_validate)
    return parser


def _setup_logging(quiet: bool) -> None:
    if not logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(message)s"))
        logger.addHandler(handler)
    logger.setLevel(logging.WARNING if quiet else logging.INFO)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse reserves 2 for usage errors; this tool uses 2 for
        # non-convergence, so usage problems map to the input-error code
        return 0 if exc.code in (0, None) else 1
    _setup_logging(args.quiet)
    try:
        return args.func(args)
    except DistlogitError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
