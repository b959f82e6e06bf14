"""Distance-based simultaneous binary logistic regression in a shared low-dimensional space."""

from .biplot import BiplotGeometry, Window, build_geometry, render_svg
from .dataio import (
    IngestConfig,
    load_csv,
    load_dataset,
    parse_fit_config,
    save_dataset,
)
from .errors import (
    ConfigError,
    DataError,
    DegenerateSpecError,
    DistlogitError,
    SingularDesignError,
)
from .estimator import LogisticDistanceClassifier
from .model import (
    Dataset,
    DimensionAssignment,
    ModelParams,
    category_coordinates,
    class_probabilities,
    count_representable_profiles,
    deviance,
    implied_coefficients,
    log_odds,
    predict,
    split_category_coordinates,
    subject_scores,
)
from .oracles import SyntheticSpec, generate_synthetic, run_validation
from .selection import (
    ModelSummary,
    QualityReport,
    ScanResult,
    count_parameters,
    dimension_scan,
    fit_univariate_logistic,
    information_criteria,
    predictor_drop_scan,
    quality_of_representation,
)
from .solver import FitConfig, FitResult, fit_constrained, fit_unconstrained

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ConfigError",
    "DataError",
    "DegenerateSpecError",
    "DistlogitError",
    "SingularDesignError",
    "Dataset",
    "DimensionAssignment",
    "ModelParams",
    "category_coordinates",
    "class_probabilities",
    "count_representable_profiles",
    "deviance",
    "implied_coefficients",
    "log_odds",
    "predict",
    "split_category_coordinates",
    "subject_scores",
    "FitConfig",
    "FitResult",
    "fit_unconstrained",
    "fit_constrained",
    "ModelSummary",
    "QualityReport",
    "ScanResult",
    "count_parameters",
    "information_criteria",
    "fit_univariate_logistic",
    "quality_of_representation",
    "dimension_scan",
    "predictor_drop_scan",
    "IngestConfig",
    "load_csv",
    "parse_fit_config",
    "save_dataset",
    "load_dataset",
    "BiplotGeometry",
    "Window",
    "build_geometry",
    "render_svg",
    "SyntheticSpec",
    "generate_synthetic",
    "run_validation",
    "LogisticDistanceClassifier",
]
