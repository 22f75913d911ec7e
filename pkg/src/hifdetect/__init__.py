"""High-impedance-fault detection: simulation, detectors, and scoring.

The package splits into simulation of arc measurement data (`hifsim`),
three detectors (`pca`, `fda`, `svm`), shared numerics and I/O
(`numerics`, `dataio`, `modelio`), run scoring (`evaluation`, `plots`),
and a command-line front end (`cli`, installed as `hifdetect`).
"""

from .dataio import (
    ClassCode,
    DataMatrix,
    Normalizer,
    normalize_apply,
    normalize_fit,
    read_csv,
    write_csv,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DataFormatError,
    HifDetectError,
    IllConditionedError,
    InvalidInputError,
    UndefinedMetricError,
)
from .evaluation import (
    DetectionReport,
    build_report,
    confusion,
    dependability,
    location_accuracy,
    read_report,
    security,
    write_report,
)
from .fda import FdaModel, classify, discriminant, fda_project, fda_t2, fit_fda, load_fda, save_fda
from .hifsim import (
    ArcParams,
    ArcScenario,
    ScenarioSpec,
    WaveformSet,
    arc_current,
    extract_features,
    generate_dataset,
    paper_profile,
    robustness_profile,
    simulate_feeder,
)
from .numerics import derive_seed, eig_generalized, eig_symmetric, f_quantile, svd
from .pca import PcaModel, detect, fit_pca, load_pca, save_pca, t2_statistic, t2_threshold
from .svm import (
    KernelSpec,
    MulticlassSvm,
    SvmClassifier,
    auc,
    cross_validate_c,
    decision_value,
    kkt_audit,
    load_svm,
    predict_binary,
    predict_multiclass,
    save_svm,
    train_binary,
    train_multiclass,
)

__version__ = "0.1.0"

__all__ = [
    "ArcParams",
    "ArcScenario",
    "ClassCode",
    "ConfigError",
    "ConvergenceError",
    "DataFormatError",
    "DataMatrix",
    "DetectionReport",
    "FdaModel",
    "HifDetectError",
    "IllConditionedError",
    "InvalidInputError",
    "KernelSpec",
    "MulticlassSvm",
    "Normalizer",
    "PcaModel",
    "ScenarioSpec",
    "SvmClassifier",
    "UndefinedMetricError",
    "WaveformSet",
    "arc_current",
    "auc",
    "build_report",
    "classify",
    "confusion",
    "cross_validate_c",
    "decision_value",
    "dependability",
    "derive_seed",
    "detect",
    "discriminant",
    "eig_generalized",
    "eig_symmetric",
    "extract_features",
    "f_quantile",
    "fda_project",
    "fda_t2",
    "fit_fda",
    "fit_pca",
    "generate_dataset",
    "kkt_audit",
    "load_fda",
    "load_pca",
    "load_svm",
    "location_accuracy",
    "normalize_apply",
    "normalize_fit",
    "paper_profile",
    "predict_binary",
    "predict_multiclass",
    "read_csv",
    "read_report",
    "robustness_profile",
    "save_fda",
    "save_pca",
    "save_svm",
    "security",
    "simulate_feeder",
    "svd",
    "t2_statistic",
    "t2_threshold",
    "train_binary",
    "train_multiclass",
    "write_csv",
    "write_report",
]
