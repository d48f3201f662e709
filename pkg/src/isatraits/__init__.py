"""isatraits: endianness and instruction-size detection for unknown-ISA binaries."""

from .corpus import (
    BinarySample,
    CorpusManifest,
    Endianness,
    InstructionSizeSpec,
    IsaLabel,
    SampleRef,
    SizeKind,
    generate_synthetic_endian,
    generate_synthetic_fixedwidth,
    parse_label_registry,
    scan_corpus,
)
from .evaluate import (
    FeatureConfig,
    Task,
    compute_baseline,
    grid_search_c,
    grid_search_lag,
    plan_logocv,
    predict_unknown,
    run_evaluation,
)
from .features import (
    FeatureVector,
    LaggedWindowPair,
    autocorr_at_lag,
    autocorrelation_feature,
    bigram_histogram,
    endianness_signatures,
    mean_curve_by_class,
    pearson_r,
)

__version__ = "0.1.0"

__all__ = [
    "BinarySample",
    "CorpusManifest",
    "Endianness",
    "FeatureConfig",
    "FeatureVector",
    "InstructionSizeSpec",
    "IsaLabel",
    "LaggedWindowPair",
    "SampleRef",
    "SizeKind",
    "Task",
    "__version__",
    "autocorr_at_lag",
    "autocorrelation_feature",
    "bigram_histogram",
    "compute_baseline",
    "endianness_signatures",
    "generate_synthetic_endian",
    "generate_synthetic_fixedwidth",
    "grid_search_c",
    "grid_search_lag",
    "mean_curve_by_class",
    "parse_label_registry",
    "pearson_r",
    "plan_logocv",
    "predict_unknown",
    "run_evaluation",
    "scan_corpus",
]
