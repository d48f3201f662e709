"""Self-contained classifier suite behind a single fit/predict interface."""

from .base import (
    CLASSIFIER_NAMES,
    SUITE_NAMES,
    ClassifierKind,
    ClassifierSpec,
    TrainedModel,
    fit,
    name_of_spec,
    predict,
    spec_from_name,
)
from .serialize import MODEL_FORMAT_VERSION, load_model, save_model

__all__ = [
    "CLASSIFIER_NAMES",
    "SUITE_NAMES",
    "ClassifierKind",
    "ClassifierSpec",
    "TrainedModel",
    "MODEL_FORMAT_VERSION",
    "fit",
    "predict",
    "name_of_spec",
    "spec_from_name",
    "save_model",
    "load_model",
]
