"""Model persistence: a one-line JSON envelope plus a trailing CRC32 line.

Envelope fields: format_version, spec, feature_name, lag_param,
class_labels, standardization_stats, parameters. Floats are serialized
via repr and therefore round-trip bit-for-bit, so a loaded model predicts
identically to the one saved.
"""

from __future__ import annotations

import json
import zlib
from pathlib import Path
from typing import Any

import numpy as np

from ..errors import CorruptModelFile
from .base import ClassifierKind, ClassifierSpec, TrainedModel

MODEL_FORMAT_VERSION = 1


def _params_to_jsonable(kind: ClassifierKind, params: dict[str, Any]) -> dict[str, Any]:
    if kind is ClassifierKind.KNN:
        return {
            "train_x": params["train_x"].tolist(),
            "train_y": params["train_y"].tolist(),
            "k": params["k"],
        }
    if kind is ClassifierKind.GAUSSIAN_NB:
        return {key: params[key].tolist() for key in ("log_priors", "means", "variances")}
    if kind is ClassifierKind.LOGISTIC_REGRESSION:
        return {"weights": params["weights"].tolist()}
    # Trees and forests are already nested dicts of python scalars.
    return params


def _params_from_jsonable(kind: ClassifierKind, params: dict[str, Any]) -> dict[str, Any]:
    if kind is ClassifierKind.KNN:
        return {
            "train_x": np.asarray(params["train_x"], dtype=np.float64),
            "train_y": np.asarray(params["train_y"], dtype=np.int64),
            "k": int(params["k"]),
        }
    if kind is ClassifierKind.GAUSSIAN_NB:
        return {
            key: np.asarray(params[key], dtype=np.float64)
            for key in ("log_priors", "means", "variances")
        }
    if kind is ClassifierKind.LOGISTIC_REGRESSION:
        return {"weights": np.asarray(params["weights"], dtype=np.float64)}
    return params


def save_model(model: TrainedModel, path: str | Path) -> None:
    stats = None
    if model.standardization_stats is not None:
        means, stds = model.standardization_stats
        stats = [means.tolist(), stds.tolist()]
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "spec": model.spec.to_dict(),
        "feature_name": model.feature_name,
        "lag_param": model.lag_param,
        "class_labels": model.class_labels,
        "standardization_stats": stats,
        "n_features": model.n_features,
        "parameters": _params_to_jsonable(model.spec.kind, model.parameters),
    }
    body = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    crc = zlib.crc32(body.encode("utf-8")) & 0xFFFFFFFF
    Path(path).write_text(f"{body}\ncrc32:{crc:08x}\n", encoding="utf-8")


def load_model(path: str | Path) -> TrainedModel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise CorruptModelFile(f"cannot read model file {path}: {exc}") from exc

    lines = [line for line in text.splitlines() if line]
    if len(lines) < 2 or not lines[-1].startswith("crc32:"):
        raise CorruptModelFile(f"{path}: missing checksum line (truncated file?)")
    body = "\n".join(lines[:-1])
    try:
        expected = int(lines[-1][len("crc32:"):], 16)
    except ValueError:
        raise CorruptModelFile(f"{path}: malformed checksum line") from None
    actual = zlib.crc32(body.encode("utf-8")) & 0xFFFFFFFF
    if actual != expected:
        raise CorruptModelFile(f"{path}: checksum mismatch ({actual:08x} != {expected:08x})")

    try:
        payload = json.loads(body)
    except json.JSONDecodeError as exc:
        raise CorruptModelFile(f"{path}: invalid JSON payload: {exc}") from exc

    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise CorruptModelFile(
            f"{path}: unsupported format_version {version!r}; this build reads version {MODEL_FORMAT_VERSION}"
        )

    spec = ClassifierSpec.from_dict(payload["spec"])
    stats = None
    if payload["standardization_stats"] is not None:
        means, stds = payload["standardization_stats"]
        stats = (np.asarray(means, dtype=np.float64), np.asarray(stds, dtype=np.float64))
    return TrainedModel(
        spec=spec,
        feature_name=payload["feature_name"],
        lag_param=payload["lag_param"],
        class_labels=list(payload["class_labels"]),
        parameters=_params_from_jsonable(spec.kind, payload["parameters"]),
        standardization_stats=stats,
        n_features=int(payload["n_features"]),
    )
