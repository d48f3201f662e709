"""Leave-one-group-out evaluation, baselines, grid search, and the
two-stage unknown-binary pipeline.

LOGOCV holds out every sample of one ISA per fold, so a fold's model has
never seen its test ISA. Feature accuracy is the unweighted mean of the
per-fold (per-ISA) accuracies; the pooled per-sample accuracy is reported
alongside for transparency, since folds differ in size. The baseline is
the frequency of the most frequent class.

Note on comparing against the baseline: a constant-prediction classifier
can never beat the baseline in pooled (per-sample) accuracy, but its
fold-mean feature accuracy is not bounded that way, because every fold's
test set is a single ISA and therefore usually single-class.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence, TextIO

from .classify import ClassifierKind, ClassifierSpec, TrainedModel, fit, name_of_spec, predict
from .corpus import CorpusManifest, IsaLabel, SizeKind
from .errors import (
    EmptyLabelList,
    InsufficientGroups,
    IsaTraitsError,
    LagTooLarge,
)
from .features import (
    AUTOCORR,
    BIGRAMS,
    ENDSIG,
    FeatureVector,
    autocorrelation_feature,
    bigram_histogram,
    endianness_signatures,
)


class Task(str, Enum):
    ENDIANNESS = "endianness"
    FIXED_VS_VARIABLE = "isvar"
    FIXED_WIDTH = "fixedwidth"


def task_label(label: IsaLabel, task: Task) -> str | None:
    """The class a labeled ISA contributes to a task, or None when the
    ISA is ineligible (bi/unknown endianness, unknown size, etc.)."""
    if task is Task.ENDIANNESS:
        if label.endianness.value in ("LE", "BE"):
            return label.endianness.value
        return None
    if task is Task.FIXED_VS_VARIABLE:
        if label.inst_size.kind in (SizeKind.FIXED, SizeKind.VARIABLE):
            return label.inst_size.kind.value
        return None
    if label.inst_size.kind is SizeKind.FIXED:
        return str(label.inst_size.fixed_bits)
    return None


@dataclass(frozen=True)
class FeatureConfig:
    """Which extractor to run; lag applies to autocorr only."""

    name: str
    lag: int | None = None

    def __post_init__(self):
        if self.name not in (BIGRAMS, ENDSIG, AUTOCORR):
            raise ValueError(f"unknown feature {self.name!r}; valid: bigrams, endsig, autocorr")
        if self.name == AUTOCORR and (self.lag is None or self.lag < 1):
            raise ValueError("autocorr requires a positive lag")


def extract_feature(sample, config: FeatureConfig) -> FeatureVector:
    if config.name == BIGRAMS:
        return bigram_histogram(sample)
    if config.name == ENDSIG:
        return endianness_signatures(sample)
    return autocorrelation_feature(sample, config.lag)


# Tuned lag defaults for the autocorrelation feature, by (task, classifier).
DEFAULT_AUTOCORR_LAGS: dict[tuple[Task, str], int] = {
    (Task.FIXED_VS_VARIABLE, "knn1"): 256,
    (Task.FIXED_VS_VARIABLE, "knn3"): 256,
    (Task.FIXED_VS_VARIABLE, "knn5"): 512,
    (Task.FIXED_VS_VARIABLE, "dtree"): 128,
    (Task.FIXED_VS_VARIABLE, "gnb"): 32,
    (Task.FIXED_VS_VARIABLE, "logreg"): 128,
    (Task.FIXED_VS_VARIABLE, "rforest"): 256,
    (Task.FIXED_WIDTH, "knn1"): 32,
    (Task.FIXED_WIDTH, "knn3"): 128,
    (Task.FIXED_WIDTH, "knn5"): 512,
    (Task.FIXED_WIDTH, "dtree"): 128,
    (Task.FIXED_WIDTH, "gnb"): 256,
    (Task.FIXED_WIDTH, "logreg"): 128,
    (Task.FIXED_WIDTH, "rforest"): 256,
}

# Tuned inverse-regularization defaults for logistic regression.
DEFAULT_LOGREG_C: dict[tuple[Task, str], float] = {
    (Task.ENDIANNESS, ENDSIG): 1e10,
    (Task.ENDIANNESS, BIGRAMS): 1e5,
    (Task.FIXED_VS_VARIABLE, AUTOCORR): 1e0,
    (Task.FIXED_WIDTH, AUTOCORR): 1e1,
}

DEFAULT_LAG_GRID = (16, 32, 64, 128, 256, 512, 1024)
DEFAULT_C_GRID = tuple(10.0 ** e for e in range(1, 12))


# ----------------------------------------------------------------------
# LOGOCV planning
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Fold:
    held_out_isa: str
    train_ids: tuple[int, ...]
    test_ids: tuple[int, ...]


@dataclass(frozen=True)
class LogoSplitPlan:
    groups: tuple[str, ...]
    folds: tuple[Fold, ...]


def eligible_ids(manifest: CorpusManifest, task: Task) -> list[int]:
    return [
        i
        for i, ref in enumerate(manifest.samples)
        if task_label(manifest.label_of(ref), task) is not None
    ]


def plan_logocv(manifest: CorpusManifest, task: Task) -> LogoSplitPlan:
    """One fold per eligible ISA: its samples form the test set, all other
    eligible samples the training set. Folds are ordered by ISA name."""
    ids = eligible_ids(manifest, task)
    by_group: dict[str, list[int]] = {}
    for i in ids:
        by_group.setdefault(manifest.samples[i].isa_name, []).append(i)
    groups = sorted(by_group)
    if len(groups) < 2:
        raise InsufficientGroups(
            f"task {task.value} needs >= 2 eligible ISA groups, found {len(groups)}"
        )
    folds = []
    for held_out in groups:
        test = tuple(by_group[held_out])
        train = tuple(i for g in groups if g != held_out for i in by_group[g])
        folds.append(Fold(held_out, train, test))
    return LogoSplitPlan(tuple(groups), tuple(folds))


# ----------------------------------------------------------------------
# Accuracy and baseline
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class BaselineReport:
    most_frequent_class: str
    most_frequent_count: int
    total_count: int

    @property
    def baseline(self) -> float:
        return self.most_frequent_count / self.total_count


def compute_baseline(labels: Sequence[str]) -> BaselineReport:
    """Accuracy of always predicting the most frequent class; ties break
    lexicographically."""
    if not labels:
        raise EmptyLabelList("cannot compute a baseline over zero labels")
    counts: dict[str, int] = {}
    for label in labels:
        counts[label] = counts.get(label, 0) + 1
    best = max(sorted(counts), key=lambda k: counts[k])  # sorted first => lexicographic ties
    return BaselineReport(best, counts[best], len(labels))


def mean_fold_accuracy(per_fold_accuracies: Sequence[float]) -> float:
    """Unweighted mean over ISA groups (each fold is one ISA)."""
    return sum(per_fold_accuracies) / len(per_fold_accuracies)


@dataclass(frozen=True)
class FoldResult:
    isa_name: str
    accuracy: float
    n_test: int
    confusion: dict[str, dict[str, int]]  # true -> predicted -> count


@dataclass(frozen=True)
class EvaluationReport:
    task: Task
    feature: FeatureConfig
    classifier: ClassifierSpec
    per_fold: tuple[FoldResult, ...]
    feature_accuracy: float
    pooled_accuracy: float
    baseline: BaselineReport
    single_isa_classes: tuple[str, ...]  # unlearnable under LOGOCV


def _extract_all(manifest: CorpusManifest, ids: Sequence[int], config: FeatureConfig):
    features: dict[int, FeatureVector] = {}
    for i in ids:
        ref = manifest.samples[i]
        try:
            features[i] = extract_feature(ref.load(), config)
        except IsaTraitsError as exc:
            raise type(exc)(f"{ref.source_path}: {exc}") from exc
    return features


def _run_fold(
    fold: Fold,
    features: dict[int, FeatureVector],
    labels: dict[int, str],
    classifier: ClassifierSpec,
) -> FoldResult:
    try:
        model = fit(classifier, [features[i] for i in fold.train_ids],
                    [labels[i] for i in fold.train_ids])
        predicted = predict(model, [features[i] for i in fold.test_ids])
    except IsaTraitsError as exc:
        raise type(exc)(f"fold {fold.held_out_isa}: {exc}") from exc
    confusion: dict[str, dict[str, int]] = {}
    correct = 0
    for i, pred in zip(fold.test_ids, predicted):
        true = labels[i]
        confusion.setdefault(true, {})
        confusion[true][pred] = confusion[true].get(pred, 0) + 1
        if pred == true:
            correct += 1
    return FoldResult(fold.held_out_isa, correct / len(fold.test_ids), len(fold.test_ids), confusion)


def run_evaluation(
    manifest: CorpusManifest,
    task: Task,
    feature: FeatureConfig,
    classifier: ClassifierSpec,
    jobs: int = 1,
) -> EvaluationReport:
    """Full LOGOCV: extract features once, fit/score one model per fold,
    aggregate. Folds may run on jobs > 1 worker threads; results assemble
    in group order either way."""
    plan = plan_logocv(manifest, task)
    ids = eligible_ids(manifest, task)
    features = _extract_all(manifest, ids, feature)
    labels = {i: task_label(manifest.label_of(manifest.samples[i]), task) for i in ids}

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            per_fold = list(pool.map(
                lambda fold: _run_fold(fold, features, labels, classifier), plan.folds
            ))
    else:
        per_fold = [_run_fold(fold, features, labels, classifier) for fold in plan.folds]

    feature_accuracy = mean_fold_accuracy([fr.accuracy for fr in per_fold])
    total = sum(fr.n_test for fr in per_fold)
    pooled = sum(fr.accuracy * fr.n_test for fr in per_fold) / total

    baseline = compute_baseline([labels[i] for i in ids])

    isas_per_class: dict[str, set[str]] = {}
    for i in ids:
        isas_per_class.setdefault(labels[i], set()).add(manifest.samples[i].isa_name)
    single = tuple(sorted(k for k, isas in isas_per_class.items() if len(isas) == 1))

    return EvaluationReport(
        task=task,
        feature=feature,
        classifier=classifier,
        per_fold=tuple(per_fold),
        feature_accuracy=feature_accuracy,
        pooled_accuracy=pooled,
        baseline=baseline,
        single_isa_classes=single,
    )


# ----------------------------------------------------------------------
# Grid search
# ----------------------------------------------------------------------

def grid_search_c(
    manifest: CorpusManifest,
    task: Task,
    feature: FeatureConfig,
    c_grid: Sequence[float],
    jobs: int = 1,
) -> tuple[float, list[tuple[float, float]]]:
    """Sweep logistic-regression c over the grid; best is the argmax of
    feature accuracy, ties to the smaller c."""
    if not c_grid:
        raise ValueError("c grid must be non-empty")
    if any(c <= 0 for c in c_grid):
        raise ValueError("c values must be positive")
    table = []
    for c in sorted(c_grid):
        spec = ClassifierSpec(ClassifierKind.LOGISTIC_REGRESSION, c=c)
        report = run_evaluation(manifest, task, feature, spec, jobs=jobs)
        table.append((c, report.feature_accuracy))
    best = max(table, key=lambda row: row[1])  # ascending grid => ties keep smaller c
    return best[0], table


def grid_search_lag(
    manifest: CorpusManifest,
    task: Task,
    classifier: ClassifierSpec,
    lag_grid: Sequence[int],
    jobs: int = 1,
) -> tuple[int, list[tuple[int, float]]]:
    """Sweep the autocorrelation lag over the grid; ties to the smaller lag."""
    if not lag_grid:
        raise ValueError("lag grid must be non-empty")
    if any(lag < 1 for lag in lag_grid):
        raise ValueError("lags must be positive")
    ids = eligible_ids(manifest, task)
    max_lag = max(lag_grid)
    for i in ids:
        ref = manifest.samples[i]
        n = len(ref.load().data)
        if max_lag > n - 2:
            raise LagTooLarge(
                f"lag {max_lag} too large for sample {ref.source_path} of {n} bytes"
            )
    table = []
    for lag in sorted(lag_grid):
        report = run_evaluation(manifest, task, FeatureConfig(AUTOCORR, lag), classifier, jobs=jobs)
        table.append((lag, report.feature_accuracy))
    best = max(table, key=lambda row: row[1])
    return best[0], table


# ----------------------------------------------------------------------
# Two-stage prediction for a single unknown binary
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class UnknownPrediction:
    endianness: str
    size_kind: str
    fixed_bits: int | None
    per_stage: dict[str, dict]


def _stage_predict(binary, model: TrainedModel, stage: str) -> str:
    try:
        vec = extract_feature(binary, FeatureConfig(model.feature_name, model.lag_param))
        return predict(model, [vec])[0]
    except IsaTraitsError as exc:
        exc.stage = stage
        raise


def predict_unknown(
    binary,
    endian_model: TrainedModel,
    isvar_model: TrainedModel,
    width_model: TrainedModel,
) -> UnknownPrediction:
    """Stage 1 predicts endianness, stage 2 fixed vs variable size; only
    fixed-size predictions proceed to the width stage. Errors carry the
    stage they came from."""
    endianness = _stage_predict(binary, endian_model, "endianness")
    size_kind = _stage_predict(binary, isvar_model, "isvar")
    per_stage = {
        "endianness": {"prediction": endianness, "feature": endian_model.feature_name,
                       "classifier": name_of_spec(endian_model.spec)},
        "isvar": {"prediction": size_kind, "feature": isvar_model.feature_name,
                  "classifier": name_of_spec(isvar_model.spec)},
    }
    fixed_bits = None
    if size_kind == SizeKind.FIXED.value:
        width = _stage_predict(binary, width_model, "fixedwidth")
        fixed_bits = int(width)
        per_stage["fixedwidth"] = {"prediction": width, "feature": width_model.feature_name,
                                   "classifier": name_of_spec(width_model.spec)}
    return UnknownPrediction(endianness, size_kind, fixed_bits, per_stage)


# ----------------------------------------------------------------------
# Report serialization
# ----------------------------------------------------------------------

def report_to_dict(report: EvaluationReport, meta: dict | None = None) -> dict:
    payload = {
        "task": report.task.value,
        "feature": {"name": report.feature.name, "lag": report.feature.lag},
        "classifier": report.classifier.to_dict(),
        "feature_accuracy": report.feature_accuracy,
        "pooled_accuracy": report.pooled_accuracy,
        "baseline": {
            "most_frequent_class": report.baseline.most_frequent_class,
            "most_frequent_count": report.baseline.most_frequent_count,
            "total_count": report.baseline.total_count,
            "baseline": report.baseline.baseline,
        },
        "single_isa_classes": list(report.single_isa_classes),
        "per_fold": [
            {
                "isa": fr.isa_name,
                "accuracy": fr.accuracy,
                "n_test": fr.n_test,
                "confusion": fr.confusion,
            }
            for fr in report.per_fold
        ],
    }
    if meta:
        payload.update(meta)
    return payload


def write_report_json(report: EvaluationReport, path: str | Path, meta: dict | None = None) -> None:
    Path(path).write_text(json.dumps(report_to_dict(report, meta), indent=2) + "\n", encoding="utf-8")


def write_report_csv(report: EvaluationReport, fh: TextIO) -> None:
    writer = csv.writer(fh)
    writer.writerow(["isa", "accuracy", "n_test"])
    for fr in report.per_fold:
        writer.writerow([fr.isa_name, repr(fr.accuracy), fr.n_test])


def write_grid_csv(table: Sequence[tuple[float | int, float]], fh: TextIO) -> None:
    writer = csv.writer(fh)
    writer.writerow(["param", "accuracy"])
    for param, accuracy in table:
        writer.writerow([param, repr(accuracy)])
