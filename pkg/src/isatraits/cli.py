"""Command-line interface.

Subcommands: synth (generate synthetic corpora), evaluate (LOGOCV run),
gridsearch (c or lag sweep), train (fit the three stage models), predict
(two-stage classification of one binary), export-curves (mean
autocorrelation per class), stats (label counts and baselines).

Exit codes: 0 success, 1 runtime/data error, 2 usage error. A --config
file supplies flat key=value defaults; explicit flags override it.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .classify import SUITE_NAMES, fit, load_model, save_model, spec_from_name
from .corpus import (
    BinarySample,
    CorpusManifest,
    IsaLabel,
    SizeKind,
    generate_synthetic_endian,
    generate_synthetic_fixedwidth,
    manifest_summary,
    parse_label_registry,
    scan_corpus,
    write_corpus,
)
from .errors import EmptyLabelList, IsaTraitsError
from .evaluate import (
    AUTOCORR,
    DEFAULT_AUTOCORR_LAGS,
    DEFAULT_C_GRID,
    DEFAULT_LAG_GRID,
    DEFAULT_LOGREG_C,
    FeatureConfig,
    Task,
    compute_baseline,
    eligible_ids,
    extract_feature,
    grid_search_c,
    grid_search_lag,
    predict_unknown,
    run_evaluation,
    task_label,
    write_grid_csv,
    write_report_csv,
    write_report_json,
)
from .features import FEATURE_NAMES, mean_curve_by_class

TASK_NAMES = tuple(task.value for task in Task)


class UsageError(Exception):
    pass


# ----------------------------------------------------------------------
# Config files: flat key=value lines, keys named after long flags.
# ----------------------------------------------------------------------

def _parse_config_file(path: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{line_no}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value.strip().strip('"')
    return pairs


def _coerce(action: argparse.Action, raw: str):
    if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"config key {action.dest!r}: {raw!r} is not a boolean")
    value = action.type(raw) if action.type else raw
    if action.choices is not None and value not in action.choices:
        raise UsageError(f"config key {action.dest!r}: {value!r} not in {sorted(action.choices)}")
    return value


def _apply_config(args: argparse.Namespace, subparser: argparse.ArgumentParser, argv: list[str]) -> None:
    if not getattr(args, "config", None):
        return
    actions = {a.dest: a for a in subparser._actions if a.option_strings}
    for key, raw in _parse_config_file(args.config).items():
        dest = key.replace("-", "_")
        if dest not in actions:
            raise UsageError(f"unknown config key {key!r}")
        action = actions[dest]
        if any(opt in argv for opt in action.option_strings):
            continue  # explicit flag wins
        setattr(args, dest, _coerce(action, raw))


# ----------------------------------------------------------------------
# Shared helpers
# ----------------------------------------------------------------------

def _load_manifest(corpus: str, labels: str, cap: int | None) -> CorpusManifest:
    registry = parse_label_registry(labels)
    manifest = scan_corpus(corpus, registry, per_isa_cap=cap)
    for name in manifest.warnings:
        print(f"warning: unknown ISA directory {name!r} skipped", file=sys.stderr)
    return manifest


def _resolve_lag(args, task: Task, classifier: str) -> int:
    if args.lag is not None:
        return args.lag
    default = DEFAULT_AUTOCORR_LAGS.get((task, classifier))
    if default is None:
        raise UsageError(
            f"no default lag for task {task.value} with classifier {classifier}; pass --lag"
        )
    return default


def _resolve_c(args, task: Task, feature: str) -> float:
    if args.c is not None:
        return args.c
    return DEFAULT_LOGREG_C.get((task, feature), 1.0)


def _labels_sha256(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _parse_int_list(raw: str, flag: str, as_float: bool = False) -> list:
    cast = float if as_float else int
    try:
        values = [cast(cell) for cell in raw.split(",") if cell.strip()]
    except ValueError:
        raise UsageError(f"{flag}: could not parse {raw!r}") from None
    if not values:
        raise UsageError(f"{flag}: empty list")
    if any(v <= 0 for v in values):
        raise UsageError(f"{flag}: values must be positive")
    return values


# ----------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------

def cmd_synth(args, argv) -> int:
    if args.mode == "endian":
        manifest = generate_synthetic_endian(args.isas, args.files, args.len, args.seed)
    else:
        widths = _parse_int_list(args.widths, "--widths")
        manifest = generate_synthetic_fixedwidth(
            widths, args.isas_per_width, args.files, args.len, args.variable, args.seed
        )
    labels_path = write_corpus(manifest, args.out)
    print(manifest_summary(manifest), end="")
    print(f"labels: {labels_path}")
    return 0


def cmd_evaluate(args, argv) -> int:
    task = Task(args.task)
    lag = _resolve_lag(args, task, args.classifier) if args.feature == AUTOCORR else None
    feature = FeatureConfig(args.feature, lag)
    spec = spec_from_name(
        args.classifier,
        c=_resolve_c(args, task, args.feature),
        trees=args.trees,
        seed=args.seed,
        standardize=args.standardize,
    )
    manifest = _load_manifest(args.corpus, args.labels, args.cap)
    report = run_evaluation(manifest, task, feature, spec, jobs=args.jobs)

    print(f"task: {task.value}  feature: {feature.name}"
          + (f" (lag {feature.lag})" if feature.lag else "")
          + f"  classifier: {args.classifier}")
    print(f"feature_accuracy: {report.feature_accuracy:.4f}")
    print(f"pooled_accuracy: {report.pooled_accuracy:.4f}")
    print(f"baseline: {report.baseline.most_frequent_count}/{report.baseline.total_count}"
          f" = {report.baseline.baseline:.4f}")
    if report.single_isa_classes:
        print("note: classes represented by a single ISA are unlearnable under LOGOCV: "
              + ", ".join(report.single_isa_classes))

    meta = {
        "version": __version__,
        "labels_sha256": _labels_sha256(args.labels),
        "config": {
            "task": task.value,
            "feature": feature.name,
            "lag": feature.lag,
            "classifier": args.classifier,
            "c": spec.c,
            "trees": spec.trees,
            "standardize": spec.standardize,
            "cap": args.cap,
            "seed": args.seed,
            "jobs": args.jobs,
            "corpus": args.corpus,
            "labels": args.labels,
        },
    }
    if args.report:
        write_report_json(report, args.report, meta)
        print(f"report: {args.report}")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            write_report_csv(report, fh)
        print(f"per-fold csv: {args.csv}")
    return 0


def cmd_gridsearch(args, argv) -> int:
    task = Task(args.task)
    manifest = _load_manifest(args.corpus, args.labels, args.cap)
    if args.mode == "c":
        if args.feature is None:
            raise UsageError("gridsearch c requires --feature")
        lag = _resolve_lag(args, task, "logreg") if args.feature == AUTOCORR else None
        grid = _parse_int_list(args.grid, "--grid", as_float=True) if args.grid else list(DEFAULT_C_GRID)
        best, table = grid_search_c(manifest, task, FeatureConfig(args.feature, lag), grid,
                                    jobs=args.jobs)
        print(f"best c: {best:g}")
    else:
        spec = spec_from_name(args.classifier, c=_resolve_c(args, task, AUTOCORR),
                              trees=args.trees, seed=args.seed)
        grid = _parse_int_list(args.grid, "--grid") if args.grid else list(DEFAULT_LAG_GRID)
        best, table = grid_search_lag(manifest, task, spec, grid, jobs=args.jobs)
        print(f"best lag: {best}")
    write_grid_csv(table, sys.stdout)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_grid_csv(table, fh)
        print(f"table: {args.out}")
    return 0


def _fit_stage(manifest: CorpusManifest, task: Task, feature: FeatureConfig, spec):
    ids = eligible_ids(manifest, task)
    X, y = [], []
    for i in ids:
        ref = manifest.samples[i]
        X.append(extract_feature(ref.load(), feature))
        y.append(task_label(manifest.label_of(ref), task))
    return fit(spec, X, y)


def cmd_train(args, argv) -> int:
    def corpus_for(stage_corpus, stage_labels):
        corpus = stage_corpus or args.corpus
        if corpus is None:
            raise UsageError("no corpus given for a stage; pass --corpus or the per-stage flag")
        labels = stage_labels or args.labels or str(Path(corpus) / "labels.csv")
        return _load_manifest(corpus, labels, args.cap)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.endian_feature == AUTOCORR and args.endian_lag is None:
        raise UsageError("--endian-feature autocorr requires --endian-lag")
    endian_manifest = corpus_for(args.endian_corpus, args.endian_labels)
    endian_feature = FeatureConfig(
        args.endian_feature,
        args.endian_lag if args.endian_feature == AUTOCORR else None,
    )
    endian_spec = spec_from_name(
        args.endian_classifier,
        c=args.endian_c if args.endian_c is not None
        else DEFAULT_LOGREG_C.get((Task.ENDIANNESS, args.endian_feature), 1.0),
        seed=args.seed,
    )
    endian_model = _fit_stage(endian_manifest, Task.ENDIANNESS, endian_feature, endian_spec)
    save_model(endian_model, out_dir / "endian.model")

    size_manifest = corpus_for(args.size_corpus, args.size_labels)
    isvar_lag = args.isvar_lag or DEFAULT_AUTOCORR_LAGS.get(
        (Task.FIXED_VS_VARIABLE, args.isvar_classifier), 128)
    isvar_spec = spec_from_name(
        args.isvar_classifier,
        c=args.isvar_c if args.isvar_c is not None
        else DEFAULT_LOGREG_C.get((Task.FIXED_VS_VARIABLE, AUTOCORR), 1.0),
        seed=args.seed,
    )
    isvar_model = _fit_stage(
        size_manifest, Task.FIXED_VS_VARIABLE, FeatureConfig(AUTOCORR, isvar_lag), isvar_spec)
    save_model(isvar_model, out_dir / "isvar.model")

    width_lag = args.width_lag or DEFAULT_AUTOCORR_LAGS.get(
        (Task.FIXED_WIDTH, args.width_classifier), 128)
    width_spec = spec_from_name(
        args.width_classifier,
        c=args.width_c if args.width_c is not None
        else DEFAULT_LOGREG_C.get((Task.FIXED_WIDTH, AUTOCORR), 1.0),
        seed=args.seed,
    )
    width_model = _fit_stage(
        size_manifest, Task.FIXED_WIDTH, FeatureConfig(AUTOCORR, width_lag), width_spec)
    save_model(width_model, out_dir / "width.model")

    for name in ("endian.model", "isvar.model", "width.model"):
        print(f"wrote {out_dir / name}")
    return 0


def cmd_predict(args, argv) -> int:
    endian_model = load_model(args.endian_model)
    isvar_model = load_model(args.isvar_model)
    width_model = load_model(args.width_model)
    data = Path(args.binary).read_bytes()
    sample = BinarySample(data, isa_name="unknown", source_path=args.binary)
    result = predict_unknown(sample, endian_model, isvar_model, width_model)
    payload = {
        "endianness": result.endianness,
        "size_kind": result.size_kind,
        "per_stage_details": result.per_stage,
    }
    if result.fixed_bits is not None:
        payload["fixed_bits"] = result.fixed_bits
    print(json.dumps(payload, sort_keys=True))
    return 0


def cmd_export_curves(args, argv) -> int:
    manifest = _load_manifest(args.corpus, args.labels, args.cap)

    def by_size_kind(label: IsaLabel):
        if label.inst_size.kind in (SizeKind.FIXED, SizeKind.VARIABLE):
            return label.inst_size.kind.value
        return None

    def by_fixed_bits(label: IsaLabel):
        if label.inst_size.kind is SizeKind.FIXED:
            return str(label.inst_size.fixed_bits)
        return None

    class_of = by_size_kind if args.group_by == "size-kind" else by_fixed_bits
    curves = mean_curve_by_class(manifest, args.lag, class_of)
    if not curves:
        raise EmptyLabelList("no samples matched the requested grouping")

    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        out.write("class,k,mean_f_k\n")
        for klass in sorted(curves):
            for k, value in enumerate(curves[klass], start=1):
                out.write(f"{klass},{k},{float(value)!r}\n")
    finally:
        if args.out:
            out.close()
            print(f"curves: {args.out}")
    return 0


def cmd_stats(args, argv) -> int:
    registry = parse_label_registry(args.labels)
    if not registry:
        raise EmptyLabelList(f"label file {args.labels} has no rows")

    sections = [
        ("endianness", Task.ENDIANNESS),
        ("fixed/variable", Task.FIXED_VS_VARIABLE),
        ("fixed width", Task.FIXED_WIDTH),
    ]
    for title, task in sections:
        labels = [task_label(lbl, task) for lbl in registry.values()]
        labels = [x for x in labels if x is not None]
        counts: dict[str, int] = {}
        for x in labels:
            counts[x] = counts.get(x, 0) + 1
        if task is Task.FIXED_WIDTH:
            ordered = sorted(counts, key=int)
        else:
            ordered = sorted(counts)
        print(f"{title} classes: " + " ".join(f"{k}:{counts[k]}" for k in ordered))
        if labels:
            b = compute_baseline(labels)
            print(f"{title} baseline: {b.most_frequent_count}/{b.total_count} = {b.baseline:.3f}")
        else:
            print(f"{title} baseline: n/a (no eligible ISAs)")

    if args.corpus:
        manifest = scan_corpus(args.corpus, registry)
        print("file counts per ISA:")
        for isa, count in manifest.counts_per_isa().items():
            print(f"  {isa}: {count}")
        print(f"  total: {len(manifest.samples)}")
    return 0


# ----------------------------------------------------------------------
# Parser construction
# ----------------------------------------------------------------------

def _add_corpus_flags(p, labels_required=True):
    p.add_argument("--corpus", required=True, help="corpus root: <root>/<isa>/<files...>")
    p.add_argument("--labels", required=labels_required, help="label CSV path")
    p.add_argument("--cap", type=int, default=None, help="max files per ISA (lexicographic-first)")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="isatraits",
        description="Detect endianness and instruction-size characteristics of unknown-ISA binaries.",
    )
    parser.add_argument("--version", action="version", version=f"isatraits {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    registry: dict[str, argparse.ArgumentParser] = {}

    p = sub.add_parser("synth", help="generate a synthetic corpus with known ground truth")
    p.add_argument("mode", choices=["endian", "fixedwidth"])
    p.add_argument("--isas", type=int, default=4, help="endian mode: ISAs per endianness class")
    p.add_argument("--widths", default="16,32", help="fixedwidth mode: comma-separated widths in bits")
    p.add_argument("--isas-per-width", type=int, default=3)
    p.add_argument("--variable", type=int, default=0, help="fixedwidth mode: variable-size ISA count")
    p.add_argument("--files", type=int, required=True, help="files per ISA")
    p.add_argument("--len", type=int, required=True, help="bytes per file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output corpus directory")
    p.set_defaults(func=cmd_synth)
    registry["synth"] = p

    p = sub.add_parser("evaluate", help="run a LOGOCV evaluation")
    p.add_argument("--task", required=True, choices=TASK_NAMES)
    p.add_argument("--feature", required=True, choices=FEATURE_NAMES)
    p.add_argument("--classifier", default="knn3", choices=SUITE_NAMES)
    p.add_argument("--lag", type=int, default=None, help="autocorr lag (default: tuned per task/classifier)")
    p.add_argument("--c", type=float, default=None, help="logreg inverse regularization (default: tuned)")
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    _add_corpus_flags(p)
    p.add_argument("--report", default=None, help="write full JSON report here")
    p.add_argument("--csv", default=None, help="write per-fold CSV here")
    p.add_argument("--config", default=None, help="key=value defaults file")
    p.set_defaults(func=cmd_evaluate)
    registry["evaluate"] = p

    p = sub.add_parser("gridsearch", help="sweep c (logreg) or lag (autocorr)")
    p.add_argument("mode", choices=["c", "lag"])
    p.add_argument("--task", required=True, choices=TASK_NAMES)
    p.add_argument("--feature", default=None, choices=FEATURE_NAMES, help="c mode: feature to use")
    p.add_argument("--classifier", default="knn3", choices=SUITE_NAMES, help="lag mode: classifier")
    p.add_argument("--grid", default=None, help="comma-separated grid values")
    p.add_argument("--lag", type=int, default=None, help="c mode with autocorr: fixed lag")
    p.add_argument("--c", type=float, default=None, help="lag mode with logreg: fixed c")
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    _add_corpus_flags(p)
    p.add_argument("--out", default=None, help="write the sweep table CSV here")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_gridsearch)
    registry["gridsearch"] = p

    p = sub.add_parser("train", help="fit the three stage models and write model files")
    p.add_argument("--corpus", default=None, help="corpus for all stages unless overridden")
    p.add_argument("--labels", default=None)
    p.add_argument("--endian-corpus", default=None)
    p.add_argument("--endian-labels", default=None)
    p.add_argument("--size-corpus", default=None, help="corpus for isvar and width stages")
    p.add_argument("--size-labels", default=None)
    p.add_argument("--endian-feature", default="endsig", choices=FEATURE_NAMES)
    p.add_argument("--endian-classifier", default="logreg", choices=SUITE_NAMES)
    p.add_argument("--endian-c", type=float, default=None)
    p.add_argument("--endian-lag", type=int, default=None)
    p.add_argument("--isvar-classifier", default="logreg", choices=SUITE_NAMES)
    p.add_argument("--isvar-c", type=float, default=None)
    p.add_argument("--isvar-lag", type=int, default=None)
    p.add_argument("--width-classifier", default="logreg", choices=SUITE_NAMES)
    p.add_argument("--width-c", type=float, default=None)
    p.add_argument("--width-lag", type=int, default=None)
    p.add_argument("--cap", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="directory for endian.model/isvar.model/width.model")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_train)
    registry["train"] = p

    p = sub.add_parser("predict", help="classify one binary with trained stage models")
    p.add_argument("--endian-model", required=True)
    p.add_argument("--isvar-model", required=True)
    p.add_argument("--width-model", required=True)
    p.add_argument("binary", help="path to the binary to classify")
    p.set_defaults(func=cmd_predict)
    registry["predict"] = p

    p = sub.add_parser("export-curves", help="mean autocorrelation per class as CSV")
    p.add_argument("--lag", type=int, required=True)
    p.add_argument("--group-by", default="size-kind", choices=["size-kind", "fixed-bits"])
    _add_corpus_flags(p)
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_export_curves)
    registry["export-curves"] = p

    p = sub.add_parser("stats", help="per-class counts and baselines from a label file")
    p.add_argument("--labels", required=True)
    p.add_argument("--corpus", default=None, help="also count files per ISA")
    p.set_defaults(func=cmd_stats)
    registry["stats"] = p

    return parser, registry


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, registry = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args, registry[args.command], argv)
        return args.func(args, argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        registry[args.command].print_usage(sys.stderr)
        return 2
    except (IsaTraitsError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
