import csv
import hashlib
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest


def run_cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "isatraits.cli", *map(str, args)],
        capture_output=True, text=True, cwd=cwd,
    )


def tree_digest(root: Path) -> str:
    h = hashlib.sha256()
    for path in sorted(root.rglob("*")):
        if path.is_file():
            h.update(str(path.relative_to(root)).encode())
            h.update(path.read_bytes())
    return h.hexdigest()


@pytest.fixture(scope="module")
def endian_corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("endian_corpus") / "corpus"
    proc = run_cli("synth", "endian", "--isas", 2, "--files", 4, "--len", 4096,
                   "--seed", 3, "--out", out)
    assert proc.returncode == 0, proc.stderr
    return out


@pytest.fixture(scope="module")
def size_corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("size_corpus") / "corpus"
    proc = run_cli("synth", "fixedwidth", "--widths", "16,32", "--isas-per-width", 2,
                   "--files", 3, "--len", 4096, "--variable", 2, "--seed", 3, "--out", out)
    assert proc.returncode == 0, proc.stderr
    return out


@pytest.fixture(scope="module")
def models_dir(tmp_path_factory, endian_corpus, size_corpus):
    out = tmp_path_factory.mktemp("models")
    proc = run_cli("train",
                   "--endian-corpus", endian_corpus,
                   "--size-corpus", size_corpus,
                   "--isvar-lag", 64, "--width-lag", 64,
                   "--out", out)
    assert proc.returncode == 0, proc.stderr
    return out


def le_fixed32_query(path: Path, seed=0):
    rng = np.random.default_rng(seed)
    instr = rng.integers(0, 256, size=(2048, 4), dtype=np.uint8)
    instr[:, 0] = 0x2A
    instr[:, 1] = 0xD3
    marked = rng.random(2048) < 0.5
    magnitudes = rng.geometric(0.3, 2048)
    signs = rng.integers(0, 2, 2048) * 2 - 1
    values = np.clip(magnitudes * signs, -32768, 32767).astype("<i2")
    instr[marked, 2:4] = values.view(np.uint8).reshape(-1, 2)[marked]
    path.write_bytes(instr.reshape(-1).tobytes())
    return path


class TestSynth:
    def test_endian_layout(self, endian_corpus):
        files = [p for p in endian_corpus.rglob("*.bin")]
        assert len(files) == 16  # 2 classes x 2 ISAs x 4 files
        labels = (endian_corpus / "labels.csv").read_text().splitlines()
        rows = [l for l in labels if l and not l.startswith(("#", "isa_name"))]
        assert len(rows) == 4

    def test_spec_example_arithmetic(self, tmp_path):
        out = tmp_path / "d"
        proc = run_cli("synth", "endian", "--isas", 4, "--files", 10, "--len", 65536,
                       "--seed", 7, "--out", out)
        assert proc.returncode == 0
        assert len(list(out.rglob("*.bin"))) == 80
        rows = [l for l in (out / "labels.csv").read_text().splitlines()
                if l and not l.startswith(("#", "isa_name"))]
        assert len(rows) == 8

    def test_missing_out_is_usage_error(self):
        proc = run_cli("synth", "endian", "--isas", 2, "--files", 1, "--len", 1024)
        assert proc.returncode == 2
        assert "usage" in proc.stderr.lower()

    def test_same_seed_byte_identical(self, tmp_path):
        digests = []
        for name in ("a", "b"):
            out = tmp_path / name
            proc = run_cli("synth", "endian", "--isas", 2, "--files", 2, "--len", 2048,
                           "--seed", 11, "--out", out)
            assert proc.returncode == 0
            digests.append(tree_digest(out))
        assert digests[0] == digests[1]

    def test_bad_generator_params_exit_1(self, tmp_path):
        proc = run_cli("synth", "endian", "--isas", 2, "--files", 1, "--len", 10,
                       "--out", tmp_path / "x")
        assert proc.returncode == 1


class TestEvaluate:
    def test_endianness_run(self, endian_corpus, tmp_path):
        report_path = tmp_path / "report.json"
        csv_path = tmp_path / "folds.csv"
        proc = run_cli("evaluate", "--task", "endianness", "--feature", "endsig",
                       "--classifier", "knn3",
                       "--corpus", endian_corpus, "--labels", endian_corpus / "labels.csv",
                       "--report", report_path, "--csv", csv_path)
        assert proc.returncode == 0, proc.stderr
        assert "feature_accuracy:" in proc.stdout
        assert "baseline: 8/16 = 0.5000" in proc.stdout  # balanced classes

        payload = json.loads(report_path.read_text())
        assert payload["config"]["classifier"] == "knn3"
        assert payload["config"]["task"] == "endianness"
        assert payload["version"]
        assert payload["labels_sha256"]
        assert len(payload["per_fold"]) == 4

        with open(csv_path) as fh:
            rows = list(csv.DictReader(fh))
        assert {row["isa"] for row in rows} == {"synthLE_0", "synthLE_1", "synthBE_0", "synthBE_1"}

    def test_fixedwidth_run_has_fold_per_fixed_isa(self, size_corpus, tmp_path):
        csv_path = tmp_path / "folds.csv"
        proc = run_cli("evaluate", "--task", "fixedwidth", "--feature", "autocorr",
                       "--lag", 64, "--classifier", "knn1",
                       "--corpus", size_corpus, "--labels", size_corpus / "labels.csv",
                       "--csv", csv_path)
        assert proc.returncode == 0, proc.stderr
        with open(csv_path) as fh:
            rows = list(csv.DictReader(fh))
        assert {row["isa"] for row in rows} == {"synthW16_0", "synthW16_1", "synthW32_0", "synthW32_1"}

    def test_unknown_feature_lists_valid_names(self, endian_corpus):
        proc = run_cli("evaluate", "--task", "endianness", "--feature", "trigram",
                       "--corpus", endian_corpus, "--labels", endian_corpus / "labels.csv")
        assert proc.returncode == 2
        for name in ("bigrams", "endsig", "autocorr"):
            assert name in proc.stderr

    def test_autocorr_without_default_lag_is_usage_error(self, endian_corpus):
        proc = run_cli("evaluate", "--task", "endianness", "--feature", "autocorr",
                       "--corpus", endian_corpus, "--labels", endian_corpus / "labels.csv")
        assert proc.returncode == 2
        assert "--lag" in proc.stderr

    def test_runtime_error_exit_1(self, endian_corpus, tmp_path):
        proc = run_cli("evaluate", "--task", "endianness", "--feature", "endsig",
                       "--corpus", tmp_path / "missing", "--labels", endian_corpus / "labels.csv")
        assert proc.returncode == 1

    def test_config_file_defaults_and_overrides(self, endian_corpus, tmp_path):
        cfg = tmp_path / "run.conf"
        cfg.write_text("classifier=knn1\nseed=9\n")
        report_a = tmp_path / "a.json"
        proc = run_cli("evaluate", "--task", "endianness", "--feature", "endsig",
                       "--config", cfg, "--corpus", endian_corpus,
                       "--labels", endian_corpus / "labels.csv", "--report", report_a)
        assert proc.returncode == 0, proc.stderr
        payload = json.loads(report_a.read_text())
        assert payload["config"]["classifier"] == "knn1"
        assert payload["config"]["seed"] == 9

        report_b = tmp_path / "b.json"
        proc = run_cli("evaluate", "--task", "endianness", "--feature", "endsig",
                       "--config", cfg, "--classifier", "knn5",
                       "--corpus", endian_corpus, "--labels", endian_corpus / "labels.csv",
                       "--report", report_b)
        assert proc.returncode == 0
        assert json.loads(report_b.read_text())["config"]["classifier"] == "knn5"

    def test_unknown_config_key_is_usage_error(self, endian_corpus, tmp_path):
        cfg = tmp_path / "bad.conf"
        cfg.write_text("frobnicate=1\n")
        proc = run_cli("evaluate", "--task", "endianness", "--feature", "endsig",
                       "--config", cfg, "--corpus", endian_corpus,
                       "--labels", endian_corpus / "labels.csv")
        assert proc.returncode == 2

    def test_rerun_reproduces_report(self, endian_corpus, tmp_path):
        outputs = []
        for name in ("r1.json", "r2.json"):
            path = tmp_path / name
            proc = run_cli("evaluate", "--task", "endianness", "--feature", "endsig",
                           "--corpus", endian_corpus, "--labels", endian_corpus / "labels.csv",
                           "--report", path)
            assert proc.returncode == 0
            outputs.append(path.read_text())
        assert outputs[0] == outputs[1]


class TestGridsearch:
    def test_lag_sweep_three_rows(self, size_corpus, tmp_path):
        out = tmp_path / "table.csv"
        proc = run_cli("gridsearch", "lag", "--task", "isvar", "--grid", "16,32,64",
                       "--corpus", size_corpus, "--labels", size_corpus / "labels.csv",
                       "--out", out)
        assert proc.returncode == 0, proc.stderr
        assert "best lag:" in proc.stdout
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        assert [row["param"] for row in rows] == ["16", "32", "64"]

    def test_negative_grid_is_usage_error(self, size_corpus):
        proc = run_cli("gridsearch", "c", "--task", "endianness", "--feature", "endsig",
                       "--grid", "-1",
                       "--corpus", size_corpus, "--labels", size_corpus / "labels.csv")
        assert proc.returncode == 2

    def test_too_large_lag_exit_1(self, size_corpus):
        proc = run_cli("gridsearch", "lag", "--task", "isvar", "--grid", "8192",
                       "--corpus", size_corpus, "--labels", size_corpus / "labels.csv")
        assert proc.returncode == 1
        assert "lag" in proc.stderr.lower()


class TestTrainPredict:
    def test_predict_le_fixed32(self, models_dir, tmp_path):
        query = le_fixed32_query(tmp_path / "query.bin")
        proc = run_cli("predict",
                       "--endian-model", models_dir / "endian.model",
                       "--isvar-model", models_dir / "isvar.model",
                       "--width-model", models_dir / "width.model",
                       query)
        assert proc.returncode == 0, proc.stderr
        payload = json.loads(proc.stdout)  # stdout must be exactly one JSON object
        assert payload["endianness"] == "LE"
        assert payload["size_kind"] == "fixed"
        assert payload["fixed_bits"] == 32
        assert "per_stage_details" in payload

    def test_variable_prediction_omits_fixed_bits(self, models_dir, tmp_path):
        rng = np.random.default_rng(8)
        query = tmp_path / "noise.bin"
        query.write_bytes(rng.integers(0, 256, 4096, dtype=np.uint8).tobytes())
        proc = run_cli("predict",
                       "--endian-model", models_dir / "endian.model",
                       "--isvar-model", models_dir / "isvar.model",
                       "--width-model", models_dir / "width.model",
                       query)
        assert proc.returncode == 0, proc.stderr
        payload = json.loads(proc.stdout)
        assert payload["size_kind"] == "variable"
        assert "fixed_bits" not in payload

    def test_missing_model_flag_is_usage_error(self, models_dir, tmp_path):
        query = le_fixed32_query(tmp_path / "query.bin")
        proc = run_cli("predict",
                       "--endian-model", models_dir / "endian.model",
                       "--isvar-model", models_dir / "isvar.model",
                       query)
        assert proc.returncode == 2

    def test_corrupt_model_exit_1(self, models_dir, tmp_path):
        broken = tmp_path / "broken.model"
        text = (models_dir / "endian.model").read_text()
        broken.write_text(text[: len(text) // 2])
        query = le_fixed32_query(tmp_path / "query.bin")
        proc = run_cli("predict",
                       "--endian-model", broken,
                       "--isvar-model", models_dir / "isvar.model",
                       "--width-model", models_dir / "width.model",
                       query)
        assert proc.returncode == 1

    def test_tiny_binary_reports_stage(self, models_dir, tmp_path):
        query = tmp_path / "tiny.bin"
        query.write_bytes(b"\x00")
        proc = run_cli("predict",
                       "--endian-model", models_dir / "endian.model",
                       "--isvar-model", models_dir / "isvar.model",
                       "--width-model", models_dir / "width.model",
                       query)
        assert proc.returncode == 1
        assert "endianness" in proc.stderr


class TestExportCurves:
    def test_size_kind_grouping(self, size_corpus, tmp_path):
        out = tmp_path / "curves.csv"
        proc = run_cli("export-curves", "--lag", 16, "--group-by", "size-kind",
                       "--corpus", size_corpus, "--labels", size_corpus / "labels.csv",
                       "--out", out)
        assert proc.returncode == 0, proc.stderr
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        assert {row["class"] for row in rows} == {"fixed", "variable"}
        assert len(rows) == 2 * 16

    def test_fixed_bits_grouping(self, size_corpus):
        proc = run_cli("export-curves", "--lag", 8, "--group-by", "fixed-bits",
                       "--corpus", size_corpus, "--labels", size_corpus / "labels.csv")
        assert proc.returncode == 0, proc.stderr
        rows = list(csv.DictReader(proc.stdout.splitlines()))
        assert {row["class"] for row in rows} == {"16", "32"}


class TestStats:
    def test_cpurec_baselines(self, cpurec_labels_path):
        proc = run_cli("stats", "--labels", cpurec_labels_path)
        assert proc.returncode == 0, proc.stderr
        assert "33/51 = 0.647" in proc.stdout
        assert "25/43 = 0.581" in proc.stdout
        assert "17/25 = 0.680" in proc.stdout
        assert "16:6" in proc.stdout and "24:1" in proc.stdout
        assert "32:17" in proc.stdout and "128:1" in proc.stdout

    def test_file_counts_with_corpus(self, endian_corpus):
        proc = run_cli("stats", "--labels", endian_corpus / "labels.csv",
                       "--corpus", endian_corpus)
        assert proc.returncode == 0
        assert "synthLE_0: 4" in proc.stdout

    def test_empty_labels_exit_1(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        assert run_cli("stats", "--labels", empty).returncode == 1
        header_only = tmp_path / "header.csv"
        header_only.write_text(
            "isa_name,endianness,inst_size_kind,inst_size_bits,inst_size_min,inst_size_max,word_size_bits\n"
        )
        assert run_cli("stats", "--labels", header_only).returncode == 1
