import csv
import json

import pytest

from pipegrade.cli import main
from pipegrade.ingest import load_records

from conftest import FIXTURES


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture()
def separable_csv(tmp_path):
    path = tmp_path / "data.csv"
    assert run("generate", "--n", 200, "--seed", 11, "--separable", "--out", path) == 0
    return path


class TestGenerate:
    def test_writes_requested_rows(self, tmp_path):
        out = tmp_path / "g.csv"
        assert run("generate", "--n", 57, "--seed", 3, "--out", out) == 0
        records, diags = load_records(out)
        assert len(records) == 57 and diags == []

    def test_spec_file(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text('{"n": 25, "seed": 9, "separable": true}')
        out = tmp_path / "g.csv"
        assert run("generate", "--spec", spec, "--out", out) == 0
        records, _ = load_records(out)
        assert len(records) == 25


class TestIngest:
    def test_artifacts_and_counts(self, tmp_path):
        data = tmp_path / "d.csv"
        run("generate", "--n", 100, "--seed", 2, "--missing-rate", "0.1",
            "--inconsistent-rate", "0.05", "--out", data)
        out = tmp_path / "out"
        assert run("ingest", "--input", data, "--out-dir", out) == 0
        report = json.loads((out / "cleaning_report.json").read_text())
        assert report["total_in"] == 100
        assert report["dropped_missing"] == 10
        assert report["dropped_inconsistent"] == 5
        assert report["retained"] == 85
        cleaned, _ = load_records(out / "cleaned.csv")
        assert len(cleaned) == 85


class TestScreen:
    def test_constant_factors_reported_degenerate(self, separable_csv, tmp_path):
        out = tmp_path / "screen"
        assert run("screen", "--input", separable_csv, "--alpha", "0",
                   "--out-dir", out) == 0
        doc = json.loads((out / "screening.json").read_text())
        dropped = [r["factor"] for r in doc["results"] if r["verdict"] == "drop"]
        assert set(dropped) == {"material", "diameter", "seismic_zone"}
        rows = (out / "screening.csv").read_text().splitlines()
        assert rows[0].startswith("factor,")
        assert len(rows) == 13


class TestSweep:
    def test_thirty_rows_with_caveat_header(self, separable_csv, tmp_path):
        out = tmp_path / "sweep"
        assert run("sweep", "--input", separable_csv, "--alpha", "0",
                   "--k-max", 30, "--out-dir", out) == 0
        text = (out / "sweep.csv").read_text()
        lines = text.splitlines()
        assert lines[0].startswith("#")
        assert "0.31290" in lines[0] and "73.23%" in lines[0]
        assert "not reproducible" in lines[0]
        data = [ln for ln in lines if not ln.startswith("#")][1:]
        assert len(data) == 30
        for ln in data:
            parts = ln.split(",")
            assert 0.0 <= float(parts[2]) <= 1.0
            assert 0.0 <= float(parts[4]) <= 1.0

    def test_k_max_beyond_train_size_fails(self, separable_csv, tmp_path, capsys):
        out = tmp_path / "sweep"
        rc = run("sweep", "--input", separable_csv, "--alpha", "0",
                 "--k-max", 9999, "--out-dir", out)
        assert rc == 1
        assert "exceeds training size" in capsys.readouterr().err


class TestTrainEvaluatePredict:
    def test_round_trip(self, separable_csv, tmp_path):
        model = tmp_path / "model.json"
        assert run("train", "--input", separable_csv, "--alpha", "0", "--k", 1,
                   "--model-out", model) == 0
        out = tmp_path / "eval"
        assert run("evaluate", "--model", model, "--input", separable_csv,
                   "--out-dir", out) == 0
        doc = json.loads((out / "scores.json").read_text())
        # training data scored with its own memorized model at K=1
        assert doc["models"]["KNN"]["overall_accuracy"] == 1.0
        matrix_lines = (out / "confusion.csv").read_text().splitlines()
        assert len(matrix_lines) == 6

    def test_predict_orders_worst_first(self, separable_csv, tmp_path):
        model = tmp_path / "model.json"
        run("train", "--input", separable_csv, "--alpha", "0", "--k", 1,
            "--model-out", model)
        out = tmp_path / "preds.csv"
        assert run("predict", "--model", model, "--input", separable_csv,
                   "--out", out) == 0
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 200
        ratings = [int(r["predicted_rating"]) for r in rows]
        assert ratings == sorted(ratings, reverse=True)

    def test_predict_310_record_file(self, separable_csv, tmp_path):
        model = tmp_path / "model.json"
        run("train", "--input", separable_csv, "--alpha", "0", "--k", 1,
            "--model-out", model)
        scoring = tmp_path / "score_me.csv"
        run("generate", "--n", 310, "--seed", 77, "--separable", "--out", scoring)
        out = tmp_path / "preds310.csv"
        assert run("predict", "--model", model, "--input", scoring, "--out", out) == 0
        assert len(out.read_text().splitlines()) == 311

    def test_predict_empty_records_exits_zero(self, separable_csv, tmp_path):
        model = tmp_path / "model.json"
        run("train", "--input", separable_csv, "--alpha", "0", "--k", 1,
            "--model-out", model)
        empty = tmp_path / "empty.csv"
        empty.write_text(separable_csv.read_text().splitlines()[0] + "\n")
        out = tmp_path / "preds.csv"
        assert run("predict", "--model", model, "--input", empty, "--out", out) == 0
        assert out.read_text().strip() == "pipe_id,predicted_rating"

    def test_nb_model_type(self, separable_csv, tmp_path):
        model = tmp_path / "nb.json"
        assert run("train", "--input", separable_csv, "--alpha", "0",
                   "--model-type", "nb", "--model-out", model) == 0
        out = tmp_path / "eval"
        assert run("evaluate", "--model", model, "--input", separable_csv,
                   "--out-dir", out) == 0
        doc = json.loads((out / "scores.json").read_text())
        assert doc["models"]["NB"]["overall_accuracy"] > 0.9


class TestScoreMatrixAndReport:
    def test_stored_matrices_reproduce_reference_accuracies(self, tmp_path):
        out = tmp_path / "rep"
        matrices = FIXTURES / "matrices"
        assert run("report",
                   "--matrix", f"KNN={matrices / 'knn.csv'}",
                   "--matrix", f"AHP={matrices / 'ahp.csv'}",
                   "--matrix", f"NBC={matrices / 'nbc.csv'}",
                   "--out-dir", out) == 0
        doc = json.loads((out / "scores.json").read_text())
        assert doc["models"]["KNN"]["overall_accuracy"] * 100 == pytest.approx(73.23, abs=0.005)
        assert doc["models"]["AHP"]["overall_accuracy"] * 100 == pytest.approx(9.35, abs=0.005)
        assert doc["models"]["NBC"]["overall_accuracy"] * 100 == pytest.approx(52.90, abs=0.005)
        text = (out / "scores.txt").read_text()
        for token in ("73.23%", "9.35%", "52.90%", "0.69", "0.77"):
            assert token in text

    def test_score_matrix_single(self, tmp_path, capsys):
        out = tmp_path / "one"
        assert run("score-matrix", "--matrix", FIXTURES / "matrices" / "knn.csv",
                   "--name", "KNN", "--out-dir", out) == 0
        assert "73.23%" in capsys.readouterr().out

    def test_bad_matrix_argument(self, tmp_path, capsys):
        rc = run("report", "--matrix", "missing-equals-sign", "--out-dir", tmp_path)
        assert rc == 1
        assert "NAME=PATH" in capsys.readouterr().err


class TestPipeline:
    def test_end_to_end_artifacts_consistent(self, separable_csv, tmp_path):
        out = tmp_path / "run"
        assert run("pipeline", "--input", separable_csv, "--alpha", "0",
                   "--k", 1, "--seed", 5, "--out-dir", out) == 0
        for name in ("cleaning_report.json", "screening.csv", "sweep.csv",
                     "confusion.csv", "scores.json"):
            assert (out / name).exists(), name
        doc = json.loads((out / "scores.json").read_text())
        knn_scores = doc["models"]["KNN"]
        assert knn_scores["overall_accuracy"] == 1.0
        assert knn_scores["correct"] == knn_scores["total"]
        assert doc["chosen_k"] == 1
        assert doc["split"] == {"seed": 5, "train": 150, "validation": 50,
                                "stratified": False}

    def test_reproducible_byte_identical(self, separable_csv, tmp_path):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        for out in (out1, out2):
            assert run("pipeline", "--input", separable_csv, "--alpha", "0",
                       "--seed", 3, "--out-dir", out) == 0
        for name in ("cleaning_report.json", "screening.csv", "sweep.csv",
                     "confusion.csv", "scores.json", "model.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name

    def test_failure_keeps_partial_artifacts(self, separable_csv, tmp_path, capsys):
        out = tmp_path / "partial"
        rc = run("pipeline", "--input", separable_csv, "--alpha", "0",
                 "--k-max", 9999, "--out-dir", out)
        assert rc == 1
        err = capsys.readouterr().err
        assert "stage sweep" in err and "exceeds training size" in err
        assert (out / "cleaning_report.json").exists()
        assert (out / "screening.csv").exists()
        assert not (out / "scores.json").exists()

    def test_alpha_too_strict_names_screen_stage(self, separable_csv, tmp_path, capsys):
        out = tmp_path / "strict"
        rc = run("pipeline", "--input", separable_csv, "--alpha", "0.05",
                 "--out-dir", out)
        assert rc == 1
        assert "stage screen" in capsys.readouterr().err

    def test_report_format_text_only(self, separable_csv, tmp_path):
        out = tmp_path / "fmt"
        assert run("pipeline", "--input", separable_csv, "--alpha", "0",
                   "--report-format", "text", "--out-dir", out) == 0
        assert (out / "scores.txt").exists()
        assert not (out / "scores.json").exists()

    def test_output_dir_env_override(self, separable_csv, tmp_path, monkeypatch):
        target = tmp_path / "from-env"
        monkeypatch.setenv("PIPEGRADE_OUTPUT_DIR", str(target))
        ignored = tmp_path / "ignored"
        assert run("pipeline", "--input", separable_csv, "--alpha", "0",
                   "--out-dir", ignored) == 0
        assert (target / "scores.json").exists()
        assert not ignored.exists()
