import csv
import json
import math
from pathlib import Path

import pytest

from polka_te.telemetry import write_csv
from polka_te.training import load_dataset, train_eval


def linear_csv(tmp_path, n=120) -> Path:
    """Noiseless affine ramps: the next value is exactly linear in the lags."""
    times = [float(i + 1) for i in range(n)]
    cols = {
        "path1_mbps": [(t, 5.0 + 0.25 * t) for t in times],
        "path2_mbps": [(t, 80.0 - 0.5 * t) for t in times],
    }
    path = tmp_path / "linear.csv"
    write_csv(path, cols)
    return path


class TestDatasets:
    def test_synthetic_reference(self):
        columns = load_dataset("synthetic:7")
        assert sorted(columns) == ["path1_mbps", "path2_mbps"]
        assert all(len(v) == 500 for v in columns.values())

    def test_synthetic_default_seed(self):
        assert load_dataset("synthetic") == load_dataset("synthetic:42")

    def test_csv_dataset(self, tmp_path):
        columns = load_dataset(str(linear_csv(tmp_path)))
        assert len(columns["path1_mbps"]) == 120

    def test_missing_file(self):
        with pytest.raises(FileNotFoundError):
            load_dataset("no/such/file.csv")


class TestTrainEval:
    def test_full_artifacts(self, tmp_path):
        out = tmp_path / "eval"
        report = train_eval("synthetic:42", out_dir=out, seed=42)
        assert report.chosen_model in (
            "DecisionTree", "GradientBoosting", "Lasso", "OLS",
            "RandomForest", "Ridge")
        for name in ("rmse.csv", "scatter.csv", "summary.json",
                     "figures/rmse_scatter.png",
                     "figures/forecast_path1_mbps.png",
                     "figures/forecast_path2_mbps.png"):
            assert (out / name).exists(), name

    def test_rmse_csv_schema(self, tmp_path):
        out = tmp_path / "eval"
        train_eval("synthetic:1", out_dir=out, seed=1)
        with open(out / "rmse.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["model", "path", "rmse"]
        models = {r[0] for r in rows[1:]}
        assert "Persistence" in models and "RandomForest" in models
        assert len(rows) == 1 + 7 * 2  # six kinds + persistence, two paths

    def test_summary_contents(self, tmp_path):
        out = tmp_path / "eval"
        train_eval("synthetic:3", out_dir=out, seed=3)
        summary = json.loads((out / "summary.json").read_text())
        assert summary["schema_version"] == 1
        assert summary["paths"]["path1_mbps"]["n_train"] == 375
        assert summary["paths"]["path1_mbps"]["n_test"] == 125
        assert set(summary["beats_persistence"])  # flags always emitted
        for kind, flags in summary["beats_persistence"].items():
            assert set(flags) == {"path1_mbps", "path2_mbps"}

    def test_noiseless_linear_selects_exact_model(self, tmp_path):
        report = train_eval(str(linear_csv(tmp_path)),
                            out_dir=tmp_path / "eval", seed=0)
        table = report.report.rmse_table()
        assert table["OLS"]["path1_mbps"] < 1e-6
        assert table["OLS"]["path2_mbps"] < 1e-6
        assert report.chosen_model == "OLS"

    def test_eleven_row_dataset_rejected(self, tmp_path):
        times = [float(i + 1) for i in range(11)]
        cols = {"a": [(t, t) for t in times], "b": [(t, 2 * t) for t in times]}
        path = tmp_path / "tiny.csv"
        write_csv(path, cols)
        with pytest.raises(ValueError):
            train_eval(str(path), out_dir=None)

    def test_deterministic_reports(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        train_eval("synthetic:5", out_dir=a, seed=5)
        train_eval("synthetic:5", out_dir=b, seed=5)
        for file in sorted(a.rglob("*")):
            if file.is_file():
                assert (b / file.relative_to(a)).read_bytes() == file.read_bytes()

    def test_scatter_matches_rmse_table(self, tmp_path):
        out = tmp_path / "eval"
        report = train_eval("synthetic:9", out_dir=out, seed=9)
        table = report.report.rmse_table()
        with open(out / "scatter.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["model", "rmse_path1_mbps", "rmse_path2_mbps"]
        for model, x, y in rows[1:]:
            assert math.isclose(float(x), table[model]["path1_mbps"])
            assert math.isclose(float(y), table[model]["path2_mbps"])
