"""Model evaluation driver: dataset in, scored report directory out.

Datasets are either a telemetry CSV (``t,path1,...``) or the synthetic
generator addressed as ``synthetic:<seed>``.  The driver runs the full
evaluation pipeline over every series, then writes the RMSE table, the
scatter data mirroring the two-path comparison plot, a summary JSON,
and figures.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

from . import plotting, telemetry
from .predictor import MODEL_KINDS, N_LAGS, EvalReport, evaluate_models

SCHEMA_VERSION = 1
DEFAULT_SYNTHETIC_SEED = 42


@dataclass
class TrainReport:
    report: EvalReport
    dataset: str
    out_dir: "Path | None"

    @property
    def chosen_model(self) -> str:
        return self.report.chosen_model


def load_dataset(dataset: str) -> "dict[str, list[float]]":
    """Resolve a dataset reference into named value columns."""
    if dataset.startswith("synthetic"):
        _, _, seed_s = dataset.partition(":")
        seed = int(seed_s) if seed_s else DEFAULT_SYNTHETIC_SEED
        columns = telemetry.synthetic_columns(seed)
    else:
        path = Path(dataset)
        if not path.exists():
            raise FileNotFoundError(f"dataset {dataset!r} not found")
        columns = telemetry.read_csv(path)
    if len(columns) < 2:
        raise ValueError("dataset must provide at least two series")
    return {key: [v for _, v in points] for key, points in columns.items()}


def train_eval(dataset: str, out_dir=None, seed: int = 0,
               kinds=MODEL_KINDS) -> TrainReport:
    columns = load_dataset(dataset)
    report = evaluate_models(columns, kinds=kinds, seed=seed)
    train_report = TrainReport(report, dataset,
                               Path(out_dir) if out_dir else None)
    if out_dir:
        _write_report(train_report)
    return train_report


def _write_report(tr: TrainReport) -> None:
    out = tr.out_dir
    out.mkdir(parents=True, exist_ok=True)
    report = tr.report
    table = report.rmse_table()
    path_keys = [pe.series_key for pe in report.paths]

    with open(out / "rmse.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "path", "rmse"])
        for kind in sorted(table):
            for path_key in path_keys:
                writer.writerow([kind, path_key, repr(table[kind][path_key])])

    with open(out / "scatter.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model"] + [f"rmse_{k}" for k in path_keys])
        for kind in sorted(table):
            writer.writerow([kind] + [repr(table[kind][k]) for k in path_keys])

    summary = {
        "schema_version": SCHEMA_VERSION,
        "dataset": tr.dataset,
        "model_seed": report.model_seed,
        "n_lags": N_LAGS,
        "chosen_model": report.chosen_model,
        "paths": {
            pe.series_key: {
                "n_train": pe.n_train,
                "n_test": pe.n_test,
                "persistence_rmse": pe.persistence,
                "rmse": dict(sorted(pe.rmse_by_kind.items())),
            }
            for pe in report.paths
        },
        "beats_persistence": report.beats_persistence(),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2,
                                                 sort_keys=True) + "\n")
    plotting.eval_figures(report, out / "figures")
