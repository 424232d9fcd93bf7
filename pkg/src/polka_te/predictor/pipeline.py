"""Forecasting pipeline: scaling, splitting, fitting, scoring, forecasting.

The end-to-end evaluation follows the usual forecasting discipline: a
chronological 75/25 split, a standardizer fitted on the training
segment only, lag windows over the scaled series, one model per
candidate kind, scores computed in original units after inverse
transformation, and a persistence baseline (predict the previous value)
reported next to every model so a learned model that fails to beat it
is visible.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import floor

import numpy as np

from ..telemetry import lagged_dataset
from .linear import fit_lasso, fit_ols, fit_ridge
from .trees import DecisionTree, GradientBoosting, RandomForest

MODEL_KINDS = ("DecisionTree", "GradientBoosting", "Lasso", "OLS",
               "RandomForest", "Ridge")

N_LAGS = 10
FORECAST_STEPS = 10
TRAIN_FRACTION = 0.75

#: Pinned "default" hyperparameters per model kind.
DEFAULTS = {
    "Ridge": {"lam": 1.0},
    "Lasso": {"alpha": 0.1, "max_iter": 1000, "tol": 1e-6},
    "DecisionTree": {"max_depth": None, "min_samples_split": 2},
    "RandomForest": {"n_estimators": 100, "bootstrap": True,
                     "max_features": "third"},
    "GradientBoosting": {"n_estimators": 100, "learning_rate": 0.1,
                         "max_depth": 3},
    "OLS": {},
}


class NotFittedError(RuntimeError):
    pass


class Standardizer:
    """Column-wise zero-mean unit-variance scaler, population standard deviation.

    Fit exactly once, on training rows only.  Constant columns scale by 1
    and are recorded in `constant_columns`.
    """

    def __init__(self):
        self.means = None
        self.stds = None
        self.constant_columns: list[int] = []
        self.n_samples_seen = 0
        self.fit_count = 0

    def fit(self, X) -> "Standardizer":
        if self.fit_count:
            raise RuntimeError("standardizer is already fitted")
        X = self._as_matrix(X)
        self.means = X.mean(axis=0)
        stds = X.std(axis=0)  # divisor N
        self.constant_columns = [int(j) for j in np.where(stds == 0.0)[0]]
        stds = np.where(stds == 0.0, 1.0, stds)
        self.stds = stds
        self.n_samples_seen = len(X)
        self.fit_count = 1
        return self

    def transform(self, X):
        self._check_fitted()
        X = self._as_matrix(X)
        return (X - self.means) / self.stds

    def inverse_transform(self, X):
        self._check_fitted()
        X = self._as_matrix(X)
        return X * self.stds + self.means

    def _check_fitted(self):
        if not self.fit_count:
            raise NotFittedError("transform called before fit")

    @staticmethod
    def _as_matrix(X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            return X.reshape(-1, 1)
        if X.ndim != 2:
            raise ValueError("expected a vector or matrix")
        return X


def split_train_test(series, train_fraction: float = TRAIN_FRACTION):
    """Chronological split at floor(train_fraction * N); no shuffling."""
    arr = np.asarray(series, dtype=float)
    if len(arr) < 8:
        raise ValueError(f"need at least 8 samples to split, got {len(arr)}")
    cut = floor(train_fraction * len(arr))
    return arr[:cut], arr[cut:]


def fit(kind: str, X, y, hyperparams: "dict | None" = None,
        seed: "int | None" = None):
    """Train one model of the given kind on (X, y)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or len(X) != len(y):
        raise ValueError("X must be (n, p) and y (n,) with matching n")
    if len(y) < 1:
        raise ValueError("cannot fit on empty data")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValueError("training data contains non-finite values")
    params = dict(DEFAULTS.get(kind, {}))
    params.update(hyperparams or {})
    if kind == "OLS":
        return fit_ols(X, y)
    if kind == "Ridge":
        return fit_ridge(X, y, **params)
    if kind == "Lasso":
        return fit_lasso(X, y, **params)
    if kind == "DecisionTree":
        return DecisionTree(**params).fit(X, y)
    if kind == "RandomForest":
        return RandomForest(seed=seed, **params).fit(X, y)
    if kind == "GradientBoosting":
        return GradientBoosting(**params).fit(X, y)
    raise ValueError(f"unknown model kind {kind!r}")


def predict(model, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be a matrix")
    if model.n_features is None:
        raise NotFittedError(f"{model.kind} model is not fitted")
    if X.shape[1] != model.n_features:
        raise ValueError(
            f"{model.kind} was trained on {model.n_features} features, "
            f"got {X.shape[1]}"
        )
    return np.asarray(model.predict(X), dtype=float)


def rmse(pred, obs) -> float:
    pred = np.asarray(pred, dtype=float)
    obs = np.asarray(obs, dtype=float)
    if pred.shape != obs.shape or pred.ndim != 1 or len(pred) < 1:
        raise ValueError("rmse needs two equal-length nonempty vectors")
    return float(np.sqrt(np.mean((pred - obs) ** 2)))


def select_best(reports: "dict[str, tuple | list | dict]") -> str:
    """Choose the kind with the smallest Euclidean norm of per-path RMSEs.

    Ties break toward the lexicographically first kind name.
    """
    if not reports:
        raise ValueError("no model reports to choose from")
    def norm(values) -> float:
        vec = list(values.values()) if isinstance(values, dict) else list(values)
        return float(np.sqrt(sum(v * v for v in vec)))
    return min(sorted(reports), key=lambda kind: (norm(reports[kind]), kind))


def forecast(model, standardizer: Standardizer, history, steps: int = FORECAST_STEPS,
             clamp_floor: float = 0.0) -> np.ndarray:
    """Recursive multi-step forecast in original units.

    Each prediction is appended to the lag window to produce the next
    one.  Predictions are clamped at the floor (bandwidth cannot go
    negative) before re-entering the window.
    """
    history = np.asarray(history, dtype=float)
    if model.n_features is None:
        raise NotFittedError(f"{model.kind} model is not fitted")
    if history.ndim != 1 or len(history) != model.n_features:
        raise ValueError(
            f"history must hold exactly {model.n_features} values, "
            f"got {len(history)}"
        )
    if steps < 1:
        raise ValueError("steps must be >= 1")
    window = standardizer.transform(history).ravel()
    out = np.empty(steps)
    for i in range(steps):
        scaled = float(predict(model, window.reshape(1, -1))[0])
        value = float(standardizer.inverse_transform([[scaled]])[0, 0])
        if clamp_floor is not None:
            value = max(value, clamp_floor)
        out[i] = value
        rescaled = float(standardizer.transform([[value]])[0, 0])
        window = np.append(window[1:], rescaled)
    return out


def persistence_rmse(test_windows: np.ndarray, test_targets: np.ndarray) -> float:
    """Score of the naive forecaster that repeats the last observed value."""
    return rmse(test_windows[:, -1], test_targets)


# -- full evaluation ----------------------------------------------------------

@dataclass
class PathEvaluation:
    """Per-path artifacts from one evaluation run."""

    series_key: str
    scaler: Standardizer
    rmse_by_kind: "dict[str, float]"
    persistence: float
    predictions: "dict[str, np.ndarray]"
    observed: np.ndarray
    n_train: int
    n_test: int


@dataclass
class EvalReport:
    paths: "list[PathEvaluation]"
    chosen_model: str
    model_seed: int

    def rmse_table(self) -> "dict[str, dict[str, float]]":
        table: dict[str, dict[str, float]] = {}
        for pe in self.paths:
            for kind, value in pe.rmse_by_kind.items():
                table.setdefault(kind, {})[pe.series_key] = value
            table.setdefault("Persistence", {})[pe.series_key] = pe.persistence
        return table

    def beats_persistence(self) -> "dict[str, dict[str, bool]]":
        return {
            kind: {pe.series_key: pe.rmse_by_kind[kind] <= pe.persistence
                   for pe in self.paths}
            for kind in sorted(self.paths[0].rmse_by_kind)
        }


def evaluate_path(series_key: str, values, kinds=MODEL_KINDS, n_lags: int = N_LAGS,
                  seed: int = 0) -> PathEvaluation:
    """Run the split/scale/lag/fit/score pipeline over one series."""
    values = np.asarray(values, dtype=float)
    train, test = split_train_test(values)
    if len(test) < 1:
        raise ValueError("test split is empty")
    scaler = Standardizer().fit(train)
    scaled = np.concatenate([
        scaler.transform(train).ravel(),
        scaler.transform(test).ravel(),
    ])
    ds = lagged_dataset(scaled, n_lags)
    # a window trains the model only if its target still lies in the train split
    split_row = len(train) - n_lags
    if split_row < 1:
        raise ValueError(
            f"training split leaves no lag-{n_lags} windows; series too short"
        )
    X_train, y_train = ds.X[:split_row], ds.y[:split_row]
    X_test, y_test = ds.X[split_row:], ds.y[split_row:]
    observed = scaler.inverse_transform(y_test).ravel()
    rmse_by_kind: dict[str, float] = {}
    predictions: dict[str, np.ndarray] = {}
    for kind in kinds:
        model = fit(kind, X_train, y_train, seed=seed)
        pred = scaler.inverse_transform(predict(model, X_test)).ravel()
        predictions[kind] = pred
        rmse_by_kind[kind] = rmse(pred, observed)
    naive = scaler.inverse_transform(X_test[:, -1]).ravel()
    return PathEvaluation(
        series_key=series_key,
        scaler=scaler,
        rmse_by_kind=rmse_by_kind,
        persistence=rmse(naive, observed),
        predictions=predictions,
        observed=observed,
        n_train=len(train),
        n_test=len(test),
    )


def evaluate_models(columns: "dict[str, list]", kinds=MODEL_KINDS,
                    n_lags: int = N_LAGS, seed: int = 0) -> EvalReport:
    """Evaluate every model kind over every series and pick a winner."""
    if len(columns) < 2:
        raise ValueError("need at least two series to evaluate")
    paths = [evaluate_path(key, values, kinds, n_lags, seed)
             for key, values in columns.items()]
    reports = {kind: [pe.rmse_by_kind[kind] for pe in paths] for kind in kinds}
    return EvalReport(paths=paths, chosen_model=select_best(reports),
                      model_seed=seed)
