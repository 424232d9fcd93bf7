"""Bandwidth forecasting: scalers, regression models, scoring, selection."""

from .linear import LinearModel, fit_lasso, fit_ols, fit_ridge
from .pipeline import (
    DEFAULTS,
    FORECAST_STEPS,
    MODEL_KINDS,
    N_LAGS,
    EvalReport,
    NotFittedError,
    PathEvaluation,
    Standardizer,
    evaluate_models,
    evaluate_path,
    fit,
    forecast,
    persistence_rmse,
    predict,
    rmse,
    select_best,
    split_train_test,
)
from .trees import DecisionTree, GradientBoosting, RandomForest

__all__ = [
    "DEFAULTS", "FORECAST_STEPS", "MODEL_KINDS", "N_LAGS",
    "DecisionTree", "EvalReport", "GradientBoosting", "LinearModel",
    "NotFittedError", "PathEvaluation", "RandomForest", "Standardizer",
    "evaluate_models", "evaluate_path", "fit", "fit_lasso", "fit_ols",
    "fit_ridge", "forecast", "persistence_rmse", "predict", "rmse",
    "select_best", "split_train_test",
]
