"""Linear regression family: ordinary least squares, ridge, lasso.

All three carry an unpenalized intercept.  OLS solves the normal
equations and falls back to a pseudoinverse solve when the system is
rank deficient; ridge adds lambda to the centered Gram diagonal; lasso
runs cyclic coordinate descent with soft thresholding on the objective
(1/2n)*||y - Xb||^2 + alpha*||b||_1.
"""

from __future__ import annotations

import numpy as np


class LinearModel:
    def __init__(self, kind: str, coef: np.ndarray, intercept: float):
        self.kind = kind
        self.coef = coef
        self.intercept = intercept
        self.n_features = len(coef)

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        return X @ self.coef + self.intercept


def fit_ols(X, y) -> LinearModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    Xa = np.hstack([np.ones((len(X), 1)), X])
    beta = None
    try:
        gram = Xa.T @ Xa
        rhs = Xa.T @ y
        candidate = np.linalg.solve(gram, rhs)
        if np.allclose(gram @ candidate, rhs, rtol=1e-6, atol=1e-8):
            beta = candidate
    except np.linalg.LinAlgError:
        pass
    if beta is None:
        beta = np.linalg.lstsq(Xa, y, rcond=None)[0]
    return LinearModel("OLS", beta[1:], float(beta[0]))


def fit_ridge(X, y, lam: float = 1.0) -> LinearModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    yc = y - y_mean
    p = X.shape[1]
    coef = np.linalg.solve(Xc.T @ Xc + lam * np.eye(p), Xc.T @ yc)
    return LinearModel("Ridge", coef, float(y_mean - x_mean @ coef))


def _soft(v: float, cut: float) -> float:
    if v > cut:
        return v - cut
    if v < -cut:
        return v + cut
    return 0.0


def fit_lasso(X, y, alpha: float = 0.1, max_iter: int = 1000,
              tol: float = 1e-6) -> LinearModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    yc = y - y_mean
    col_sq = (Xc ** 2).sum(axis=0) / n
    coef = np.zeros(p)
    residual = yc.copy()
    for _ in range(max_iter):
        worst = 0.0
        for j in range(p):
            if col_sq[j] == 0.0:
                continue
            old = coef[j]
            rho = (Xc[:, j] @ residual) / n + col_sq[j] * old
            new = _soft(rho, alpha) / col_sq[j]
            if new != old:
                residual += Xc[:, j] * (old - new)
                coef[j] = new
                worst = max(worst, abs(new - old))
        if worst < tol:
            break
    return LinearModel("Lasso", coef, float(y_mean - x_mean @ coef))
