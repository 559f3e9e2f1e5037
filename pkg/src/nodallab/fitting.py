"""Log-log least-squares power-law fits."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .exceptions import FitError


@dataclass(frozen=True)
class PowerLawFit:
    slope: float
    intercept: float  # natural log of the prefactor
    r2: float


def _ols(logx: np.ndarray, logy: np.ndarray) -> PowerLawFit:
    xm, ym = logx.mean(), logy.mean()
    dx, dy = logx - xm, logy - ym
    slope = float(dx @ dy / (dx @ dx))
    intercept = float(ym - slope * xm)
    resid = logy - (intercept + slope * logx)
    ss_tot = float(dy @ dy)
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return PowerLawFit(slope, intercept, r2)


def fit_power_law(points) -> PowerLawFit:
    """Fit ``value = exp(intercept) * lam^slope`` to ``(lam, value)`` pairs."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) < 3:
        raise FitError(f"need at least 3 points, got {len(pts)}")
    lam, val = pts[:, 0], pts[:, 1]
    if np.any(val <= 0) or np.any(lam <= 0):
        raise FitError("power-law fit needs positive lambda and values")
    if len(np.unique(lam)) != len(lam):
        raise FitError("lambda values must be distinct")
    return _ols(np.log(lam), np.log(val))


class PowerLawRegressor(RegressorMixin, BaseEstimator):
    """Estimator wrapper around :func:`fit_power_law`.

    ``X`` is a single column of eigenvalues; repeated eigenvalues are allowed
    here (e.g. one row per seed). ``score`` is R^2 in the original scale, as
    for any sklearn regressor; the log-log R^2 is stored in ``r2_``.
    """

    def fit(self, X, y):
        X, y = check_X_y(X, y, ensure_min_samples=2)
        if X.shape[1] != 1:
            raise FitError("X must have exactly one column (the eigenvalue)")
        if np.any(X <= 0) or np.any(y <= 0):
            raise FitError("power-law fit needs positive lambda and values")
        if len(np.unique(X[:, 0])) < 2:
            raise FitError("need at least two distinct eigenvalues")
        fit = _ols(np.log(X[:, 0]), np.log(y))
        self.slope_, self.intercept_, self.r2_ = fit.slope, fit.intercept, fit.r2
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "slope_")
        X = check_array(X)
        return np.exp(self.intercept_) * X[:, 0] ** self.slope_
