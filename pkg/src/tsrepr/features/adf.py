"""Augmented Dickey-Fuller t-statistic with AIC lag selection."""
import math

import numpy as np

from .functions import FeatureUnavailable


def schwert_maxlag(n):
    return int(math.floor(12.0 * (n / 100.0) ** 0.25))


def _design(x, dx, lag, start):
    """Regressors for dx[t], t >= start: const, x[t-1], dx[t-1..t-lag]."""
    t = np.arange(start, dx.shape[0] + 1)  # t indexes x; dx[t-1] = x[t] - x[t-1]
    cols = [np.ones(t.size), x[t - 1]]
    for j in range(1, lag + 1):
        cols.append(dx[t - 1 - j])
    return np.column_stack(cols), dx[t - 1]


def _ols(X, y):
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        raise FeatureUnavailable("singular ADF regression")
    resid = y - X @ coef
    return coef, float(resid @ resid)


def adf_statistic(x, maxlag=None):
    """ADF t-statistic (constant, no trend).

    Lags ``0..maxlag`` are compared by AIC on the common sample; the chosen
    lag is then refitted on all observations available to it. ``maxlag``
    defaults to ``floor(12 (n/100)^(1/4))`` and is capped so the regression
    keeps enough degrees of freedom.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if maxlag is None:
        maxlag = schwert_maxlag(n)
    maxlag = min(maxlag, n // 2 - 2)
    if maxlag < 0:
        raise FeatureUnavailable("series too short for ADF")
    dx = np.diff(x)

    best_aic, best_lag = math.inf, 0
    for lag in range(maxlag + 1):
        X, y = _design(x, dx, lag, maxlag + 1)
        if y.size <= X.shape[1]:
            raise FeatureUnavailable("series too short for ADF")
        try:
            _, ssr = _ols(X, y)
        except FeatureUnavailable:
            continue
        if ssr <= 0:
            continue
        aic = y.size * math.log(ssr / y.size) + 2 * X.shape[1]
        if aic < best_aic:
            best_aic, best_lag = aic, lag
    if not math.isfinite(best_aic):
        raise FeatureUnavailable("degenerate ADF regression")

    X, y = _design(x, dx, best_lag, best_lag + 1)
    coef, ssr = _ols(X, y)
    dof = y.size - X.shape[1]
    if dof <= 0 or ssr <= 0:
        raise FeatureUnavailable("degenerate ADF regression")
    cov = (ssr / dof) * np.linalg.inv(X.T @ X)
    se = math.sqrt(cov[1, 1])
    stat = coef[1] / se
    if not math.isfinite(stat):
        raise FeatureUnavailable("degenerate ADF regression")
    return float(stat)
