"""Classical additive decomposition and the strength measures built on it."""
from dataclasses import dataclass

import numpy as np

from .functions import FeatureUnavailable


@dataclass(frozen=True)
class Decomposition:
    """Trend, seasonal and remainder components.

    ``trend`` and ``remainder`` are NaN over the half-window at each end
    where the centred moving average is undefined.
    """

    trend: np.ndarray
    seasonal: np.ndarray
    remainder: np.ndarray
    pattern: np.ndarray  # one seasonal cycle, phase 0 = first observation

    @property
    def valid(self):
        return ~np.isnan(self.remainder)


def moving_average_weights(period):
    if period % 2:
        return np.full(period, 1.0 / period)
    w = np.full(period + 1, 1.0 / period)
    w[0] = w[-1] = 0.5 / period
    return w


def decompose(x, frequency):
    """Moving-average decomposition with period-mean seasonality.

    The trend is a centred moving average of width ``frequency`` (2 x m
    for even periods); the seasonal pattern is the per-phase mean of the
    detrended series, centred to zero mean.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    f = int(frequency)
    if f < 2 or n < 2 * f:
        raise FeatureUnavailable("need at least two full seasonal periods")
    w = moving_average_weights(f)
    half = w.size // 2
    trend = np.full(n, np.nan)
    trend[half:n - half] = np.convolve(x, w, mode="valid")
    detr = x - trend
    pattern = np.array([np.nanmean(detr[p::f]) for p in range(f)])
    pattern -= pattern.mean()
    seasonal = np.resize(pattern, n)
    return Decomposition(trend, seasonal, detr - seasonal, pattern)


def _remainder_mask(dec):
    """Rows where the remainder is usable.

    With a single detrended value per phase the seasonal means reproduce
    it exactly and the remainder is pure rounding noise, so at least two
    per phase are required.
    """
    v = dec.valid
    if np.count_nonzero(v) < 2 * dec.pattern.size:
        raise FeatureUnavailable("fewer than two detrended observations per phase")
    return v


def _strength(rem, other):
    den = np.var(other + rem)
    if den <= 0:
        raise FeatureUnavailable("zero variance in strength denominator")
    return float(max(0.0, 1.0 - np.var(rem) / den))


def trend_strength(dec):
    v = _remainder_mask(dec)
    return _strength(dec.remainder[v], dec.trend[v])


def seasonality_strength(dec):
    v = _remainder_mask(dec)
    return _strength(dec.remainder[v], dec.seasonal[v])


def remainder_acf1(dec):
    r = dec.remainder[_remainder_mask(dec)]
    r = r - r.mean()
    den = r @ r
    if r.size < 3 or den <= 0:
        raise FeatureUnavailable("degenerate remainder")
    return float((r[:-1] @ r[1:]) / den)


def trough(dec):
    """Seasonal phase (1-based) at which the seasonal pattern is lowest."""
    return float(np.argmin(dec.pattern) + 1)
