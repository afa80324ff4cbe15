"""Scalar time-series features.

Conventions used throughout: angles in radians on (-pi, pi], type-7
quantiles, population standard deviation for sigma-based features.
Functions raise :class:`FeatureUnavailable` when a series does not meet a
feature's precondition; callers record that as a missing value.
"""
import math

import numpy as np
from scipy.signal import welch

from .. import kernels


class FeatureUnavailable(ValueError):
    """The feature is undefined for this input (too short, degenerate, ...)."""


def _require(cond, msg):
    if not cond:
        raise FeatureUnavailable(msg)


# ---------------------------------------------------------------------------
# Fourier coefficients
# ---------------------------------------------------------------------------


def dft_coefficient(x, k):
    """Coefficient ``k`` of the full DFT, ``sum_n x_n exp(-2 pi i k n / N)``.

    Returns a complex number; use :func:`dft_attribute` for real, imag,
    abs or angle.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if not 0 <= k < n:
        raise FeatureUnavailable(f"coefficient {k} out of range for length {n}")
    # direct sum rather than a full FFT: one coefficient is all that is needed
    phase = -2.0 * np.pi * ((k * np.arange(n)) % n) / n
    return complex(np.sum(x * np.cos(phase)), np.sum(x * np.sin(phase)))


def dft_attribute(x, k, attr):
    c = dft_coefficient(x, k)
    if attr == "real":
        return c.real
    if attr == "imag":
        return c.imag
    if attr == "abs":
        return abs(c)
    if attr == "angle":
        ang = math.atan2(c.imag, c.real)
        return math.pi if ang == -math.pi else ang
    raise ValueError(f"unknown attribute {attr!r}")


# ---------------------------------------------------------------------------
# Distribution and location
# ---------------------------------------------------------------------------


def count_below(x, t):
    """Fraction of observations less than or equal to ``t``."""
    x = np.asarray(x, dtype=np.float64)
    _require(x.size > 0, "empty series")
    return float(np.count_nonzero(x <= t)) / x.size


def has_duplicate_max(x):
    x = np.asarray(x, dtype=np.float64)
    _require(x.size > 0, "empty series")
    return float(np.count_nonzero(x == x.max()) > 1)


def variance_larger_than_standard_deviation(x):
    x = np.asarray(x, dtype=np.float64)
    _require(x.size > 0, "empty series")
    var = x.var()
    return float(var > math.sqrt(var))


def ratio_beyond_r_sigma(x, r):
    x = np.asarray(x, dtype=np.float64)
    _require(x.size > 0, "empty series")
    return float(np.count_nonzero(np.abs(x - x.mean()) > r * x.std())) / x.size


def large_standard_deviation(x, r):
    x = np.asarray(x, dtype=np.float64)
    _require(x.size > 0, "empty series")
    return float(x.std() > r * (x.max() - x.min()))


def number_crossing_m(x, m):
    """Number of sign changes of the indicator ``x > m``."""
    x = np.asarray(x, dtype=np.float64)
    above = x > m
    return float(np.count_nonzero(above[1:] != above[:-1]))


def change_quantiles(x, ql, qh, isabs, f_agg):
    """Aggregate of consecutive changes whose both ends lie in the corridor.

    The corridor is ``[quantile(ql), quantile(qh)]``. Returns 0 when no
    change lies inside it.
    """
    if ql >= qh:
        raise ValueError("ql must be below qh")
    x = np.asarray(x, dtype=np.float64)
    _require(x.size >= 2, "need at least two observations")
    lo, hi = np.quantile(x, [ql, qh])
    inside = (x >= lo) & (x <= hi)
    both = inside[1:] & inside[:-1]
    d = np.diff(x)
    if isabs:
        d = np.abs(d)
    d = d[both]
    if d.size == 0:
        return 0.0
    if f_agg == "mean":
        return float(d.mean())
    if f_agg == "var":
        return float(d.var())
    raise ValueError(f"unknown aggregation {f_agg!r}")


_CHUNK_AGG = {"mean": np.mean, "var": np.var, "max": np.max, "min": np.min,
              "median": np.median}


def agg_linear_trend(x, chunk_len, f_agg, attr="rvalue"):
    """Linear regression of chunk aggregates on chunk index.

    Chunks are consecutive blocks of ``chunk_len``; a trailing partial
    chunk is kept. At least three chunks are required. The correlation is
    reported as 0 when either variable is constant.
    """
    if attr != "rvalue":
        raise ValueError("only attr='rvalue' is implemented")
    x = np.asarray(x, dtype=np.float64)
    nchunk = int(math.ceil(x.size / chunk_len))
    _require(nchunk >= 3, "fewer than three chunks")
    agg = _CHUNK_AGG[f_agg]
    y = np.array([agg(x[i * chunk_len:(i + 1) * chunk_len]) for i in range(nchunk)])
    t = np.arange(nchunk, dtype=np.float64)
    yc = y - y.mean()
    tc = t - t.mean()
    syy = yc @ yc
    if syy == 0.0:
        return 0.0
    return float((tc @ yc) / math.sqrt((tc @ tc) * syy))


def ricker(points, a):
    """Ricker ("Mexican hat") wavelet sampled at ``points`` positions."""
    amp = 2.0 / (math.sqrt(3.0 * a) * math.pi ** 0.25)
    v = np.arange(points) - (points - 1.0) / 2.0
    wsq = a * a
    return amp * (1.0 - v * v / wsq) * np.exp(-v * v / (2.0 * wsq))


def cwt_coefficient(x, width, coeff):
    """Value at position ``coeff`` of the Ricker continuous wavelet transform."""
    x = np.asarray(x, dtype=np.float64)
    _require(0 <= coeff < x.size, "coefficient beyond series end")
    wav = ricker(min(10 * width, x.size), width)
    row = np.convolve(x, wav[::-1], mode="same")
    return float(row[coeff])


# ---------------------------------------------------------------------------
# Entropy
# ---------------------------------------------------------------------------


def approximate_entropy(x, m=2, r=0.5):
    """Approximate entropy with tolerance ``r`` times the standard deviation."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    _require(x.size > m + 1, "series too short")
    tol = r * x.std()
    return float(abs(kernels.apen_phi(x, m, tol) - kernels.apen_phi(x, m + 1, tol)))


def binned_entropy(x, bins):
    x = np.asarray(x, dtype=np.float64)
    hist, _ = np.histogram(x, bins=bins)
    prob = hist[hist > 0] / x.size
    return float(-(prob * np.log(prob)).sum())


def fourier_entropy(x, bins=5):
    """Binned entropy of the Welch power spectrum scaled by its maximum."""
    x = np.asarray(x, dtype=np.float64)
    _require(x.size >= 2, "series too short")
    _, pxx = welch(x, nperseg=min(x.size, 256))
    top = pxx.max()
    _require(top > 0, "flat spectrum")
    return binned_entropy(pxx / top, bins)


def spectral_entropy(x):
    """Shannon entropy of the normalised periodogram, scaled to [0, 1]."""
    x = np.asarray(x, dtype=np.float64)
    _require(x.size >= 4, "series too short")
    power = np.abs(np.fft.rfft(x - x.mean()))[1:] ** 2
    total = power.sum()
    _require(total > 0, "flat spectrum")
    prob = power / total
    nz = prob[prob > 0]
    return float(-(nz * np.log(nz)).sum() / math.log(power.size))


# ---------------------------------------------------------------------------
# Autocorrelation, intermittency, transformation
# ---------------------------------------------------------------------------


def acf1(x):
    x = np.asarray(x, dtype=np.float64)
    _require(x.size >= 3, "series too short")
    xc = x - x.mean()
    den = xc @ xc
    _require(den > 0, "constant series")
    return float((xc[:-1] @ xc[1:]) / den)


def adi(x):
    """Average inter-demand interval: length over number of nonzero periods."""
    x = np.asarray(x, dtype=np.float64)
    nz = np.count_nonzero(x)
    _require(nz > 0, "no demand")
    return x.size / nz


def cv2(x):
    """Squared coefficient of variation of the nonzero demand sizes."""
    x = np.asarray(x, dtype=np.float64)
    sizes = x[x != 0]
    _require(sizes.size >= 2, "fewer than two demands")
    return float((sizes.std(ddof=1) / sizes.mean()) ** 2)


def golden_section(f, lo, hi, tol=1e-4):
    """Minimise a unimodal ``f`` on ``[lo, hi]`` by golden-section search."""
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv * (b - a)
    d = a + inv * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = f(d)
    return (a + b) / 2.0


def boxcox_lambda(x, frequency, lower=0.0, upper=1.0, tol=1e-4):
    """Guerrero's Box-Cox parameter on ``[lower, upper]``.

    The series tail is cut into blocks of one seasonal period; the
    parameter minimises the coefficient of variation of
    ``sd / mean ** (1 - lambda)`` across blocks. Blocks with zero mean are
    skipped, so at least two blocks with positive mean are required.
    """
    x = np.asarray(x, dtype=np.float64)
    period = max(2, int(frequency))
    nblk = x.size // period
    _require(nblk >= 2, "fewer than two seasonal blocks")
    blocks = x[x.size - nblk * period:].reshape(nblk, period)
    mu = blocks.mean(axis=1)
    sd = blocks.std(axis=1, ddof=1)
    keep = mu > 0
    _require(np.count_nonzero(keep) >= 2, "fewer than two blocks with demand")
    mu, sd = mu[keep], sd[keep]
    _require(np.any(sd > 0), "no within-block variation")

    def cv(lam):
        rat = sd / mu ** (1.0 - lam)
        return rat.std(ddof=1) / rat.mean()

    return float(golden_section(cv, lower, upper, tol))
