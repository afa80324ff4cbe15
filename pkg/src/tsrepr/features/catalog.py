"""Feature identifiers, the built-in catalogs and single-feature evaluation."""
from dataclasses import dataclass, field

import numpy as np

from . import decompose as dec
from . import functions as fn
from .adf import adf_statistic
from .functions import FeatureUnavailable

MISSING = float("nan")


@dataclass(frozen=True)
class FeatureId:
    """A feature computed at one aggregation level.

    ``name`` is the display name (parameters included), ``kind`` selects
    the implementation and ``params`` holds its keyword arguments as a
    sorted tuple of pairs so the id stays hashable.
    """

    name: str
    level: str
    kind: str
    params: tuple = field(default=())

    @property
    def key(self):
        return f"{self.name}@{self.level}"

    @property
    def kwargs(self):
        return dict(self.params)

    def __str__(self):
        return self.key


def _fmt(v):
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, float) and v.is_integer() and v not in (0.0, 1.0):
        return str(int(v))
    return str(v)


def make_feature(kind, level, name=None, **params):
    if kind not in _REGISTRY:
        raise KeyError(f"unknown feature kind {kind!r}")
    if name is None:
        name = _NAMERS[kind](**params) if kind in _NAMERS else kind
    return FeatureId(name, level, kind, tuple(sorted(params.items())))


class _Context:
    """Per-(series, level) evaluation state; caches the decomposition."""

    def __init__(self, values, frequency):
        self.x = np.asarray(values, dtype=np.float64)
        self.frequency = frequency
        self._dec = None

    @property
    def dec(self):
        if self._dec is None:
            self._dec = dec.decompose(self.x, self.frequency)
        return self._dec


_REGISTRY = {
    "fft_coefficient": lambda c, coeff, attr: fn.dft_attribute(c.x, coeff, attr),
    "count_below": lambda c, t: fn.count_below(c.x, t),
    "has_duplicate_max": lambda c: fn.has_duplicate_max(c.x),
    "variance_larger_than_standard_deviation":
        lambda c: fn.variance_larger_than_standard_deviation(c.x),
    "number_crossing_m": lambda c, m: fn.number_crossing_m(c.x, m),
    "change_quantiles": lambda c, ql, qh, isabs, f_agg: fn.change_quantiles(c.x, ql, qh, isabs, f_agg),
    "ratio_beyond_r_sigma": lambda c, r: fn.ratio_beyond_r_sigma(c.x, r),
    "large_standard_deviation": lambda c, r: fn.large_standard_deviation(c.x, r),
    "agg_linear_trend": lambda c, chunk_len, f_agg: fn.agg_linear_trend(c.x, chunk_len, f_agg),
    "cwt_coefficients": lambda c, coeff, w: fn.cwt_coefficient(c.x, w, coeff),
    "approximate_entropy": lambda c, m, r: fn.approximate_entropy(c.x, m, r),
    "fourier_entropy": lambda c, bins: fn.fourier_entropy(c.x, bins),
    "augmented_dickey_fuller": lambda c: adf_statistic(c.x),
    "e_acf1": lambda c: dec.remainder_acf1(c.dec),
    "trough": lambda c: dec.trough(c.dec),
    "spectral_entropy": lambda c: fn.spectral_entropy(c.x),
    "trend_strength": lambda c: dec.trend_strength(c.dec),
    "seasonality_strength": lambda c: dec.seasonality_strength(c.dec),
    "seasonal_period": lambda c: float(c.frequency),
    "acf1": lambda c: fn.acf1(c.x),
    "boxcox_lambda": lambda c: fn.boxcox_lambda(c.x, c.frequency),
    "adi": lambda c: fn.adi(c.x),
    "cv2": lambda c: fn.cv2(c.x),
}

_NAMERS = {
    "fft_coefficient": lambda coeff, attr: f"fft_coefficient_attr_{attr}_coeff_{coeff}",
    "count_below": lambda t: f"count_below_t_{_fmt(t)}",
    "number_crossing_m": lambda m: f"number_crossing_m_{_fmt(m)}",
    "change_quantiles": lambda ql, qh, isabs, f_agg:
        f"change_quantiles_{f_agg}_isabs_{isabs}_qh_{qh}_ql_{ql}",
    "ratio_beyond_r_sigma": lambda r: f"ratio_beyond_r_sigma_r_{_fmt(r)}",
    "large_standard_deviation": lambda r: f"large_standard_deviation_r_{r}",
    "agg_linear_trend": lambda chunk_len, f_agg:
        f"agg_linear_trend_attr_rvalue_chunk_len_{chunk_len}_f_agg_{f_agg}",
    "cwt_coefficients": lambda coeff, w: f"cwt_coefficients_coeff_{coeff}_w_{w}_widths_2-5-10-20",
    "approximate_entropy": lambda m, r: f"approximate_entropy_m_{m}_r_{r}",
    "fourier_entropy": lambda bins: f"fourier_entropy_bins_{bins}",
    "augmented_dickey_fuller": lambda: "augmented_dickey_fuller_attr_teststat_autolag_AIC",
}


def evaluate(ctx, fid):
    """Evaluate ``fid`` in a context; missing on precondition failure."""
    try:
        value = _REGISTRY[fid.kind](ctx, **fid.kwargs)
    except FeatureUnavailable:
        return MISSING
    value = float(value)
    return value if np.isfinite(value) else MISSING


def compute_feature(series, fid):
    """Compute one feature for a series that is already at ``fid.level``."""
    if series.level != fid.level:
        raise ValueError(f"series is {series.level}, feature expects {fid.level}")
    return evaluate(_Context(series.values, series.frequency), fid)


def compute_features(series, fids):
    """Compute several same-level features, sharing intermediate results."""
    ctx = _Context(series.values, series.frequency)
    out = []
    for fid in fids:
        if series.level != fid.level:
            raise ValueError(f"series is {series.level}, feature expects {fid.level}")
        out.append(evaluate(ctx, fid))
    return out


# ---------------------------------------------------------------------------
# Built-in catalogs
# ---------------------------------------------------------------------------


def _fft(attr, coeff, level):
    return make_feature("fft_coefficient", level, coeff=coeff, attr=attr)


def _cq(ql, qh, isabs, f_agg, level):
    return make_feature("change_quantiles", level, ql=ql, qh=qh, isabs=isabs, f_agg=f_agg)


def table_a_catalog():
    """The 42 selected features: 10 daily, 22 weekly and 10 monthly."""
    D, W, M = "daily", "weekly", "monthly"
    return [
        make_feature("count_below", D, t=0),
        _fft("angle", 63, D),
        make_feature("trough", D),
        _fft("angle", 73, D),
        make_feature("has_duplicate_max", D),
        _fft("angle", 1, D),
        _fft("angle", 1, M),
        _fft("angle", 22, D),
        _fft("angle", 59, D),
        make_feature("variance_larger_than_standard_deviation", D),
        _fft("angle", 26, D),
        _fft("angle", 26, W),
        make_feature("augmented_dickey_fuller", W),
        _cq(0.8, 1.0, True, "mean", W),
        _fft("imag", 47, W),
        _fft("real", 36, W),
        make_feature("number_crossing_m", W, m=1),
        _fft("angle", 2, W),
        _fft("angle", 2, M),
        _fft("angle", 5, W),
        _fft("imag", 44, W),
        make_feature("cwt_coefficients", W, coeff=12, w=2),
        _fft("real", 38, W),
        _fft("real", 42, W),
        _fft("angle", 20, W),
        _fft("imag", 49, W),
        make_feature("agg_linear_trend", W, chunk_len=10, f_agg="var"),
        _fft("real", 45, W),
        _fft("real", 46, W),
        _fft("imag", 46, W),
        _fft("abs", 49, W),
        make_feature("approximate_entropy", W, m=2, r=0.5),
        _fft("real", 43, W),
        _fft("real", 48, W),
        make_feature("fourier_entropy", M, bins=5),
        _cq(0.2, 0.4, True, "mean", M),
        make_feature("ratio_beyond_r_sigma", M, r=1),
        make_feature("e_acf1", M),
        _cq(0.2, 0.4, False, "var", M),
        _cq(0.4, 0.6, False, "var", M),
        make_feature("large_standard_deviation", M, r=0.3),
        make_feature("agg_linear_trend", M, chunk_len=5, f_agg="max"),
    ]


VALIDATION_KINDS = ("spectral_entropy", "trend_strength", "seasonality_strength",
                    "seasonal_period", "acf1", "boxcox_lambda", "adi", "cv2")


def validation_catalog(levels=("daily", "weekly", "monthly")):
    """The eight intuitive features at each requested level."""
    return [make_feature(k, lvl) for lvl in levels for k in VALIDATION_KINDS]


CATALOGS = {
    "table_a": table_a_catalog,
    "validation": validation_catalog,
    "all": lambda: table_a_catalog() + validation_catalog(),
}


def get_catalog(name, levels=None):
    """A named catalog, optionally restricted to some levels."""
    try:
        cat = CATALOGS[name]()
    except KeyError:
        raise KeyError(f"unknown catalog {name!r}; choose from {sorted(CATALOGS)}") from None
    if levels is not None:
        cat = [f for f in cat if f.level in levels]
    return cat


def feature_from_key(key):
    """Rebuild a :class:`FeatureId` from its ``name@level`` column header.

    Names outside the built-in catalogs come back with kind ``"external"``
    and cannot be computed, but can still flow through selection and
    embedding.
    """
    name, sep, level = key.rpartition("@")
    if not sep:
        raise ValueError(f"column {key!r} is not of the form name@level")
    for fid in CATALOGS["all"]():
        if fid.name == name:
            return FeatureId(fid.name, level, fid.kind, fid.params)
    return FeatureId(name, level, "external")
