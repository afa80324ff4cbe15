"""Seven simple forecasters whose scaled hold-out errors serve as regression targets."""
import csv
import io
import logging
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from . import kernels
from ._io import atomic_write_text

log = logging.getLogger(__name__)

METHODS = ("naive", "seasonal_naive", "mean", "moving_average", "ses", "croston", "drift")
DEFAULT_HOLDOUT = {"daily": 28, "weekly": 4, "monthly": 1}
MA_WINDOW = 7
CROSTON_ALPHA = 0.1
SES_GRID = np.round(np.arange(1, 100) / 100.0, 2)
TARGET_MODES = ("error", "forecast")


def ses_forecast(x, alphas=SES_GRID):
    """Flat SES forecast with alpha picked by in-sample one-step SSE."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.size < 2:
        return x[-1], float(alphas[0])
    sse = kernels.ses_sse_grid(x, alphas)
    a = float(alphas[int(np.argmin(sse))])
    _, zf = lfilter([a], [1.0, a - 1.0], x[1:], zi=[(1.0 - a) * x[0]])
    # zf holds (1 - a) * final level
    return float(zf[0] / (1.0 - a)), a


def croston_forecast(x, alpha=CROSTON_ALPHA):
    """Croston's size/interval smoothing; 0 when no demand was observed."""
    idx = np.flatnonzero(x)
    if idx.size == 0:
        return 0.0
    size = float(x[idx[0]])
    interval = float(idx[0] + 1)
    for prev, cur in zip(idx[:-1], idx[1:]):
        size += alpha * (x[cur] - size)
        interval += alpha * ((cur - prev) - interval)
    return size / interval


def forecast_all(train, horizon, frequency):
    """Forecasts of every method for steps ``1..horizon`` after ``train``."""
    x = np.asarray(train, dtype=np.float64)
    n = x.size
    steps = np.arange(1, horizon + 1)
    m = int(frequency)
    last = x[-1]
    out = {
        "naive": np.full(horizon, last),
        "seasonal_naive": x[n - m + (steps - 1) % m],
        "mean": np.full(horizon, x.mean()),
        "moving_average": np.full(horizon, x[-MA_WINDOW:].mean()),
        "ses": np.full(horizon, ses_forecast(x)[0]),
        "croston": np.full(horizon, croston_forecast(x)),
        "drift": last + (last - x[0]) / (n - 1) * steps,
    }
    return out


def seasonal_scale(train, frequency):
    """In-sample mean absolute seasonal-naive error."""
    x = np.asarray(train, dtype=np.float64)
    return float(np.abs(x[frequency:] - x[:-frequency]).mean())


@dataclass(frozen=True)
class TargetBank:
    """Per-series targets, one column per forecasting method (NaN = excluded)."""

    names: tuple
    series_ids: tuple
    values: np.ndarray

    def complete_rows(self):
        return np.all(np.isfinite(self.values), axis=1)

    def column(self, name):
        return self.values[:, self.names.index(name)]

    def select_rows(self, ids):
        pos = {s: i for i, s in enumerate(self.series_ids)}
        return TargetBank(self.names, tuple(ids), self.values[[pos[i] for i in ids]])

    def to_csv_text(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["series_id"] + list(self.names))
        for sid, row in zip(self.series_ids, self.values):
            w.writerow([sid] + ["" if np.isnan(v) else repr(float(v)) for v in row])
        return buf.getvalue()

    def to_csv(self, path):
        return atomic_write_text(path, self.to_csv_text())

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            ids, rows = [], []
            for row in reader:
                ids.append(row[0])
                rows.append([float(v) if v else np.nan for v in row[1:]])
        vals = np.array(rows, dtype=np.float64).reshape(len(ids), len(header) - 1)
        return cls(tuple(header[1:]), tuple(ids), vals)


def series_targets(values, frequency, holdout, mode="error"):
    """The seven targets for one series, or None if it must be excluded."""
    x = np.asarray(values, dtype=np.float64)
    if x.size <= holdout + 2 * frequency:
        return None
    train, test = x[:-holdout], x[-holdout:]
    scale = seasonal_scale(train, frequency)
    if scale == 0:
        return None
    fc = forecast_all(train, holdout, frequency)
    if mode == "error":
        return np.array([np.abs(test - fc[k]).mean() / scale for k in METHODS])
    if mode == "forecast":
        return np.array([fc[k].mean() / scale for k in METHODS])
    raise ValueError(f"unknown target mode {mode!r}")


def make_targets(ds, holdout=None, mode="error"):
    """Build the target bank for every series of ``ds``.

    The last ``holdout`` periods (28 daily, 4 weekly, 1 monthly by default)
    are withheld; methods see only the preceding observations. In
    ``"error"`` mode a target is the method's hold-out MAE divided by the
    in-sample seasonal-naive MAE; ``"forecast"`` mode uses the mean
    forecast over the same scale instead. Series that are too short or
    have a zero scale are excluded (all-NaN row).
    """
    if holdout is None:
        holdout = DEFAULT_HOLDOUT[ds.level]
    rows = []
    for s in ds:
        t = series_targets(s.values, s.frequency, holdout, mode)
        if t is None:
            log.warning("series %s excluded from targets (too short or zero scale)", s.id)
            t = np.full(len(METHODS), np.nan)
        rows.append(t)
    vals = np.array(rows, dtype=np.float64).reshape(len(ds), len(METHODS))
    return TargetBank(METHODS, tuple(ds.ids), vals)
