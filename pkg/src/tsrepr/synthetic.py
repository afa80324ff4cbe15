"""Synthetic retail-like demand generators for tests, demos and benchmarks."""
import datetime as dt

import numpy as np

from .dataset import LabeledDataset, SalesSeries

# (demand probability range, size-CV range, log-volume mean and sd) per regime;
# frequent demand comes with larger volumes, sporadic demand with small ones
REGIMES = {
    "smooth": ((0.90, 1.00), (0.15, 0.45), (3.0, 0.5)),
    "erratic": ((0.90, 1.00), (0.90, 1.60), (2.5, 0.6)),
    "intermittent": ((0.05, 0.35), (0.15, 0.45), (1.0, 0.5)),
    "lumpy": ((0.05, 0.35), (1.00, 2.00), (1.5, 0.6)),
}


def simulate_series(rng, length, regime, level=None, season_amp=None, trend=None):
    """One daily series from a Bernoulli-occurrence, gamma-size demand model.

    Occurrence probability, size CV and volume are drawn per regime;
    a weekly profile and a mild multiplicative trend modulate the sizes.
    Sizes are rounded to whole units (at least one unit when demand occurs).
    """
    (p_lo, p_hi), (cv_lo, cv_hi), (mu, sd) = REGIMES[regime]
    prob = rng.uniform(p_lo, p_hi)
    cv = rng.uniform(cv_lo, cv_hi)
    level = rng.lognormal(mu, sd) if level is None else level
    amp = rng.uniform(0.0, 0.5) if season_amp is None else season_amp
    slope = rng.normal(0.0, 0.3) if trend is None else trend
    t = np.arange(length)
    weekly = 1.0 + amp * np.sin(2 * np.pi * (t + rng.integers(7)) / 7.0)
    drift = np.exp(slope * t / length)
    shape = 1.0 / (cv * cv)
    sizes = rng.gamma(shape, level * weekly * drift / shape)
    occur = rng.random(length) < prob
    return np.where(occur, np.maximum(1.0, np.round(sizes)), 0.0)


def retail_dataset(n_series, length=730, seed=0, regimes=None, weights=None,
                   name="synthetic", start=dt.date(2018, 1, 1), prefix=None):
    """A dataset mixing demand regimes, with regime and store labels.

    ``regimes``/``weights`` select which regimes appear and in what
    proportion (default: all four, equally likely).
    """
    rng = np.random.default_rng(seed)
    regimes = list(regimes or REGIMES)
    weights = np.full(len(regimes), 1.0 / len(regimes)) if weights is None else np.asarray(weights)
    prefix = prefix or name
    dates = tuple(start + dt.timedelta(days=i) for i in range(length))
    series, regime_lab, store_lab = [], {}, {}
    for i in range(n_series):
        reg = regimes[rng.choice(len(regimes), p=weights / weights.sum())]
        sid = f"{prefix}_{i:05d}"
        vals = simulate_series(rng, length, reg)
        series.append(SalesSeries(sid, vals, dates))
        regime_lab[sid] = reg
        store_lab[sid] = f"store_{rng.integers(4)}"
    tasks = {}
    if len(set(regime_lab.values())) > 1:
        tasks["regime"] = regime_lab
    if len(set(store_lab.values())) > 1:
        tasks["store"] = store_lab
    return LabeledDataset(series, tasks, "daily", name)


def planted_demand_dataset(counts, length=60, seed=0):
    """Series whose demand class is fixed by construction.

    ``counts`` maps class name to the number of series. Smooth/erratic
    series have demand every period (ADI = 1); intermittent/lumpy ones
    every third period (ADI = 3). Sizes alternate between two values giving
    CV^2 well below (8, 12) or well above (1, 19) the 0.49 cutoff.
    """
    rng = np.random.default_rng(seed)
    design = {
        "smooth": (1, (8.0, 12.0)),
        "erratic": (1, (1.0, 19.0)),
        "intermittent": (3, (8.0, 12.0)),
        "lumpy": (3, (1.0, 19.0)),
    }
    series, labels = [], {}
    k = 0
    for cls, n in counts.items():
        gap, (a, b) = design[cls]
        for _ in range(n):
            vals = np.zeros(length)
            pos = np.arange(rng.integers(gap), length, gap)
            sizes = np.resize([a, b], pos.size)
            vals[pos] = rng.permutation(sizes)
            sid = f"p{k:05d}"
            series.append(SalesSeries(sid, vals))
            labels[sid] = cls
            k += 1
    return LabeledDataset(series, {}, "daily", "planted"), labels
