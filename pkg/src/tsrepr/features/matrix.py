"""Feature matrices: extraction over a dataset and CSV round-tripping."""
import csv
import io
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .._io import atomic_write_text
from ..dataset import TooShortError, aggregate
from .catalog import MISSING, compute_features, feature_from_key

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FeatureMatrix:
    """Rows are series, columns are features; NaN marks a missing cell."""

    series_ids: tuple
    feature_ids: tuple
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64).reshape(len(self.series_ids),
                                                               len(self.feature_ids))
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "series_ids", tuple(self.series_ids))
        object.__setattr__(self, "feature_ids", tuple(self.feature_ids))
        if len(set(self.series_ids)) != len(self.series_ids):
            raise ValueError("duplicate series id in feature matrix")
        if len(set(self.feature_ids)) != len(self.feature_ids):
            raise ValueError("duplicate feature in feature matrix")

    @property
    def shape(self):
        return self.values.shape

    @property
    def keys(self):
        return [f.key for f in self.feature_ids]

    def column(self, fid):
        return self.values[:, self.feature_ids.index(fid)]

    def select_columns(self, fids):
        idx = [self.feature_ids.index(f) for f in fids]
        return FeatureMatrix(self.series_ids, [self.feature_ids[i] for i in idx],
                             self.values[:, idx])

    def select_rows(self, ids):
        pos = {s: i for i, s in enumerate(self.series_ids)}
        idx = [pos[s] for s in ids]
        return FeatureMatrix([self.series_ids[i] for i in idx], self.feature_ids,
                             self.values[idx])

    def with_values(self, values):
        return FeatureMatrix(self.series_ids, self.feature_ids, values)

    def to_csv_text(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["series_id"] + self.keys)
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
            if not header or header[0] != "series_id":
                raise ValueError(f"{path}: first column must be series_id")
            fids = [feature_from_key(k) for k in header[1:]]
            ids, rows = [], []
            for row in reader:
                ids.append(row[0])
                rows.append([float(v) if v != "" else MISSING for v in row[1:]])
        return cls(ids, fids, np.array(rows, dtype=np.float64).reshape(len(ids), len(fids)))


def stack_rows(matrices):
    """Concatenate matrices with identical columns row-wise."""
    first = matrices[0]
    for m in matrices[1:]:
        if m.feature_ids != first.feature_ids:
            raise ValueError("cannot stack matrices with different columns")
    ids = [s for m in matrices for s in m.series_ids]
    return FeatureMatrix(ids, first.feature_ids, np.vstack([m.values for m in matrices]))


def _series_row(series, by_level, order):
    values = {}
    for level, fids in by_level.items():
        try:
            s = aggregate(series, level)
        except TooShortError:
            log.info("series %s too short for %s features", series.id, level)
            for f in fids:
                values[f] = MISSING
            continue
        for f, v in zip(fids, compute_features(s, fids)):
            values[f] = v
    return [values[f] for f in order]


def extract_matrix(ds, catalog, levels=None, threads=1):
    """Evaluate ``catalog`` on every (daily) series of ``ds``.

    Only features whose level is in ``levels`` (default: all) are kept.
    Series are processed independently; rows are keyed by series id so
    the result does not depend on scheduling.
    """
    catalog = [f for f in catalog if levels is None or f.level in levels]
    if not catalog:
        raise ValueError("empty feature catalog")
    by_level = {}
    for f in catalog:
        by_level.setdefault(f.level, []).append(f)

    def work(s):
        return s.id, _series_row(s, by_level, catalog)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = dict(pool.map(work, ds.series))
    else:
        rows = dict(map(work, ds.series))
    ids = ds.ids
    values = np.array([rows[i] for i in ids], dtype=np.float64).reshape(len(ids), len(catalog))
    return FeatureMatrix(ids, catalog, values)
