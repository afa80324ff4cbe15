"""Demand series containers, CSV loaders and temporal aggregation."""
from __future__ import annotations

import csv
import datetime as dt
import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ._io import atomic_write_text

LEVELS = ("daily", "weekly", "monthly")
LEVEL_FREQUENCY = {"daily": 7, "weekly": 52, "monthly": 12}
LEVEL_CODES = {"d": "daily", "w": "weekly", "m": "monthly"}
WEEK_DAYS = 7
UNDATED_MONTH_DAYS = 30


class DataError(ValueError):
    """Malformed or invalid input data."""


class SchemaError(DataError):
    """A required column is absent."""


class LabelCoverageError(DataError):
    """Series without a label, or labels for unknown series."""


class TooShortError(DataError):
    """A series is too short for the requested operation."""


def parse_levels(levels: str | Sequence[str]) -> tuple[str, ...]:
    """Parse ``"d,w,m"`` (or full names) into canonical level names."""
    items = levels.split(",") if isinstance(levels, str) else list(levels)
    out = []
    for item in items:
        item = item.strip().lower()
        if not item:
            continue
        name = LEVEL_CODES.get(item, item)
        if name not in LEVELS:
            raise ValueError(f"unknown aggregation level {item!r}")
        if name not in out:
            out.append(name)
    return tuple(out)


@dataclass(frozen=True, eq=False)
class SalesSeries:
    """One non-negative demand series.

    ``values`` is stored as a read-only float array. ``dates`` (optional)
    are ``datetime.date`` objects, one per value, strictly increasing and
    evenly spaced at the series' level.
    """

    id: str
    values: np.ndarray
    dates: Optional[tuple] = None
    frequency: int = 7
    level: str = "daily"

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64)
        if vals.ndim != 1:
            raise DataError(f"series {self.id!r}: values must be one-dimensional")
        if not np.all(np.isfinite(vals)):
            raise DataError(f"series {self.id!r}: non-finite value")
        if np.any(vals < 0):
            raise DataError(f"series {self.id!r}: negative value")
        if self.frequency < 1:
            raise DataError(f"series {self.id!r}: frequency must be positive")
        if self.level not in LEVELS:
            raise DataError(f"series {self.id!r}: unknown level {self.level!r}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        if self.dates is not None:
            dates = tuple(self.dates)
            if len(dates) != len(vals):
                raise DataError(f"series {self.id!r}: dates and values differ in length")
            _check_spacing(self.id, dates, self.level)
            object.__setattr__(self, "dates", dates)

    def __len__(self):
        return len(self.values)

    def __eq__(self, other):
        if not isinstance(other, SalesSeries):
            return NotImplemented
        return (
            self.id == other.id
            and self.frequency == other.frequency
            and self.level == other.level
            and self.dates == other.dates
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


def _check_spacing(sid, dates, level):
    if len(dates) < 2:
        return
    if level == "monthly":
        idx = [d.year * 12 + d.month for d in dates]
        steps = {b - a for a, b in zip(idx, idx[1:])}
    else:
        steps = {(b - a).days for a, b in zip(dates, dates[1:])}
    if len(steps) != 1 or steps.pop() <= 0:
        raise DataError(f"series {sid!r}: dates must be strictly increasing and evenly spaced")


@dataclass(frozen=True)
class LabeledDataset:
    """A collection of series plus class labels for one or more tasks.

    ``tasks`` maps task name to a ``{series_id: label}`` dict.
    """

    series: tuple
    tasks: dict = field(default_factory=dict)
    level: str = "daily"
    name: str = "dataset"

    def __post_init__(self):
        object.__setattr__(self, "series", tuple(self.series))
        ids = [s.id for s in self.series]
        if len(set(ids)) != len(ids):
            raise DataError("series ids must be unique")
        idset = set(ids)
        for task, labels in self.tasks.items():
            missing = sorted(idset - set(labels))
            if missing:
                raise LabelCoverageError(f"task {task!r} has no label for: {', '.join(missing)}")
            unknown = sorted(set(labels) - idset)
            if unknown:
                raise LabelCoverageError(f"task {task!r} labels unknown ids: {', '.join(unknown)}")
            if len(set(labels.values())) < 2:
                raise DataError(f"task {task!r} needs at least two distinct labels")

    @property
    def ids(self):
        return [s.id for s in self.series]

    def __len__(self):
        return len(self.series)

    def __iter__(self):
        return iter(self.series)

    def labels(self, task):
        """Labels of ``task`` in series order."""
        lab = self.tasks[task]
        return [lab[s.id] for s in self.series]

    def subset(self, ids):
        keep = set(ids)
        series = [s for s in self.series if s.id in keep]
        tasks = {t: {i: lab[i] for i in lab if i in keep} for t, lab in self.tasks.items()}
        return LabeledDataset(series, tasks, self.level, self.name)


# ---------------------------------------------------------------------------
# CSV input/output
# ---------------------------------------------------------------------------


def _parse_value(raw, rownum):
    try:
        v = float(raw)
    except (TypeError, ValueError):
        raise DataError(f"row {rownum}: non-numeric value {raw!r}") from None
    if not math.isfinite(v):
        raise DataError(f"row {rownum}: non-finite value {raw!r}")
    if v < 0:
        raise DataError(f"row {rownum}: negative value {raw!r}")
    return v


def _parse_date(raw, rownum):
    try:
        return dt.date.fromisoformat(raw.strip())
    except (AttributeError, ValueError):
        raise DataError(f"row {rownum}: bad date {raw!r} (expected YYYY-MM-DD)") from None


def load_long_csv(path, id_col="id", date_col="date", value_col="value",
                  frequency=7, name=None):
    """Load a long-format CSV (one row per series and period).

    Row numbers in error messages count the header as row 1. When
    ``date_col`` is None rows are taken in file order.
    """
    path = Path(path)
    groups: dict[str, list] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        needed = [c for c in (id_col, date_col, value_col) if c is not None]
        missing = [c for c in needed if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
        for rownum, row in enumerate(reader, start=2):
            sid = row[id_col]
            value = _parse_value(row[value_col], rownum)
            date = _parse_date(row[date_col], rownum) if date_col else None
            groups.setdefault(sid, []).append((date, value, rownum))
    series = []
    for sid, rows in groups.items():
        if date_col:
            rows.sort(key=lambda r: r[0])
            for a, b in zip(rows, rows[1:]):
                if a[0] == b[0]:
                    raise DataError(f"row {b[2]}: duplicate (id, date) = ({sid}, {b[0]})")
            dates = tuple(r[0] for r in rows)
        else:
            dates = None
        try:
            series.append(SalesSeries(sid, [r[1] for r in rows], dates, frequency))
        except DataError as exc:
            raise DataError(f"{path}: {exc}") from None
    return LabeledDataset(series, {}, "daily", name or path.stem)


def write_long_csv(ds, path, id_col="id", date_col="date", value_col="value"):
    """Write a dataset in the long format read by :func:`load_long_csv`."""
    dated = all(s.dates is not None for s in ds)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([id_col, date_col, value_col] if dated else [id_col, value_col])
    for s in ds:
        for t, v in enumerate(s.values):
            if dated:
                w.writerow([s.id, s.dates[t].isoformat(), repr(float(v))])
            else:
                w.writerow([s.id, repr(float(v))])
    atomic_write_text(path, buf.getvalue())


def load_wide_csv(path, id_col="id", value_prefix="d_", label_cols=(),
                  frequency=7, name=None):
    """Load a wide CSV with one row per series (the M5 sales layout).

    Columns starting with ``value_prefix`` hold the observations in order;
    ``label_cols`` become classification tasks.
    """
    path = Path(path)
    series, tasks = [], {c: {} for c in label_cols}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if id_col not in header:
            raise SchemaError(f"{path}: missing column {id_col}")
        missing = [c for c in label_cols if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
        vidx = [i for i, c in enumerate(header) if c.startswith(value_prefix)]
        iidx = header.index(id_col)
        lidx = {c: header.index(c) for c in label_cols}
        for rownum, row in enumerate(reader, start=2):
            vals = [_parse_value(row[i], rownum) for i in vidx]
            sid = row[iidx]
            series.append(SalesSeries(sid, vals, None, frequency))
            for c, i in lidx.items():
                tasks[c][sid] = row[i]
    return LabeledDataset(series, tasks, "daily", name or path.stem)


def attach_labels(ds, path, id_col="id"):
    """Return a copy of ``ds`` with task labels read from a label CSV.

    Every non-id column is a task. Every series must be labelled and every
    labelled id must exist in ``ds``.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        if id_col not in header:
            raise SchemaError(f"{path}: missing column {id_col}")
        task_cols = [c for c in header if c != id_col]
        if not task_cols:
            raise SchemaError(f"{path}: no task columns")
        tasks = {c: {} for c in task_cols}
        for row in reader:
            for c in task_cols:
                tasks[c][row[id_col]] = row[c]
    known = set(ds.ids)
    labelled = set(tasks[task_cols[0]])
    missing = sorted(known - labelled)
    if missing:
        raise LabelCoverageError(f"no label for series: {', '.join(missing)}")
    unknown = sorted(labelled - known)
    if unknown:
        raise LabelCoverageError(f"labels for unknown series: {', '.join(unknown)}")
    merged = dict(ds.tasks)
    merged.update(tasks)
    return LabeledDataset(ds.series, merged, ds.level, ds.name)


def write_labels_csv(ds, path, id_col="id"):
    """Write the task labels of ``ds`` in the layout read by :func:`attach_labels`."""
    tasks = sorted(ds.tasks)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([id_col] + tasks)
    for sid in ds.ids:
        w.writerow([sid] + [ds.tasks[t][sid] for t in tasks])
    atomic_write_text(path, buf.getvalue())


# ---------------------------------------------------------------------------
# Temporal aggregation
# ---------------------------------------------------------------------------


def _block_sums(values, width):
    nb = len(values) // width
    return values[: nb * width].reshape(nb, width).sum(axis=1), nb


def _calendar_months(series):
    vals, dates = series.values, series.dates
    out_vals, out_dates = [], []
    start = 0
    n = len(vals)
    while start < n:
        y, m = dates[start].year, dates[start].month
        end = start
        while end < n and dates[end].year == y and dates[end].month == m:
            end += 1
        first = dates[start]
        last = dates[end - 1]
        ndays = (dt.date(y + (m == 12), m % 12 + 1, 1) - dt.date(y, m, 1)).days
        if first.day == 1 and last.day == ndays and end - start == ndays:
            out_vals.append(vals[start:end].sum())
            out_dates.append(dt.date(y, m, 1))
        start = end
    return np.array(out_vals), tuple(out_dates)


def aggregate(series, level):
    """Aggregate a daily series to ``"weekly"`` or ``"monthly"``.

    Weekly buckets are consecutive 7-day blocks anchored at the first
    observation; a trailing partial block is dropped. Monthly buckets are
    calendar months when dates are known (incomplete months dropped),
    otherwise 30-day blocks. Passing ``"daily"`` returns the series itself.
    """
    if level == "daily":
        if series.level != "daily":
            raise ValueError("cannot disaggregate")
        return series
    if series.level != "daily":
        raise ValueError(f"aggregate expects a daily series, got {series.level}")
    if level == "weekly":
        vals, nb = _block_sums(series.values, WEEK_DAYS)
        dates = series.dates[: nb * WEEK_DAYS: WEEK_DAYS] if series.dates else None
    elif level == "monthly":
        if series.dates is not None:
            vals, dates = _calendar_months(series)
        else:
            vals, _ = _block_sums(series.values, UNDATED_MONTH_DAYS)
            dates = None
    else:
        raise ValueError(f"unknown level {level!r}")
    if len(vals) < 2:
        raise TooShortError(f"series {series.id!r}: fewer than 2 {level} observations")
    return replace(series, values=vals, dates=dates,
                   frequency=LEVEL_FREQUENCY[level], level=level)


def aggregate_dataset(ds, level):
    """Aggregate every series; raises :class:`TooShortError` on the first failure."""
    if level == ds.level:
        return ds
    return LabeledDataset([aggregate(s, level) for s in ds], ds.tasks, level, ds.name)
