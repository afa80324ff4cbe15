"""Grid-occupancy comparison of two embedded datasets."""
import csv
import io
from dataclasses import dataclass

import numpy as np

from ._io import atomic_write_text

MARGIN = 1e-9


class CoverageError(ValueError):
    """Empty point set or a degenerate bounding box."""


@dataclass(frozen=True)
class Grid:
    """An ``n_side`` x ``n_side`` grid with per-dataset point counts.

    ``counts[tag]`` is an (n_side, n_side) integer array indexed
    ``[cell_x, cell_y]``.
    """

    n_side: int
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float
    counts: dict

    @property
    def n_cells(self):
        return self.n_side * self.n_side

    def occupied(self, tag):
        return self.counts[tag] > 0

    def cell_index(self, points):
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        return (_index(pts[:, 0], self.x_lo, self.x_hi, self.n_side),
                _index(pts[:, 1], self.y_lo, self.y_hi, self.n_side))


def _bounds(v):
    lo, hi = float(v.min()), float(v.max())
    span = hi - lo
    pad = MARGIN * span if span > 0 else MARGIN * max(1.0, abs(lo))
    lo, hi = lo - pad, hi + pad
    if not (np.isfinite(lo) and np.isfinite(hi) and hi > lo):
        raise CoverageError("degenerate bounding box")
    return lo, hi


def _index(v, lo, hi, n):
    width = (hi - lo) / n
    idx = np.floor((v - lo) / width).astype(np.int64)
    return np.clip(idx, 0, n - 1)


def build_grid(point_sets, n_side=30):
    """Grid over the joint bounding box of several tagged point sets.

    ``point_sets`` maps a dataset tag to an (n, 2) array. The box is the
    union's extent widened by a relative margin of 1e-9 per side; cells are
    half-open with points on the top edge clamped into the last cell.
    """
    if n_side < 1:
        raise CoverageError("n_side must be positive")
    sets = {t: np.asarray(p, dtype=np.float64).reshape(-1, 2) for t, p in point_sets.items()}
    if len(sets) < 1 or any(p.shape[0] == 0 for p in sets.values()):
        raise CoverageError("every point set must be nonempty")
    allpts = np.vstack(list(sets.values()))
    if not np.all(np.isfinite(allpts)):
        raise CoverageError("non-finite coordinates")
    x_lo, x_hi = _bounds(allpts[:, 0])
    y_lo, y_hi = _bounds(allpts[:, 1])
    counts = {}
    for tag, pts in sets.items():
        ix = _index(pts[:, 0], x_lo, x_hi, n_side)
        iy = _index(pts[:, 1], y_lo, y_hi, n_side)
        c = np.zeros((n_side, n_side), dtype=np.int64)
        np.add.at(c, (ix, iy), 1)
        counts[tag] = c
    return Grid(n_side, x_lo, x_hi, y_lo, y_hi, counts)


def miscoverage(grid, a, b):
    """Share of all grid cells occupied by ``b`` but not by ``a``."""
    ia, ib = grid.occupied(a), grid.occupied(b)
    return float(np.count_nonzero(~ia & ib)) / grid.n_cells


def nor(grid, a, b):
    """Share of ``a``'s points lying in cells that ``b`` does not occupy."""
    na = grid.counts[a]
    return float(na[~grid.occupied(b)].sum()) / float(na.sum())


@dataclass(frozen=True)
class CoverageReport:
    a: str
    b: str
    miscoverage_ab: float
    miscoverage_ba: float
    nor_ab: float
    nor_ba: float
    occupied_a: int
    occupied_b: int
    n_side: int

    def as_dict(self):
        return {
            "a": self.a, "b": self.b, "n_side": self.n_side,
            "miscoverage_ab": self.miscoverage_ab, "miscoverage_ba": self.miscoverage_ba,
            "nor_ab": self.nor_ab, "nor_ba": self.nor_ba,
            "occupied_cells": {self.a: self.occupied_a, self.b: self.occupied_b},
        }


def coverage_report(grid, a, b):
    return CoverageReport(a, b, miscoverage(grid, a, b), miscoverage(grid, b, a),
                          nor(grid, a, b), nor(grid, b, a),
                          int(np.count_nonzero(grid.occupied(a))),
                          int(np.count_nonzero(grid.occupied(b))), grid.n_side)


def pairwise_grids(embedding, n_side=30, joint_grid=False):
    """Yield ``(a, b, grid)`` for every unordered pair of dataset tags.

    Each pair gets a grid over its own union unless ``joint_grid`` is set,
    in which case one grid spans all datasets.
    """
    tags = embedding.tags
    if len(tags) < 2:
        raise CoverageError("need at least two dataset tags")
    sets = {t: embedding.points_for(t) for t in tags}
    shared = build_grid(sets, n_side) if joint_grid else None
    for i, a in enumerate(tags):
        for b in tags[i + 1:]:
            yield a, b, shared or build_grid({a: sets[a], b: sets[b]}, n_side)


def pairwise_coverage(embedding, n_side=30, joint_grid=False):
    """Coverage reports for every unordered pair of dataset tags."""
    return [coverage_report(g, a, b) for a, b, g in pairwise_grids(embedding, n_side, joint_grid)]


def coverage_matrix(reports):
    """Nested dicts ``{metric: {A: {B: value}}}`` from pairwise reports."""
    mis, no = {}, {}
    for r in reports:
        for (x, y), (m, n) in (((r.a, r.b), (r.miscoverage_ab, r.nor_ab)),
                               ((r.b, r.a), (r.miscoverage_ba, r.nor_ba))):
            mis.setdefault(x, {})[y] = m
            no.setdefault(x, {})[y] = n
    return {"miscoverage": mis, "nor": no}


def occupancy_csv(grid, a, b, path):
    """Dump per-cell counts of two datasets (cell_x, cell_y, count_A, count_B)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["cell_x", "cell_y", f"count_{a}", f"count_{b}"])
    ca, cb = grid.counts[a], grid.counts[b]
    for ix in range(grid.n_side):
        for iy in range(grid.n_side):
            w.writerow([ix, iy, int(ca[ix, iy]), int(cb[ix, iy])])
    return atomic_write_text(path, buf.getvalue())


__all__ = ["Grid", "CoverageReport", "CoverageError", "build_grid", "miscoverage", "nor",
           "coverage_report", "pairwise_grids", "pairwise_coverage", "coverage_matrix", "occupancy_csv"]
