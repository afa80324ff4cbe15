import csv

import numpy as np
import pytest

from tsrepr.coverage import (
    CoverageError,
    build_grid,
    coverage_matrix,
    coverage_report,
    miscoverage,
    nor,
    occupancy_csv,
    pairwise_coverage,
)
from tsrepr.embedding import Embedding2D


def _oracle(a, b, n):
    """Cell sets and metrics by plain loops over points."""
    pts = np.vstack([a, b])
    lo = pts.min(0) - 1e-9 * (pts.max(0) - pts.min(0))
    hi = pts.max(0) + 1e-9 * (pts.max(0) - pts.min(0))

    def cell(p):
        return tuple(min(n - 1, int((p[k] - lo[k]) // ((hi[k] - lo[k]) / n))) for k in range(2))

    ca = [cell(p) for p in a]
    cb = [cell(p) for p in b]
    sa, sb = set(ca), set(cb)
    return (len(sb - sa) / n ** 2, len(sa - sb) / n ** 2,
            sum(c not in sb for c in ca) / len(ca), sum(c not in sa for c in cb) / len(cb))


class TestGrid:
    def test_same_location(self):
        g = build_grid({"A": [[1.0, 1.0]], "B": [[1.0, 1.0]]}, 2)
        assert np.array_equal(g.occupied("A"), g.occupied("B"))
        assert g.counts["A"].sum() == 1

    def test_corners(self):
        corners = np.array([[0.0, 0], [0, 1], [1, 0], [1, 1]])
        g = build_grid({"A": corners, "B": corners[:1]}, 2)
        assert np.all(g.counts["A"] == 1)

    def test_conservation(self, rng):
        g = build_grid({"A": rng.normal(size=(100, 2)), "B": rng.normal(size=(7, 2))})
        assert g.counts["A"].sum() == 100 and g.counts["B"].sum() == 7
        assert g.n_cells == 900

    def test_errors(self):
        with pytest.raises(CoverageError):
            build_grid({"A": np.empty((0, 2)), "B": [[0.0, 0.0]]})
        with pytest.raises(CoverageError):
            build_grid({"A": [[np.nan, 0.0]]})
        with pytest.raises(CoverageError):
            build_grid({"A": [[0.0, 0.0]]}, 0)


class TestMetrics:
    def test_hand_miscoverage(self):
        # cells 1..4 = (0,0), (1,0), (0,1), (1,1); A on {1,3}, B on {2,4}
        a = np.array([[0.1, 0.1], [0.1, 0.9]])
        b = np.array([[0.9, 0.1], [0.9, 0.9]])
        g = build_grid({"A": a, "B": b}, 2)
        assert miscoverage(g, "A", "B") == 0.5
        assert miscoverage(g, "B", "A") == 0.5

    def test_hand_nor(self):
        # all points on one row: A has 3 points in the left cell and 1 in the right,
        # B only occupies the right cell
        a = np.array([[0.0, 0.0], [0.1, 0.0], [0.2, 0.0], [0.9, 0.0]])
        b = np.array([[0.8, 0.0], [1.0, 0.0]])
        g = build_grid({"A": a, "B": b}, 2)
        assert g.occupied("B").sum() == 1
        assert nor(g, "A", "B") == 0.75
        assert nor(g, "B", "A") == 0.0

    def test_identical(self, rng):
        p = rng.normal(size=(50, 2))
        r = coverage_report(build_grid({"A": p, "B": p.copy()}), "A", "B")
        assert (r.miscoverage_ab, r.miscoverage_ba, r.nor_ab, r.nor_ba) == (0, 0, 0, 0)

    @pytest.mark.parametrize("seed", range(5))
    def test_loop_oracle(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.normal(size=(200, 2))
        b = rng.normal(loc=1.0, size=(150, 2))
        r = coverage_report(build_grid({"A": a, "B": b}, 30), "A", "B")
        assert (r.miscoverage_ab, r.miscoverage_ba, r.nor_ab, r.nor_ba) == _oracle(a, b, 30)

    @pytest.mark.parametrize("seed", range(5))
    def test_affine_invariance(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.normal(size=(120, 2))
        b = rng.normal(loc=0.7, size=(90, 2))
        scale = rng.uniform(0.1, 10, 2) * rng.choice([-1, 1], 2)
        shift = rng.normal(scale=50, size=2)
        base = coverage_report(build_grid({"A": a, "B": b}, 15), "A", "B")
        moved = coverage_report(build_grid({"A": a * scale + shift, "B": b * scale + shift}, 15), "A", "B")
        assert base == moved

    def test_superset_gives_zero(self, rng):
        b = rng.normal(size=(40, 2))
        a = np.vstack([b, rng.normal(size=(30, 2))])
        g = build_grid({"A": a, "B": b})
        assert miscoverage(g, "A", "B") == 0.0 and nor(g, "B", "A") == 0.0

    def test_adding_points_never_increases_miscoverage(self, rng):
        a = rng.normal(size=(10, 2))
        b = rng.normal(size=(60, 2))
        box = np.array([[-5.0, -5.0], [5.0, 5.0]])  # hold the bounds fixed
        prev = 1.0
        for extra in rng.normal(size=(40, 2)):
            a = np.vstack([a, extra])
            m = miscoverage(build_grid({"A": a, "B": b, "box": box}), "A", "B")
            assert m <= prev
            prev = m

    def test_in_unit_interval(self, rng):
        r = coverage_report(build_grid({"A": rng.normal(size=(20, 2)),
                                        "B": rng.normal(size=(20, 2)) + 3}), "A", "B")
        assert all(0 <= v <= 1 for v in (r.miscoverage_ab, r.miscoverage_ba, r.nor_ab, r.nor_ba))


class TestPairwise:
    def _emb(self, rng):
        pts = np.vstack([rng.normal(size=(30, 2)), rng.normal(size=(30, 2)) + 2,
                         rng.normal(size=(30, 2)) - 2])
        tags = ["x"] * 30 + ["y"] * 30 + ["z"] * 30
        return Embedding2D([str(i) for i in range(90)], pts, tags)

    def test_pairs_and_matrix(self, rng):
        reps = pairwise_coverage(self._emb(rng))
        assert [(r.a, r.b) for r in reps] == [("x", "y"), ("x", "z"), ("y", "z")]
        m = coverage_matrix(reps)
        assert m["miscoverage"]["y"]["x"] == reps[0].miscoverage_ba
        assert m["nor"]["x"]["z"] == reps[1].nor_ab

    def test_joint_grid_differs_in_bounds(self, rng):
        emb = self._emb(rng)
        per_pair = pairwise_coverage(emb, 10)
        joint = pairwise_coverage(emb, 10, joint_grid=True)
        ref = coverage_report(build_grid({t: emb.points_for(t) for t in emb.tags}, 10), "x", "y")
        assert joint[0] == ref
        assert len(per_pair) == len(joint) == 3

    def test_one_tag(self, rng):
        with pytest.raises(CoverageError):
            pairwise_coverage(Embedding2D(["a"], [[0.0, 0.0]], ["x"]))

    def test_occupancy_csv(self, rng, tmp_path):
        g = build_grid({"A": rng.normal(size=(25, 2)), "B": rng.normal(size=(10, 2))}, 4)
        occupancy_csv(g, "A", "B", tmp_path / "o.csv")
        rows = list(csv.DictReader(open(tmp_path / "o.csv")))
        assert len(rows) == 16 and list(rows[0]) == ["cell_x", "cell_y", "count_A", "count_B"]
        assert sum(int(r["count_A"]) for r in rows) == 25
