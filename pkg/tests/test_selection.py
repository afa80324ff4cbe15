import itertools
import math

import numpy as np
import pytest
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import squareform
from scipy.stats import kruskal, kstest

from tsrepr.dataset import LabeledDataset, SalesSeries
from tsrepr.features.catalog import FeatureId
from tsrepr.features.matrix import FeatureMatrix
from tsrepr.selection import (
    PipelineError,
    QualityVector,
    complete_linkage,
    correlation_distance,
    fisher_combine,
    holm_bonferroni,
    kruskal_wallis,
    kruskal_wallis_h,
    prefilter,
    quality_matrix,
    redundancy_cluster,
    rrelieff,
    run_cascade,
    zscore,
)


def fid(name):
    return FeatureId(name, "daily", "test")


def matrix(cols, names=None):
    cols = [np.asarray(c, dtype=float) for c in cols]
    names = names or [f"f{j}" for j in range(len(cols))]
    n = cols[0].size
    return FeatureMatrix([f"s{i}" for i in range(n)], [fid(x) for x in names], np.column_stack(cols))


class TestPrefilterZscore:
    def test_prefilter(self):
        m = matrix([[3.0, 3, 3], [1, np.nan, 3], [1, 2, 3]], ["const", "gap", "ok"])
        assert prefilter(m).keys == ["ok@daily"]

    def test_prefilter_empty(self):
        with pytest.raises(PipelineError, match="prefilter"):
            prefilter(matrix([[1.0, 1, 1]]))

    def test_zscore_cases(self):
        np.testing.assert_allclose(zscore(matrix([[1, 2, 3]])).values[:, 0], [-1, 0, 1])
        np.testing.assert_allclose(zscore(matrix([[10, 20]])).values[:, 0],
                                   [-0.70710678, 0.70710678], atol=1e-8)

    def test_zscore_idempotent(self, rng):
        z = zscore(matrix([rng.normal(size=50), rng.exponential(size=50)]))
        np.testing.assert_allclose(zscore(z).values, z.values, atol=1e-12)
        assert np.all(np.abs(z.values.mean(axis=0)) < 1e-12)
        np.testing.assert_allclose(z.values.std(axis=0, ddof=1), 1.0)

    def test_zscore_constant(self):
        with pytest.raises(ValueError):
            zscore(matrix([[2, 2, 2]]))


class TestKruskalWallis:
    def test_hand_case(self):
        h, df = kruskal_wallis_h([1, 2, 3, 4], ["A", "A", "B", "B"])
        assert h == pytest.approx(2.4) and df == 1
        assert kruskal_wallis([1, 2, 3, 4], ["A", "A", "B", "B"]) == pytest.approx(0.1213, abs=5e-5)

    def test_identical(self):
        assert kruskal_wallis([1, 1, 1, 1, 1, 1], list("AAABBB")) == 1.0

    @pytest.mark.parametrize("seed", range(5))
    def test_scipy_oracle_with_ties(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.integers(0, 6, 90).astype(float)
        lab = rng.integers(0, 3, 90)
        ref = kruskal(*[x[lab == c] for c in range(3)])
        h, _ = kruskal_wallis_h(x, lab)
        assert h == pytest.approx(ref.statistic, rel=1e-12)
        assert kruskal_wallis(x, lab) == pytest.approx(ref.pvalue, rel=1e-10)

    def test_monotone_invariance(self, rng):
        x = rng.normal(size=60)
        lab = rng.integers(0, 4, 60)
        assert kruskal_wallis(x, lab) == kruskal_wallis(np.exp(3 * x) + 7, lab)

    def test_null_uniform(self):
        rng = np.random.default_rng(11)
        lab = np.repeat([0, 1], 100)
        p = [kruskal_wallis(rng.normal(size=200), lab) for _ in range(500)]
        assert kstest(p, "uniform").pvalue > 0.01

    def test_single_class(self):
        with pytest.raises(ValueError):
            kruskal_wallis([1, 2], ["A", "A"])


class TestFisher:
    def test_cases(self):
        assert fisher_combine([1, 1, 1]) == (0.0, 1.0)
        x, p = fisher_combine([0.1, 0.2, 0.3, 0.4])
        assert x == pytest.approx(12.0646, abs=1e-4) and p == pytest.approx(0.148, abs=5e-4)
        x, p = fisher_combine([0.05] * 4)
        assert x == pytest.approx(23.966, abs=1e-3) and p == pytest.approx(0.0023, abs=5e-5)

    def test_zero_clamped(self):
        x, p = fisher_combine([0.0, 0.5])
        assert math.isfinite(x) and p < 1e-250

    def test_errors(self):
        with pytest.raises(ValueError):
            fisher_combine([])
        with pytest.raises(ValueError):
            fisher_combine([1.5])

    def test_permutation_and_monotone(self, rng):
        p = rng.uniform(0.01, 1, 5)
        base = fisher_combine(p)[1]
        assert fisher_combine(p[::-1])[1] == pytest.approx(base, rel=1e-14)
        q = p.copy()
        q[2] *= 0.5
        assert fisher_combine(q)[1] < base


class TestHolm:
    def test_hand_case(self):
        keep = holm_bonferroni([0.01, 0.04, 0.03, 0.005], 0.05)
        assert list(keep) == [True, False, False, True]

    def test_all_or_none(self):
        assert not holm_bonferroni([1.0] * 5).any()
        assert holm_bonferroni([1e-10] * 100).all()

    def test_alpha_range(self):
        with pytest.raises(ValueError):
            holm_bonferroni([0.1], 1.0)

    def test_monotone_in_alpha(self, rng):
        p = rng.uniform(0, 0.05, 40)
        prev = np.zeros(40, dtype=bool)
        for a in np.linspace(0.001, 0.5, 30):
            cur = holm_bonferroni(p, a)
            assert np.all(cur >= prev)
            prev = cur


def _relief_oracle(x, y, k, sigma=20.0):
    """Weighted-frequency estimates of P(diffF), P(diffP), P(diffP|diffF) by brute force."""
    n, p = x.shape
    lo, hi = x.min(0), x.max(0)
    xs = (x - lo) / np.where(hi > lo, hi - lo, 1)
    ys = (y - y.min()) / (y.max() - y.min())
    raw = [math.exp(-((r / sigma) ** 2)) for r in range(1, k + 1)]
    wts = [w / sum(raw) for w in raw]
    p_dp = 0.0
    p_df = [0.0] * p
    p_both = [0.0] * p
    for i in range(n):
        others = sorted((j for j in range(n) if j != i),
                        key=lambda j: sum(abs(xs[i, f] - xs[j, f]) for f in range(p)))
        for w, j in zip(wts, others[:k]):
            dp = abs(ys[i] - ys[j])
            p_dp += w * dp / n
            for f in range(p):
                df = abs(xs[i, f] - xs[j, f])
                p_df[f] += w * df / n
                p_both[f] += w * dp * df / n
    out = []
    for f in range(p):
        cond = p_both[f] / p_df[f]  # P(diffP | diffF)
        out.append(cond * p_df[f] / p_dp - (1 - cond) * p_df[f] / (1 - p_dp))
    return np.array(out)


class TestRReliefF:
    @pytest.mark.parametrize("seed", range(4))
    def test_brute_force_oracle(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(12, 3))
        y = x[:, 0] + 0.3 * rng.normal(size=12)
        np.testing.assert_allclose(rrelieff(x, y, k_neighbors=2), _relief_oracle(x, y, 2), atol=1e-12)

    def test_constant_feature_zero(self, rng):
        x = np.column_stack([rng.normal(size=30), np.full(30, 4.0)])
        assert rrelieff(x, rng.normal(size=30))[1] == 0.0

    def test_affine_invariance(self, rng):
        x = rng.normal(size=(40, 3))
        y = x[:, 1] ** 2 + rng.normal(size=40)
        x2 = x.copy()
        x2[:, 2] = -5.0 * x2[:, 2] + 100
        np.testing.assert_allclose(rrelieff(x, y), rrelieff(x2, y), atol=1e-9)

    def test_informative_beats_noise(self):
        wins = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            y = rng.normal(size=200)
            w = rrelieff(np.column_stack([y, rng.normal(size=200)]), y)
            wins += w[0] > w[1]
        assert wins >= 95

    def test_errors(self, rng):
        with pytest.raises(ValueError, match="constant target"):
            rrelieff(rng.normal(size=(20, 2)), np.ones(20))
        with pytest.raises(ValueError):
            rrelieff(rng.normal(size=(5, 2)), rng.normal(size=5))

    def test_sample_subset(self, rng):
        x = rng.normal(size=(50, 2))
        y = x[:, 0] + rng.normal(size=50)
        a = rrelieff(x, y, sample=20, seed=3)
        assert np.array_equal(a, rrelieff(x, y, sample=20, seed=3))
        assert np.array_equal(rrelieff(x, y, sample=50), rrelieff(x, y))


class TestQualityMatrix:
    def test_shapes_and_identical_targets(self, rng):
        m = matrix([rng.normal(size=40), rng.normal(size=40)])
        t = rng.normal(size=40)
        qvs = quality_matrix(m, [t] * 7)
        assert len(qvs) == 2 and all(len(q.weights) == 7 for q in qvs)
        assert all(len(set(q.weights)) == 1 for q in qvs)

    def test_permuting_targets(self, rng):
        m = matrix([rng.normal(size=40), rng.normal(size=40)])
        ts = [rng.normal(size=40) for _ in range(7)]
        a = quality_matrix(m, ts)
        b = quality_matrix(m, ts[::-1])
        for qa, qb in zip(a, b):
            assert qa.weights == qb.weights[::-1]
            assert qa.mean_quality == pytest.approx(qb.mean_quality, rel=1e-14)


class TestClustering:
    def test_identical_and_opposite(self, rng):
        u = rng.normal(size=7)
        qs = [QualityVector(fid("a"), tuple(u)), QualityVector(fid("b"), tuple(u))]
        assert len(redundancy_cluster(qs)) == 1
        qs[1] = QualityVector(fid("b"), tuple(-u))
        assert len(redundancy_cluster(qs)) == 2

    def test_complete_linkage_case(self):
        # pairwise r = (0.9, 0.9, 0.5) as distances; no real vectors realise
        # this triple (the correlation matrix is indefinite), so distances are given directly
        d = np.array([[0.0, 0.1, 0.1], [0.1, 0.0, 0.5], [0.1, 0.5, 0.0]])
        groups = complete_linkage(d, 0.2)
        assert sorted(map(len, groups)) == [1, 2]
        assert [1, 2] not in groups

    @pytest.mark.parametrize("seed", range(6))
    def test_scipy_oracle(self, seed):
        rng = np.random.default_rng(seed)
        base = rng.normal(size=(6, 7))
        v = base[rng.integers(0, 6, 30)] + 0.25 * rng.normal(size=(30, 7))
        d = correlation_distance(v)
        ours = sorted(tuple(g) for g in complete_linkage(d, 0.2))
        lab = fcluster(linkage(squareform(d, checks=False), "complete"), 0.2, "distance")
        ref = sorted(tuple(np.flatnonzero(lab == c)) for c in np.unique(lab))
        assert ours == ref
        for g in ours:
            for i, j in itertools.combinations(g, 2):
                assert 1 - d[i, j] > 0.8

    def test_constant_vector_singleton(self, rng):
        u = rng.normal(size=7)
        qs = [QualityVector(fid("a"), (0.1,) * 7), QualityVector(fid("b"), tuple(u)),
              QualityVector(fid("c"), tuple(u + 1))]
        cl = redundancy_cluster(qs)
        assert sorted(len(c.members) for c in cl) == [1, 2]

    def test_representative_and_order_invariance(self, rng):
        u = rng.normal(size=7)
        qs = [QualityVector(fid(n), tuple(u * s + off)) for n, s, off in
              [("b", 1.0, 0.0), ("a", 1.0, 0.0), ("c", 2.0, 0.5), ("d", -1.0, 0.0)]]
        res = redundancy_cluster(qs)
        for perm in itertools.permutations(qs):
            assert redundancy_cluster(list(perm)) == res
        big = next(c for c in res if len(c.members) == 3)
        assert big.representative == fid("c")  # largest mean quality
        tie = redundancy_cluster(qs[:2])
        assert tie[0].representative == fid("a")  # tie -> smallest key


class TestCascade:
    def _setup(self, seed=0, n=200):
        rng = np.random.default_rng(seed)
        cls = rng.integers(0, 3, n)
        ids = [f"s{i}" for i in range(n)]
        ds = LabeledDataset([SalesSeries(i, [1.0]) for i in ids],
                            {"cls": {i: f"c{c}" for i, c in zip(ids, cls)}})
        t1 = rng.normal(size=n)
        t2 = rng.normal(size=n)
        cols = {
            "constant": np.full(n, 2.0),
            "class_index": cls.astype(float),
            "dup_a": cls + t1,
            "dup_b": cls + t1,
            "other": cls - t2,
            "noise": rng.normal(size=n),
        }
        m = FeatureMatrix(ids, [fid(k) for k in cols], np.column_stack(list(cols.values())))
        targets = [t1 + 0.1 * k * t2 for k in range(7)]
        return m, ds, targets

    def test_cascade(self):
        m, ds, targets = self._setup()
        res = run_cascade(m, ds, targets)
        st = {s["stage"]: s for s in res.audit["stages"]}
        assert "constant@daily" in st["prefilter"]["dropped"]
        assert "class_index@daily" not in st["statistical"]["dropped"]
        assert res.audit["pvalues"]["class_index@daily"]["combined"] < 1e-20
        sel = set(res.audit["selected"])
        assert len(sel & {"dup_a@daily", "dup_b@daily"}) == 1
        for s in res.audit["stages"]:
            assert s["in"] == s["out"] + s["dropped_count"]
        assert [f.key for f in res.selected] == res.audit["selected"]

    def test_deterministic(self):
        m, ds, targets = self._setup(seed=1)
        assert run_cascade(m, ds, targets).audit == run_cascade(m, ds, targets).audit

    def test_no_tasks(self):
        m, _, targets = self._setup()
        with pytest.raises(PipelineError, match="statistical"):
            run_cascade(m, LabeledDataset([SalesSeries(i, [1.0]) for i in m.series_ids]), targets)

    def test_nothing_passes(self):
        m, ds, targets = self._setup()
        # class-balanced values identical in every class: KW p = 1
        lab = np.array([ds.tasks["cls"][s] for s in m.series_ids])
        flat = np.zeros(len(lab))
        for c in np.unique(lab):
            idx = np.flatnonzero(lab == c)
            flat[idx] = np.arange(idx.size) % 2
        assert kruskal_wallis(flat, lab) > 0.05
        noise = FeatureMatrix(m.series_ids, [fid("n")], flat[:, None])
        with pytest.raises(PipelineError, match="statistical"):
            run_cascade(noise, ds, targets)

    def test_cluster_on_values(self):
        m, ds, targets = self._setup()
        res = run_cascade(m, ds, targets, cluster_on="values")
        assert len({"dup_a@daily", "dup_b@daily"} & set(res.audit["selected"])) == 1
        with pytest.raises(ValueError):
            run_cascade(m, ds, targets, cluster_on="raw")

