"""Three-stage feature selection: statistical pre-filtering, RReliefF
performance evaluation and correlation-based redundancy minimisation."""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2, rankdata

from . import kernels
from .features.matrix import FeatureMatrix

log = logging.getLogger(__name__)

P_FLOOR = 1e-300
RELIEF_SIGMA = 20.0


class PipelineError(RuntimeError):
    """A cascade stage left no features (or received invalid input)."""

    def __init__(self, stage, message):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


# ---------------------------------------------------------------------------
# Stage 0: clean-up and standardisation
# ---------------------------------------------------------------------------


def prefilter(m):
    """Drop columns with any missing value or a single distinct value."""
    vals = m.values
    keep = []
    for j, fid in enumerate(m.feature_ids):
        col = vals[:, j]
        if np.isnan(col).any():
            continue
        if col.size == 0 or np.all(col == col[0]):
            continue
        keep.append(fid)
    if not keep:
        raise PipelineError("prefilter", "no feature has complete, non-constant values")
    return m.select_columns(keep)


def zscore(m):
    """Centre each column and scale it to unit sample standard deviation."""
    vals = m.values
    mu = vals.mean(axis=0)
    sd = vals.std(axis=0, ddof=1)
    bad = [m.feature_ids[j].key for j in np.flatnonzero(~(sd > 0))]
    if bad:
        raise ValueError(f"zero-variance column(s): {', '.join(bad)}")
    return m.with_values((vals - mu) / sd)


# ---------------------------------------------------------------------------
# Stage 1: statistical pre-filtering
# ---------------------------------------------------------------------------


def kruskal_wallis_h(values, labels):
    """Tie-corrected H statistic and degrees of freedom.

    H is NaN when every value is identical (no rank variation).
    """
    x = np.asarray(values, dtype=np.float64)
    labels = np.asarray(labels)
    classes = np.unique(labels)
    if classes.size < 2:
        raise ValueError("need at least two classes")
    n = x.size
    ranks = rankdata(x)
    _, counts = np.unique(x, return_counts=True)
    tie = 1.0 - (counts ** 3 - counts).sum() / (n ** 3 - n)
    if tie <= 0:
        return math.nan, classes.size - 1
    ssum = sum(ranks[labels == c].sum() ** 2 / np.count_nonzero(labels == c) for c in classes)
    return (12.0 / (n * (n + 1)) * ssum - 3.0 * (n + 1)) / tie, classes.size - 1


def kruskal_wallis(values, labels):
    """Kruskal-Wallis p-value (chi-square approximation); 1.0 for identical values."""
    h, df = kruskal_wallis_h(values, labels)
    if math.isnan(h):
        return 1.0
    return float(chi2.sf(h, df))


def fisher_combine(pvals):
    """Fisher's method: ``X = -2 sum ln p`` referred to chi-square(2k).

    Returns ``(X, combined_p)``. Zero p-values are floored at 1e-300.
    """
    p = np.asarray(pvals, dtype=np.float64)
    if p.size == 0:
        raise ValueError("no p-values to combine")
    if np.any((p < 0) | (p > 1)):
        raise ValueError("p-values must lie in [0, 1]")
    x = -2.0 * np.log(np.maximum(p, P_FLOOR)).sum()
    return float(x), float(chi2.sf(x, 2 * p.size))


def holm_bonferroni(pvals, alpha=0.05):
    """Holm step-down keep mask (True = hypothesis rejected = feature kept)."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    p = np.asarray(pvals, dtype=np.float64)
    n = p.size
    order = np.argsort(p, kind="stable")
    keep = np.zeros(n, dtype=bool)
    for j, idx in enumerate(order):
        if p[idx] > alpha / (n - j):
            break
        keep[idx] = True
    return keep


@dataclass(frozen=True)
class PValueRecord:
    feature: object
    task_pvalues: tuple
    combined_p: float


# ---------------------------------------------------------------------------
# Stage 2: RReliefF
# ---------------------------------------------------------------------------


def _minmax(a):
    lo, hi = a.min(axis=0), a.max(axis=0)
    span = hi - lo
    out = np.zeros_like(a, dtype=np.float64)
    ok = span > 0
    out[..., ok] = (a[..., ok] - lo[ok]) / span[ok]
    return out


def rrelieff_parts(x, target, k_neighbors=10, sample=None, seed=0, sigma=RELIEF_SIGMA):
    """Raw RReliefF accumulators ``(N_dP, N_dF, N_dP&dF, m)``.

    Neighbours use Manhattan distance on min-max scaled features; feature
    and target differences are scaled by their ranges. ``sample`` rows are
    drawn without replacement (default: every row, in order).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(target, dtype=np.float64)
    n = x.shape[0]
    if n < k_neighbors + 1:
        raise ValueError(f"need at least {k_neighbors + 1} rows, got {n}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("features and target must be finite")
    span = y.max() - y.min()
    if span == 0:
        raise ValueError("constant target: no prediction differences")
    xn = np.ascontiguousarray(_minmax(x))
    yn = (y - y.min()) / span
    if sample is None or sample >= n:
        rows = np.arange(n)
    else:
        rows = np.sort(np.random.default_rng(seed).choice(n, size=sample, replace=False))
    n_dp, n_df, n_dpdf = kernels.rrelieff_accumulate(xn, yn, rows.astype(np.int64),
                                                     k_neighbors, sigma)
    return float(n_dp), np.asarray(n_df), np.asarray(n_dpdf), rows.size


def rrelieff(x, target, k_neighbors=10, sample=None, seed=0, sigma=RELIEF_SIGMA):
    """RReliefF weight of every column of ``x`` for a numeric target."""
    if isinstance(x, FeatureMatrix):
        x = x.values
    n_dp, n_df, n_dpdf, m = rrelieff_parts(x, target, k_neighbors, sample, seed, sigma)
    return n_dpdf / n_dp - (n_df - n_dpdf) / (m - n_dp)


@dataclass(frozen=True)
class QualityVector:
    feature: object
    weights: tuple

    @property
    def mean_quality(self):
        return float(np.mean(self.weights))


def quality_matrix(m, targets, k_neighbors=10, sample=None, seed=0):
    """RReliefF weights of every feature against every target column.

    ``targets`` is a :class:`~tsrepr.benchmarks.TargetBank` (rows matched
    by series id; rows with any missing target are left out) or a
    sequence of target vectors aligned with ``m``'s rows.
    """
    if hasattr(targets, "series_ids"):
        bank = targets.select_rows(m.series_ids)
        ok = bank.complete_rows()
        x = m.values[ok]
        cols = [bank.values[ok, j] for j in range(bank.values.shape[1])]
    else:
        x = m.values
        cols = [np.asarray(t, dtype=np.float64) for t in targets]
    w = np.column_stack([rrelieff(x, t, k_neighbors, sample, seed) for t in cols])
    return [QualityVector(f, tuple(w[j])) for j, f in enumerate(m.feature_ids)]


# ---------------------------------------------------------------------------
# Stage 3: redundancy minimisation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FeatureCluster:
    members: tuple
    representative: object


def correlation_distance(vectors):
    """``1 - pearson`` between rows; NaN where a row is constant."""
    v = np.asarray(vectors, dtype=np.float64)
    c = v - v.mean(axis=1, keepdims=True)
    norm = np.sqrt((c * c).sum(axis=1))
    const = norm == 0
    c[~const] /= norm[~const, None]
    r = np.clip(c @ c.T, -1.0, 1.0)
    d = 1.0 - r
    d[const, :] = np.nan
    d[:, const] = np.nan
    np.fill_diagonal(d, 0.0)
    return d


def complete_linkage(dist, threshold):
    """Agglomerative complete-linkage groups whose diameter stays below ``threshold``.

    NaN distances never merge. Ties go to the lowest index pair, so the
    result is a deterministic function of the row order.
    """
    n = dist.shape[0]
    clusters = [[i] for i in range(n)]
    link = np.where(np.isnan(dist), np.inf, dist).astype(np.float64)
    np.fill_diagonal(link, np.inf)
    alive = np.ones(n, dtype=bool)
    while alive.sum() > 1:
        flat = int(np.argmin(link))
        a, b = divmod(flat, n)
        if not link[a, b] < threshold:
            break
        if a > b:
            a, b = b, a
        clusters[a] += clusters[b]
        clusters[b] = []
        merged = np.maximum(link[a], link[b])
        link[a, :] = merged
        link[:, a] = merged
        link[a, a] = np.inf
        link[b, :] = np.inf
        link[:, b] = np.inf
        alive[b] = False
    return [sorted(clusters[i]) for i in np.flatnonzero(alive)]


def _feature_sort_key(f):
    return (f.key,) if hasattr(f, "key") else (str(f),)


def redundancy_cluster(qvs, threshold=0.2, vectors=None):
    """Cluster features by correlation distance; keep the best of each.

    By default the quality vectors are clustered. ``vectors`` (a mapping
    feature -> vector) substitutes other profiles, e.g. feature values
    across series. Features are canonically ordered by key first, so the
    output does not depend on input order. The representative is the
    member with the largest mean quality (ties: smallest key).
    """
    qvs = sorted(qvs, key=lambda q: _feature_sort_key(q.feature))
    if not qvs:
        raise ValueError("nothing to cluster")
    if vectors is None:
        mat = np.array([q.weights for q in qvs], dtype=np.float64)
    else:
        mat = np.array([vectors[q.feature] for q in qvs], dtype=np.float64)
    groups = complete_linkage(correlation_distance(mat), threshold)
    out = []
    for g in groups:
        members = [qvs[i] for i in g]
        best = min(members, key=lambda q: (-q.mean_quality, _feature_sort_key(q.feature)))
        out.append(FeatureCluster(tuple(q.feature for q in members), best.feature))
    out.sort(key=lambda c: _feature_sort_key(c.representative))
    return out


# ---------------------------------------------------------------------------
# Cascade
# ---------------------------------------------------------------------------


@dataclass
class CascadeResult:
    selected: list
    audit: dict = field(default_factory=dict)


def _stage(name, before, after):
    kept = {f.key for f in after}
    dropped = [f.key for f in before if f.key not in kept]
    return {"stage": name, "in": len(before), "out": len(after),
            "dropped_count": len(dropped), "dropped": dropped}


def run_cascade(m, ds, targets, alpha=0.05, k_neighbors=10, threshold=0.2,
                cluster_on="quality", relief_sample=None, seed=0):
    """Run the full selection cascade and return the survivors plus an audit.

    ``ds`` supplies the classification tasks (all of them are tested);
    ``targets`` is a TargetBank or sequence of target vectors for RReliefF.
    ``cluster_on`` chooses between clustering quality vectors
    (``"quality"``) or z-scored feature values across series (``"values"``).
    """
    if cluster_on not in ("quality", "values"):
        raise ValueError("cluster_on must be 'quality' or 'values'")
    if not ds.tasks:
        raise PipelineError("statistical", "dataset has no classification tasks")
    audit = {"stages": []}
    start = list(m.feature_ids)

    pre = prefilter(m)
    audit["stages"].append(_stage("prefilter", start, pre.feature_ids))
    z = zscore(pre)

    tasks = sorted(ds.tasks)
    labels = {t: [ds.tasks[t][sid] for sid in z.series_ids] for t in tasks}
    records = []
    for j, fid in enumerate(z.feature_ids):
        col = z.values[:, j]
        tp = tuple(kruskal_wallis(col, labels[t]) for t in tasks)
        records.append(PValueRecord(fid, tp, fisher_combine(tp)[1]))
    keep = holm_bonferroni([r.combined_p for r in records], alpha)
    survivors = [r.feature for r, k in zip(records, keep) if k]
    audit["stages"].append(_stage("statistical", z.feature_ids, survivors))
    audit["tasks"] = tasks
    audit["pvalues"] = {r.feature.key: {"tasks": list(r.task_pvalues), "combined": r.combined_p}
                        for r in records}
    if not survivors:
        raise PipelineError("statistical", "no feature passed the Holm-Bonferroni step")

    zs = z.select_columns(survivors)
    qvs = quality_matrix(zs, targets, k_neighbors, relief_sample, seed)
    audit["stages"].append(_stage("performance", survivors, [q.feature for q in qvs]))
    audit["quality"] = {q.feature.key: {"weights": list(q.weights), "mean": q.mean_quality}
                        for q in qvs}

    vectors = None
    if cluster_on == "values":
        vectors = {f: zs.column(f) for f in zs.feature_ids}
    clusters = redundancy_cluster(qvs, threshold, vectors)
    selected = [c.representative for c in clusters]
    audit["stages"].append(_stage("redundancy", survivors, selected))
    audit["clusters"] = [{"representative": c.representative.key,
                          "members": [f.key for f in c.members]} for c in clusters]
    audit["selected"] = [f.key for f in selected]
    audit["parameters"] = {"alpha": alpha, "k_neighbors": k_neighbors, "threshold": threshold,
                           "cluster_on": cluster_on, "relief_sample": relief_sample}
    if not selected:
        raise PipelineError("redundancy", "no representative selected")
    log.info("selection: %s", " -> ".join(str(s["out"]) for s in audit["stages"]))
    return CascadeResult(selected, audit)
