"""Two-dimensional instance spaces: PCA and PCA-initialised exact t-SNE."""
import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._io import atomic_write_text

PERPLEXITY_TOL = 1e-5
PERPLEXITY_MAX_ITER = 200


class EmbeddingError(RuntimeError):
    """Invalid input or a numerical failure while embedding."""


class DivergenceError(EmbeddingError):
    def __init__(self, iteration):
        super().__init__(f"t-SNE gradient became non-finite at iteration {iteration}")
        self.iteration = iteration


@dataclass(frozen=True)
class Embedding2D:
    series_ids: tuple
    points: np.ndarray
    dataset_tags: tuple
    method: str = "tsne"
    kl_trace: tuple = ()

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        if pts.shape[0] != len(self.series_ids) or len(self.dataset_tags) != pts.shape[0]:
            raise EmbeddingError("ids, tags and points differ in length")
        if not np.all(np.isfinite(pts)):
            raise EmbeddingError("non-finite embedding coordinates")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "series_ids", tuple(self.series_ids))
        object.__setattr__(self, "dataset_tags", tuple(self.dataset_tags))

    @property
    def tags(self):
        return sorted(set(self.dataset_tags))

    def points_for(self, tag):
        mask = np.array([t == tag for t in self.dataset_tags])
        return self.points[mask]

    def to_csv_text(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["series_id", "dataset_tag", "dim1", "dim2"])
        for sid, tag, (a, b) in zip(self.series_ids, self.dataset_tags, self.points):
            w.writerow([sid, tag, repr(float(a)), repr(float(b))])
        return buf.getvalue()

    def to_csv(self, path):
        return atomic_write_text(path, self.to_csv_text())

    @classmethod
    def from_csv(cls, path, tag=None, method="tsne"):
        """Read an embedding CSV; ``tag`` overrides every row's dataset tag."""
        ids, tags, pts = [], [], []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            missing = {"series_id", "dataset_tag", "dim1", "dim2"} - set(reader.fieldnames or [])
            if missing:
                raise EmbeddingError(f"{path}: missing column(s) {', '.join(sorted(missing))}")
            for row in reader:
                ids.append(row["series_id"])
                tags.append(tag if tag is not None else row["dataset_tag"])
                pts.append((float(row["dim1"]), float(row["dim2"])))
        return cls(ids, np.array(pts).reshape(-1, 2), tags, method)


# ---------------------------------------------------------------------------
# PCA
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PCAResult:
    scores: np.ndarray
    components: np.ndarray  # (ncomp, nfeatures), orthonormal rows
    explained_variance_ratio: np.ndarray


def pca(x, ncomp=2, rank_tol=1e-10):
    """Principal components of a (standardised) matrix via SVD.

    Each component is signed so that its largest-magnitude loading is
    positive.
    """
    x = np.asarray(getattr(x, "values", x), dtype=np.float64)
    n, p = x.shape
    if ncomp > min(n, p):
        raise EmbeddingError(f"ncomp={ncomp} exceeds min(rows, cols)={min(n, p)}")
    xc = x - x.mean(axis=0)
    _, s, vt = np.linalg.svd(xc, full_matrices=False)
    if s.size == 0 or s[0] == 0 or s[ncomp - 1] <= rank_tol * s[0]:
        raise EmbeddingError(f"matrix rank is below {ncomp}")
    comps = vt[:ncomp].copy()
    for i in range(ncomp):
        j = np.argmax(np.abs(comps[i]))
        if comps[i, j] < 0:
            comps[i] = -comps[i]
    var = s ** 2
    return PCAResult(xc @ comps.T, comps, var[:ncomp] / var.sum())


# ---------------------------------------------------------------------------
# t-SNE
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TsneConfig:
    perplexity: float = 30.0
    iterations: int = 1000
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250
    learning_rate: float = 200.0
    momentum: float = 0.5
    final_momentum: float = 0.8
    momentum_switch: int = 250
    min_gain: float = 0.01
    seed: int = 0
    init: str = "pca"
    init_scale: float = 1e-4
    trace_every: int = 50

    def validate(self, n):
        if not self.perplexity < (n - 1) / 3.0:
            raise EmbeddingError(f"perplexity {self.perplexity} must be below (n-1)/3 = {(n - 1) / 3:.3g}")
        if self.iterations < 250:
            raise EmbeddingError("iterations must be at least 250")
        if self.init not in ("pca", "random"):
            raise EmbeddingError("init must be 'pca' or 'random'")


def squared_distances(x):
    sq = (x * x).sum(axis=1)
    d = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d, 0.0, out=d)
    np.fill_diagonal(d, 0.0)
    return d


def perplexity_search(distances, target, tol=PERPLEXITY_TOL, max_iter=PERPLEXITY_MAX_ITER):
    """Gaussian bandwidth whose conditional distribution has perplexity ``target``.

    ``distances`` are the squared distances from one point to the n-1
    others. Returns ``(sigma, probabilities)``.
    """
    d = np.asarray(distances, dtype=np.float64)
    if d.size < 1:
        raise EmbeddingError("need at least one neighbour")
    if not 0 < target <= d.size:
        raise EmbeddingError(f"target perplexity {target} must be in (0, {d.size}]")
    prob, beta, ok = kernels.search_row(d, float(target), tol, max_iter)
    if not ok:
        raise EmbeddingError("perplexity search did not converge for row 0")
    return math.sqrt(1.0 / (2.0 * beta)), prob


def joint_probabilities(x, perplexity, tol=PERPLEXITY_TOL, max_iter=PERPLEXITY_MAX_ITER):
    """Symmetrised affinities ``P = (P_cond + P_cond^T) / 2n`` (sums to one)."""
    d = squared_distances(np.asarray(x, dtype=np.float64))
    n = d.shape[0]
    if not 0 < perplexity <= n - 1:
        raise EmbeddingError(f"perplexity must be in (0, {n - 1}]")
    cond, _, ok = kernels.conditional_p(d, float(perplexity), tol, max_iter)
    bad = np.flatnonzero(~ok)
    if bad.size:
        raise EmbeddingError(f"perplexity search did not converge for row {int(bad[0])}")
    return (cond + cond.T) / (2.0 * n)


def kl_divergence(p, y):
    """KL(P || Q) for the Student-t affinities of layout ``y``."""
    num = 1.0 / (1.0 + squared_distances(y))
    np.fill_diagonal(num, 0.0)
    q = num / num.sum()
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / np.maximum(q[mask], 1e-300))))


def initial_layout(x, cfg):
    n = x.shape[0]
    if cfg.init == "pca":
        try:
            y = pca(x, 2).scores
        except EmbeddingError:
            y = None
        if y is not None and y[:, 0].std() > 0:
            return y / y[:, 0].std() * cfg.init_scale
    rng = np.random.default_rng(cfg.seed)
    return rng.normal(scale=cfg.init_scale, size=(n, 2))


def tsne(x, cfg=None, ids=None, tags=None):
    """Exact t-SNE of the rows of ``x`` (array or FeatureMatrix).

    Initialised with the first two principal components scaled so the
    first has standard deviation ``cfg.init_scale``. KL(P||Q) is recorded
    at iteration 0, every ``cfg.trace_every`` iterations and at the end.
    """
    cfg = cfg or TsneConfig()
    if hasattr(x, "series_ids"):
        ids = ids if ids is not None else x.series_ids
        x = x.values
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = x.shape[0]
    if np.isnan(x).any():
        raise EmbeddingError("feature matrix has missing cells")
    if n < 10:
        raise EmbeddingError("t-SNE needs at least 10 rows")
    cfg.validate(n)
    ids = tuple(ids) if ids is not None else tuple(str(i) for i in range(n))
    tags = tuple(tags) if tags is not None else ("data",) * n

    p = joint_probabilities(x, cfg.perplexity)
    y = np.ascontiguousarray(initial_layout(x, cfg))
    inc = np.zeros_like(y)
    gains = np.ones_like(y)
    trace = [(0, kl_divergence(p, y))]
    p_exag = p * cfg.early_exaggeration
    for it in range(1, cfg.iterations + 1):
        exag = it <= cfg.exaggeration_iters
        mom = cfg.momentum if it <= cfg.momentum_switch else cfg.final_momentum
        grad, _, _ = kernels.tsne_gradient(y, p_exag if exag else p)
        if not np.all(np.isfinite(grad)):
            raise DivergenceError(it)
        same = (grad > 0) == (inc > 0)
        gains = np.where(same, gains * 0.8, gains + 0.2)
        np.maximum(gains, cfg.min_gain, out=gains)
        inc = mom * inc - cfg.learning_rate * gains * grad
        y = y + inc
        y = np.ascontiguousarray(y - y.mean(axis=0))
        if it % cfg.trace_every == 0 or it == cfg.iterations or it == cfg.exaggeration_iters:
            trace.append((it, kl_divergence(p, y)))
    return Embedding2D(ids, y, tags, "tsne", tuple(trace))


def pca_embedding(x, ids=None, tags=None):
    if hasattr(x, "series_ids"):
        ids = ids if ids is not None else x.series_ids
        x = x.values
    res = pca(x, 2)
    n = res.scores.shape[0]
    ids = tuple(ids) if ids is not None else tuple(str(i) for i in range(n))
    tags = tuple(tags) if tags is not None else ("data",) * n
    return Embedding2D(ids, res.scores, tags, "pca")
