"""Inner loops shared by the feature, selection and embedding modules.

Every kernel exists in two flavours with identical signatures:

* ``<name>_numba``: explicit loops compiled by numba.
* ``<name>_numpy``: vectorised numpy, used when numba is disabled.

The un-suffixed name dispatches according to :mod:`tsrepr._accel`.
Both flavours are tested against each other.
"""
import numpy as np

from ._accel import USE_NUMBA, njit

# ---------------------------------------------------------------------------
# RReliefF accumulators
# ---------------------------------------------------------------------------


def rank_weights(k, sigma):
    """Exponentially decaying neighbour weights, normalised to sum to one."""
    ranks = np.arange(1, k + 1, dtype=np.float64)
    w = np.exp(-((ranks / sigma) ** 2))
    return w / w.sum()


def rrelieff_accumulate_numpy(xn, yn, rows, k, sigma):
    n, p = xn.shape
    w = rank_weights(k, sigma)
    n_dp = 0.0
    n_df = np.zeros(p)
    n_dpdf = np.zeros(p)
    for i in rows:
        dist = np.abs(xn - xn[i]).sum(axis=1)
        dist[i] = np.inf
        nb = np.argsort(dist, kind="stable")[:k]
        dy = np.abs(yn[nb] - yn[i])
        df = np.abs(xn[nb] - xn[i])
        n_dp += w @ dy
        n_df += w @ df
        n_dpdf += (w * dy) @ df
    return n_dp, n_df, n_dpdf


@njit
def rrelieff_accumulate_numba(xn, yn, rows, k, sigma):
    n, p = xn.shape
    w = np.empty(k)
    tot = 0.0
    for r in range(k):
        w[r] = np.exp(-(((r + 1.0) / sigma) ** 2))
        tot += w[r]
    for r in range(k):
        w[r] /= tot
    n_dp = 0.0
    n_df = np.zeros(p)
    n_dpdf = np.zeros(p)
    dist = np.empty(n)
    for i in rows:
        for j in range(n):
            s = 0.0
            for f in range(p):
                s += abs(xn[j, f] - xn[i, f])
            dist[j] = s
        dist[i] = np.inf
        order = np.argsort(dist, kind="mergesort")
        for r in range(k):
            j = order[r]
            dy = abs(yn[j] - yn[i])
            n_dp += w[r] * dy
            for f in range(p):
                d = abs(xn[j, f] - xn[i, f])
                n_df[f] += w[r] * d
                n_dpdf[f] += w[r] * dy * d
    return n_dp, n_df, n_dpdf


# ---------------------------------------------------------------------------
# t-SNE
# ---------------------------------------------------------------------------


def tsne_gradient_numpy(y, p):
    """Gradient of KL(P||Q) for a Student-t Q; returns (grad, num, z)."""
    sq = (y * y).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (y @ y.T)
    np.maximum(d2, 0.0, out=d2)
    num = 1.0 / (1.0 + d2)
    np.fill_diagonal(num, 0.0)
    z = num.sum()
    pq = (p - num / z) * num
    grad = 4.0 * (pq.sum(axis=1)[:, None] * y - pq @ y)
    return grad, num, z


@njit
def tsne_gradient_numba(y, p):
    n, dim = y.shape
    num = np.zeros((n, n))
    z = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            d2 = 0.0
            for c in range(dim):
                diff = y[i, c] - y[j, c]
                d2 += diff * diff
            v = 1.0 / (1.0 + d2)
            num[i, j] = v
            num[j, i] = v
            z += 2.0 * v
    grad = np.zeros((n, dim))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            m = (p[i, j] - num[i, j] / z) * num[i, j]
            for c in range(dim):
                grad[i, c] += m * (y[i, c] - y[j, c])
    for i in range(n):
        for c in range(dim):
            grad[i, c] *= 4.0
    return grad, num, z


def _row_entropy(d, beta):
    """Return (probabilities, entropy in nats) for one row of distances."""
    shifted = d - d.min()
    e = np.exp(-shifted * beta)
    s = e.sum()
    prob = e / s
    h = np.log(s) + beta * (shifted * prob).sum()
    return prob, h


def search_row(d, target, tol, max_iter):
    """Bisection on the precision for one row of neighbour distances.

    Returns ``(probabilities, beta, converged)``.
    """
    beta, lo, hi = 1.0, 0.0, np.inf
    prob = None
    for _ in range(max_iter):
        prob, h = _row_entropy(d, beta)
        perp = np.exp(h)
        if abs(perp - target) <= tol:
            return prob, beta, True
        if perp > target:
            lo = beta
            beta = beta * 2.0 if hi == np.inf else 0.5 * (beta + hi)
        else:
            hi = beta
            beta = beta * 0.5 if lo == 0.0 else 0.5 * (beta + lo)
    return prob, beta, False


def conditional_p_numpy(dist, target, tol, max_iter):
    """Row-wise perplexity calibration of a squared-distance matrix.

    Returns the conditional probability matrix, the precision per row and
    a per-row convergence flag.
    """
    n = dist.shape[0]
    cond = np.zeros((n, n))
    betas = np.ones(n)
    ok = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        prob, betas[i], ok[i] = search_row(np.delete(dist[i], i), target, tol, max_iter)
        cond[i, :i] = prob[:i]
        cond[i, i + 1:] = prob[i:]
    return cond, betas, ok


@njit
def conditional_p_numba(dist, target, tol, max_iter):
    n = dist.shape[0]
    cond = np.zeros((n, n))
    betas = np.ones(n)
    ok = np.zeros(n, dtype=np.bool_)
    e = np.empty(n)
    for i in range(n):
        dmin = np.inf
        for j in range(n):
            if j != i and dist[i, j] < dmin:
                dmin = dist[i, j]
        beta, lo, hi = 1.0, 0.0, np.inf
        for _ in range(max_iter):
            s = 0.0
            for j in range(n):
                if j == i:
                    e[j] = 0.0
                else:
                    e[j] = np.exp(-(dist[i, j] - dmin) * beta)
                    s += e[j]
            acc = 0.0
            for j in range(n):
                if j != i:
                    acc += (dist[i, j] - dmin) * (e[j] / s)
            h = np.log(s) + beta * acc
            perp = np.exp(h)
            if abs(perp - target) <= tol:
                ok[i] = True
                break
            if perp > target:
                lo = beta
                beta = beta * 2.0 if hi == np.inf else 0.5 * (beta + hi)
            else:
                hi = beta
                beta = beta * 0.5 if lo == 0.0 else 0.5 * (beta + lo)
        for j in range(n):
            cond[i, j] = e[j] / s
        betas[i] = beta
    return cond, betas, ok


# ---------------------------------------------------------------------------
# Approximate entropy
# ---------------------------------------------------------------------------


def apen_phi_numpy(x, m, r):
    n = x.shape[0] - m + 1
    idx = np.arange(n)[:, None] + np.arange(m)[None, :]
    tpl = x[idx]
    cheb = np.abs(tpl[:, None, :] - tpl[None, :, :]).max(axis=2)
    c = (cheb <= r).sum(axis=1) / n
    return np.log(c).mean()


@njit
def apen_phi_numba(x, m, r):
    n = x.shape[0] - m + 1
    total = 0.0
    for i in range(n):
        cnt = 0
        for j in range(n):
            d = 0.0
            for t in range(m):
                v = abs(x[i + t] - x[j + t])
                if v > d:
                    d = v
            if d <= r:
                cnt += 1
        total += np.log(cnt / n)
    return total / n


# ---------------------------------------------------------------------------
# Simple exponential smoothing over an alpha grid
# ---------------------------------------------------------------------------


def ses_sse_grid_numpy(x, alphas):
    """In-sample one-step SSE for each smoothing constant (level starts at x[0])."""
    level = np.full(alphas.shape[0], x[0])
    sse = np.zeros(alphas.shape[0])
    for t in range(1, x.shape[0]):
        err = x[t] - level
        sse += err * err
        level = level + alphas * err
    return sse


@njit
def ses_sse_grid_numba(x, alphas):
    na = alphas.shape[0]
    sse = np.zeros(na)
    for a in range(na):
        level = x[0]
        acc = 0.0
        for t in range(1, x.shape[0]):
            err = x[t] - level
            acc += err * err
            level = level + alphas[a] * err
        sse[a] = acc
    return sse


if USE_NUMBA:
    rrelieff_accumulate = rrelieff_accumulate_numba
    tsne_gradient = tsne_gradient_numba
    conditional_p = conditional_p_numba
    apen_phi = apen_phi_numba
    ses_sse_grid = ses_sse_grid_numba
else:
    rrelieff_accumulate = rrelieff_accumulate_numpy
    tsne_gradient = tsne_gradient_numpy
    conditional_p = conditional_p_numpy
    apen_phi = apen_phi_numpy
    ses_sse_grid = ses_sse_grid_numpy
