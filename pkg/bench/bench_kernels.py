"""Time each hot kernel with numba and with the pure-numpy fallback.

Usage: python bench/bench_kernels.py [--repeat N]

Both flavours live side by side in ``tsrepr.kernels``, so one process can
time them; the first numba call (compilation) is excluded.
"""
import argparse
import time

import numpy as np

from tsrepr import kernels
from tsrepr.embedding import squared_distances


def _cases(rng):
    xn = rng.random((1000, 30))
    yn = rng.random(1000)
    rows = np.arange(1000, dtype=np.int64)
    y = rng.normal(size=(500, 2))
    p = rng.random((500, 500))
    p = p + p.T
    np.fill_diagonal(p, 0.0)
    p /= p.sum()
    d = squared_distances(rng.normal(size=(500, 10)))
    x = rng.normal(size=1941)
    alphas = np.round(np.arange(1, 100) / 100.0, 2)
    return {
        "rrelieff_accumulate (1000x30, k=10)": ("rrelieff_accumulate", (xn, yn, rows, 10, 20.0)),
        "tsne_gradient (n=500)": ("tsne_gradient", (y, p)),
        "conditional_p (n=500, perplexity 30)": ("conditional_p", (d, 30.0, 1e-5, 200)),
        "apen_phi (n=1941, m=2)": ("apen_phi", (x, 2, 0.5)),
        "ses_sse_grid (n=1941, 99 alphas)": ("ses_sse_grid", (x, alphas)),
    }


def _time(func, args, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        func(*args)
        best = min(best, time.perf_counter() - t)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':40s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speed-up':>9s}")
    for label, (name, a) in _cases(rng).items():
        fast = getattr(kernels, name + "_numba")
        slow = getattr(kernels, name + "_numpy")
        fast(*a)  # compile
        t_np = _time(slow, a, args.repeat)
        t_nb = _time(fast, a, args.repeat)
        print(f"{label:40s} {t_np * 1e3:11.2f} {t_nb * 1e3:11.2f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
