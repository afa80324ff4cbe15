"""Plain-SVG scatter plots of two-dimensional embeddings."""
import re
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from ._io import atomic_write_text

CANVAS = 800
PAD = 60
RADIUS = 2
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def _fmt(v):
    return f"{v:.6g}"


def _scale(v, lo, hi):
    span = hi - lo
    if span <= 0:
        return np.full(v.shape, 0.5)
    return (v - lo) / span


def _document(points, colors, legend, bounds, title):
    (x_lo, x_hi), (y_lo, y_hi) = bounds
    inner = CANVAS - 2 * PAD
    px = PAD + _scale(points[:, 0], x_lo, x_hi) * inner
    py = CANVAS - PAD - _scale(points[:, 1], y_lo, y_hi) * inner
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" height="{CANVAS}" '
        f'viewBox="0 0 {CANVAS} {CANVAS}">',
        f"<title>{escape(title)}</title>",
        f'<rect x="0" y="0" width="{CANVAS}" height="{CANVAS}" fill="white"/>',
        f'<rect x="{PAD}" y="{PAD}" width="{inner}" height="{inner}" fill="none" stroke="black"/>',
    ]
    for x, y, c in zip(px, py, colors):
        out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{RADIUS}" fill="{c}"/>')
    base = CANVAS - PAD
    out += [
        f'<text x="{PAD}" y="{base + 20}" font-size="12">{_fmt(x_lo)}</text>',
        f'<text x="{base}" y="{base + 20}" font-size="12" text-anchor="end">{_fmt(x_hi)}</text>',
        f'<text x="{CANVAS // 2}" y="{base + 40}" font-size="13" text-anchor="middle">dim1</text>',
        f'<text x="{PAD - 6}" y="{base}" font-size="12" text-anchor="end">{_fmt(y_lo)}</text>',
        f'<text x="{PAD - 6}" y="{PAD + 12}" font-size="12" text-anchor="end">{_fmt(y_hi)}</text>',
        f'<text x="{PAD - 40}" y="{CANVAS // 2}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 {PAD - 40} {CANVAS // 2})">dim2</text>',
    ]
    for i, (tag, c) in enumerate(legend):
        y = PAD + 16 * i
        out.append(f'<circle cx="{base - 100}" cy="{y - 14}" r="4" fill="{c}"/>')
        out.append(f'<text x="{base - 90}" y="{y - 10}" font-size="12">{escape(tag)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _safe(tag):
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", tag) or "tag"


def render_scatter(embedding, out):
    """Write one SVG per dataset tag plus an overlay of all tags.

    ``out`` names the overlay file; per-tag files are written next to it
    as ``<stem>_<tag>.svg``. All plots share the embedding's bounding box.
    Returns the written paths, overlay first.
    """
    pts = np.asarray(embedding.points, dtype=np.float64).reshape(-1, 2)
    if pts.shape[0] == 0:
        raise ValueError("cannot render an empty embedding")
    out = Path(out)
    tags = embedding.tags
    color = {t: PALETTE[i % len(PALETTE)] for i, t in enumerate(tags)}
    bounds = ((pts[:, 0].min(), pts[:, 0].max()), (pts[:, 1].min(), pts[:, 1].max()))
    all_tags = np.array(embedding.dataset_tags, dtype=object)
    written = [atomic_write_text(out, _document(
        pts, [color[t] for t in all_tags], [(t, color[t]) for t in tags], bounds,
        "instance space: " + ", ".join(tags)))]
    for t in tags:
        mask = all_tags == t
        path = out.with_name(f"{out.stem}_{_safe(t)}{out.suffix or '.svg'}")
        written.append(atomic_write_text(path, _document(
            pts[mask], [color[t]] * int(mask.sum()), [(t, color[t])], bounds,
            f"instance space: {t}")))
    return written


__all__ = ["render_scatter", "CANVAS", "RADIUS", "PALETTE"]
