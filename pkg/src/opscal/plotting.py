"""Minimal native SVG line plots (no plotting dependency).

Good enough for the experiment outputs: one polyline per series, ticked
axes, a legend, and optional +-std whiskers.
"""

from __future__ import annotations

import numpy as np

_PALETTE = {
    "BM": "#7f7f7f",
    "FPS": "#1f77b4",
    "WPS": "#17becf",
    "OPS": "#ff7f0e",
    "TOPS": "#2ca02c",
    "HOPS": "#d62728",
    "FBS": "#9467bd",
    "WBS": "#8c564b",
    "OBS": "#e377c2",
    "TOBS": "#bcbd22",
    "HOBS": "#aa3377",
    "WHB": "#555555",
    "TWHB": "#117733",
}
_FALLBACK = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    for mult in (1, 2, 2.5, 5, 10):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = np.ceil(lo / step) * step
    return np.arange(start, hi + step / 2, step)


def line_plot_svg(path, xs, series, title="", xlabel="", ylabel="", max_points=2000):
    """Write an SVG line plot.

    ``series`` maps name -> (mean_array, std_array_or_None); all arrays
    align with ``xs``. Series longer than max_points are thinned evenly.
    """
    xs = np.asarray(xs, dtype=float)
    width, height = 720, 460
    ml, mr, mt, mb = 70, 160, 44, 56
    pw, ph = width - ml - mr, height - mt - mb

    ys_all = []
    for mean, std in series.values():
        ys_all.append(np.asarray(mean, dtype=float))
        if std is not None:
            ys_all.append(np.asarray(mean) + np.asarray(std))
            ys_all.append(np.asarray(mean) - np.asarray(std))
    y_lo = float(min(np.min(a) for a in ys_all))
    y_hi = float(max(np.max(a) for a in ys_all))
    if y_hi - y_lo < 1e-12:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad
    x_lo, x_hi = float(xs.min()), float(xs.max())
    if x_hi - x_lo < 1e-12:
        x_hi = x_lo + 1.0

    def X(v):
        return ml + (v - x_lo) / (x_hi - x_lo) * pw

    def Y(v):
        return mt + ph - (v - y_lo) / (y_hi - y_lo) * ph

    keep = np.arange(len(xs))
    if len(xs) > max_points:
        keep = np.unique(np.linspace(0, len(xs) - 1, max_points).astype(int))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="Helvetica,Arial,sans-serif">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{ml + pw / 2:.1f}" y="24" text-anchor="middle" font-size="15">{title}</text>',
        f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>',
    ]
    for tx in _ticks(x_lo, x_hi):
        parts.append(
            f'<line x1="{X(tx):.1f}" y1="{mt + ph}" x2="{X(tx):.1f}" y2="{mt + ph + 5}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{X(tx):.1f}" y="{mt + ph + 20}" text-anchor="middle" font-size="11">{tx:g}</text>'
        )
    for ty in _ticks(y_lo, y_hi):
        parts.append(
            f'<line x1="{ml - 5}" y1="{Y(ty):.1f}" x2="{ml}" y2="{Y(ty):.1f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{ml - 9}" y="{Y(ty) + 4:.1f}" text-anchor="end" font-size="11">{ty:g}</text>'
        )
    parts.append(
        f'<text x="{ml + pw / 2:.1f}" y="{height - 14}" text-anchor="middle" font-size="12">{xlabel}</text>'
    )
    parts.append(
        f'<text x="20" y="{mt + ph / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 20 {mt + ph / 2:.1f})">{ylabel}</text>'
    )

    legend_y = mt + 10
    for i, (name, (mean, std)) in enumerate(series.items()):
        mean = np.asarray(mean, dtype=float)
        color = _PALETTE.get(name, _FALLBACK[i % len(_FALLBACK)])
        pts = " ".join(f"{X(xs[k]):.2f},{Y(mean[k]):.2f}" for k in keep)
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.6"/>'
        )
        if std is not None:
            std = np.asarray(std, dtype=float)
            for k in keep:
                if std[k] > 0:
                    parts.append(
                        f'<line x1="{X(xs[k]):.2f}" y1="{Y(mean[k] - std[k]):.2f}" '
                        f'x2="{X(xs[k]):.2f}" y2="{Y(mean[k] + std[k]):.2f}" '
                        f'stroke="{color}" stroke-width="0.7" opacity="0.55"/>'
                    )
        parts.append(
            f'<line x1="{ml + pw + 12}" y1="{legend_y:.1f}" x2="{ml + pw + 34}" y2="{legend_y:.1f}" '
            f'stroke="{color}" stroke-width="2.2"/>'
        )
        parts.append(
            f'<text x="{ml + pw + 40}" y="{legend_y + 4:.1f}" font-size="12">{name}</text>'
        )
        legend_y += 18
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts))
        fh.write("\n")
    return path
