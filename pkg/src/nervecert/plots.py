"""Minimal SVG output: frequency curves, QQ scatter, ECDF comparison.

Hand-rolled so plot bytes are deterministic and the package stays
dependency-light.
"""
from __future__ import annotations

import numpy as np

_W, _H, _PAD = 640, 420, 50


def _scale(values, lo, hi, out_lo, out_hi):
    span = hi - lo if hi > lo else 1.0
    return [(out_lo + (v - lo) / span * (out_hi - out_lo)) for v in values]


def _frame(title: str, xlabel: str, ylabel: str) -> list:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.0f}" y="22" text-anchor="middle" font-size="15">{title}</text>',
        f'<text x="{_W / 2:.0f}" y="{_H - 8}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="14" y="{_H / 2:.0f}" font-size="12" '
        f'transform="rotate(-90 14 {_H / 2:.0f})" text-anchor="middle">{ylabel}</text>',
        f'<rect x="{_PAD}" y="{_PAD}" width="{_W - 2 * _PAD}" height="{_H - 2 * _PAD}" '
        f'fill="none" stroke="black" stroke-width="1"/>',
    ]


def _polyline(xs, ys, color: str, width: float = 1.5) -> str:
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
    return f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"/>'


def score_plot_svg(sim_scores, data_score: float, title: str = "standardized maxima") -> str:
    """Frequency curve of simulated global maxima with the data value marked."""
    sims = np.asarray(sorted(sim_scores), dtype=float)
    lo = min(float(sims.min()), data_score)
    hi = max(float(sims.max()), data_score)
    margin = 0.05 * (hi - lo if hi > lo else 1.0)
    lo, hi = lo - margin, hi + margin
    counts, edges = np.histogram(sims, bins=max(8, len(sims) // 8), range=(lo, hi))
    centers = (edges[:-1] + edges[1:]) / 2.0
    peak = max(int(counts.max()), 1)
    xs = _scale(centers, lo, hi, _PAD, _W - _PAD)
    ys = _scale(counts, 0, peak, _H - _PAD, _PAD)
    parts = _frame(title, "score", "frequency")
    parts.append(_polyline(xs, ys, "steelblue"))
    (data_x,) = _scale([data_score], lo, hi, _PAD, _W - _PAD)
    parts.append(
        f'<line x1="{data_x:.2f}" y1="{_PAD}" x2="{data_x:.2f}" y2="{_H - _PAD}" '
        f'stroke="darkorange" stroke-width="2"/>'
    )
    parts.append(
        f'<circle cx="{data_x:.2f}" cy="{_H - _PAD}" r="4" fill="darkorange"/>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def qq_plot_svg(pairs, title: str) -> str:
    """Scatter of (theoretical, empirical) quantiles with the y=x reference."""
    arr = np.asarray(pairs, dtype=float)
    lo = float(min(arr[:, 0].min(), arr[:, 1].min()))
    hi = float(max(arr[:, 0].max(), arr[:, 1].max()))
    margin = 0.05 * (hi - lo if hi > lo else 1.0)
    lo, hi = lo - margin, hi + margin
    xs = _scale(arr[:, 0], lo, hi, _PAD, _W - _PAD)
    ys = _scale(arr[:, 1], lo, hi, _H - _PAD, _PAD)
    parts = _frame(title, "theoretical quantile", "empirical quantile")
    (x0, x1) = _scale([lo, hi], lo, hi, _PAD, _W - _PAD)
    (y0, y1) = _scale([lo, hi], lo, hi, _H - _PAD, _PAD)
    parts.append(_polyline([x0, x1], [y0, y1], "gray", 1.0))
    for x, y in zip(xs, ys):
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="2.4" fill="steelblue"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def ecdf_plot_svg(sample, cdf, title: str, lo: float, hi: float) -> str:
    """Empirical CDF of the sample against a reference CDF callable."""
    vals = np.sort(np.asarray(sample, dtype=float))
    vals = vals[(vals >= lo) & (vals <= hi)]
    n = len(vals)
    ys_emp = np.arange(1, n + 1) / n
    grid = np.linspace(lo, hi, 200)
    ys_ref = [cdf(g) for g in grid]
    parts = _frame(title, "value", "CDF")
    xs = _scale(vals, lo, hi, _PAD, _W - _PAD)
    ys = _scale(ys_emp, 0.0, 1.0, _H - _PAD, _PAD)
    parts.append(_polyline(xs, ys, "steelblue"))
    gx = _scale(grid, lo, hi, _PAD, _W - _PAD)
    gy = _scale(ys_ref, 0.0, 1.0, _H - _PAD, _PAD)
    parts.append(_polyline(gx, gy, "gray", 1.0))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
