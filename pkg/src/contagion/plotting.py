"""Minimal deterministic SVG renderer for line plots and histograms.

Hand-rolled on purpose: identical inputs must produce byte-identical SVG
files, which rules out renderers that embed timestamps or generated ids.
"""

from __future__ import annotations

import numpy as np

WIDTH = 640
HEIGHT = 420
MARGIN_L = 62
MARGIN_R = 18
MARGIN_T = 34
MARGIN_B = 46

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(value: float) -> str:
    return f"{float(value):.6g}"


def _scale(lo: float, hi: float):
    if hi <= lo:
        hi = lo + 1.0
    return lo, hi


def _x_pix(x, lo, hi):
    return MARGIN_L + (x - lo) / (hi - lo) * (WIDTH - MARGIN_L - MARGIN_R)


def _y_pix(y, lo, hi):
    return HEIGHT - MARGIN_B - (y - lo) / (hi - lo) * (HEIGHT - MARGIN_T - MARGIN_B)


def _frame(title: str, x_lo, x_hi, y_lo, y_hi, x_label="", y_label="") -> list:
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
    ]
    axis_y = HEIGHT - MARGIN_B
    parts.append(
        f'<line x1="{MARGIN_L}" y1="{axis_y}" x2="{WIDTH - MARGIN_R}" y2="{axis_y}" '
        'stroke="black" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{axis_y}" '
        'stroke="black" stroke-width="1"/>'
    )
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        xv = x_lo + frac * (x_hi - x_lo)
        yv = y_lo + frac * (y_hi - y_lo)
        xp = _x_pix(xv, x_lo, x_hi)
        yp = _y_pix(yv, y_lo, y_hi)
        parts.append(
            f'<line x1="{xp:.1f}" y1="{axis_y}" x2="{xp:.1f}" y2="{axis_y + 4}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{xp:.1f}" y="{axis_y + 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{_fmt(xv)}</text>'
        )
        parts.append(
            f'<line x1="{MARGIN_L - 4}" y1="{yp:.1f}" x2="{MARGIN_L}" y2="{yp:.1f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{MARGIN_L - 6}" y="{yp + 3:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10">{_fmt(yv)}</text>'
        )
    if x_label:
        parts.append(
            f'<text x="{(MARGIN_L + WIDTH - MARGIN_R) / 2:.1f}" y="{HEIGHT - 8}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="11">{x_label}</text>'
        )
    if y_label:
        parts.append(
            f'<text x="14" y="{(MARGIN_T + HEIGHT - MARGIN_B) / 2:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11" '
            f'transform="rotate(-90 14 {(MARGIN_T + HEIGHT - MARGIN_B) / 2:.1f})">{y_label}</text>'
        )
    return parts


def render_line_svg(x_values, series: dict, title: str = "",
                    x_label: str = "", y_label: str = "") -> str:
    """Polyline plot; None entries break the corresponding series."""
    xs_all = [float(x) for x in x_values]
    ys_all = [float(y) for ys in series.values() for y in ys if y is not None]
    if xs_all and ys_all:
        x_lo, x_hi = _scale(min(xs_all), max(xs_all))
        y_lo, y_hi = _scale(min(ys_all + [0.0]), max(ys_all))
    else:
        x_lo, x_hi, y_lo, y_hi = 0.0, 1.0, 0.0, 1.0
    parts = _frame(title, x_lo, x_hi, y_lo, y_hi, x_label, y_label)

    for idx, (label, ys) in enumerate(series.items()):
        color = PALETTE[idx % len(PALETTE)]
        segment = []
        chunks = []
        for x, y in zip(xs_all, ys):
            if y is None:
                if segment:
                    chunks.append(segment)
                segment = []
                continue
            segment.append((x, float(y)))
        if segment:
            chunks.append(segment)
        for chunk in chunks:
            pts = " ".join(
                f"{_x_pix(x, x_lo, x_hi):.2f},{_y_pix(y, y_lo, y_hi):.2f}" for x, y in chunk
            )
            if len(chunk) == 1:
                x, y = chunk[0]
                parts.append(
                    f'<circle cx="{_x_pix(x, x_lo, x_hi):.2f}" cy="{_y_pix(y, y_lo, y_hi):.2f}" '
                    f'r="2.5" fill="{color}"/>'
                )
            else:
                parts.append(
                    f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
                )
        legend_y = MARGIN_T + 14 * idx
        parts.append(
            f'<line x1="{WIDTH - 150}" y1="{legend_y}" x2="{WIDTH - 130}" y2="{legend_y}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{WIDTH - 126}" y="{legend_y + 3}" font-family="sans-serif" '
            f'font-size="10">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_hist_svg(values, bins: int = 10, title: str = "",
                    x_label: str = "", y_label: str = "count") -> str:
    """Histogram bar chart over raw values."""
    values = [float(v) for v in values]
    if not values:
        parts = _frame(title, 0.0, 1.0, 0.0, 1.0, x_label, y_label)
        parts.append("</svg>")
        return "\n".join(parts) + "\n"
    counts, edges = np.histogram(values, bins=bins)
    return render_bar_svg(edges, counts, title, x_label, y_label)


def render_bar_svg(edges, counts, title: str = "", x_label: str = "",
                   y_label: str = "count") -> str:
    """Bar chart from precomputed bin edges and counts."""
    edges = [float(e) for e in edges]
    counts = [int(c) for c in counts]
    x_lo, x_hi = _scale(edges[0], edges[-1])
    y_lo, y_hi = _scale(0.0, float(max(counts) if counts else 1))
    parts = _frame(title, x_lo, x_hi, y_lo, y_hi, x_label, y_label)
    base = _y_pix(0.0, y_lo, y_hi)
    for i, count in enumerate(counts):
        x0 = _x_pix(edges[i], x_lo, x_hi)
        x1 = _x_pix(edges[i + 1], x_lo, x_hi)
        top = _y_pix(float(count), y_lo, y_hi)
        parts.append(
            f'<rect x="{x0:.2f}" y="{top:.2f}" width="{max(x1 - x0 - 1.0, 0.5):.2f}" '
            f'height="{max(base - top, 0.0):.2f}" fill="#1f77b4"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
