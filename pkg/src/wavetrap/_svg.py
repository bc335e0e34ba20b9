"""Minimal deterministic SVG line plots.

Self-contained documents with a fixed viewport, no timestamps and no
environment-dependent content, so repeated runs are byte-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

WIDTH, HEIGHT = 640, 480
MARGIN_LEFT, MARGIN_RIGHT = 64, 16
MARGIN_TOP, MARGIN_BOTTOM = 28, 46
PALETTE = ("#1f6fb4", "#d45500", "#2c8c47", "#8a2be2", "#b01030")


@dataclass
class Series:
    x: list
    y: list
    label: str = ""


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _nice_ticks(lo: float, hi: float, target: int = 6):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def line_plot(series, title: str = "", xlabel: str = "", ylabel: str = "",
              logx: bool = False, logy: bool = False, vlines=(),
              annotations=()) -> str:
    """Render series as an SVG line plot.

    vlines: x positions marked with dashed vertical lines.
    annotations: (x, y, text) triples placed in data coordinates.
    """
    series = [s for s in series if len(s.x)]
    if not series:
        raise ValueError("no data series to plot")

    def tx(v):
        return math.log10(v) if logx else v

    def ty(v):
        return math.log10(v) if logy else v

    xs = [tx(v) for s in series for v in s.x]
    ys = [ty(v) for s in series for v in s.y]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad = 0.04 * (y_hi - y_lo)
    y_lo -= pad
    y_hi += pad

    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def px(v):
        return MARGIN_LEFT + plot_w * (tx(v) - x_lo) / (x_hi - x_lo)

    def py(v):
        return MARGIN_TOP + plot_h * (1.0 - (ty(v) - y_lo) / (y_hi - y_lo))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" '
        f'height="{plot_h}" fill="none" stroke="#444"/>',
    ]
    if title:
        out.append(f'<text x="{WIDTH // 2}" y="18" text-anchor="middle" '
                   f'font-family="monospace" font-size="13">{title}</text>')

    for t in _nice_ticks(x_lo, x_hi):
        x = MARGIN_LEFT + plot_w * (t - x_lo) / (x_hi - x_lo)
        label = _fmt(10.0 ** t) if logx else _fmt(t)
        out.append(f'<line x1="{x:.2f}" y1="{MARGIN_TOP + plot_h}" '
                   f'x2="{x:.2f}" y2="{MARGIN_TOP + plot_h + 5}" '
                   f'stroke="#444"/>')
        out.append(f'<text x="{x:.2f}" y="{MARGIN_TOP + plot_h + 18}" '
                   f'text-anchor="middle" font-family="monospace" '
                   f'font-size="10">{label}</text>')
    for t in _nice_ticks(y_lo, y_hi):
        y = MARGIN_TOP + plot_h * (1.0 - (t - y_lo) / (y_hi - y_lo))
        label = _fmt(10.0 ** t) if logy else _fmt(t)
        out.append(f'<line x1="{MARGIN_LEFT - 5}" y1="{y:.2f}" '
                   f'x2="{MARGIN_LEFT}" y2="{y:.2f}" stroke="#444"/>')
        out.append(f'<text x="{MARGIN_LEFT - 8}" y="{y + 3:.2f}" '
                   f'text-anchor="end" font-family="monospace" '
                   f'font-size="10">{label}</text>')
    if xlabel:
        out.append(f'<text x="{MARGIN_LEFT + plot_w // 2}" '
                   f'y="{HEIGHT - 10}" text-anchor="middle" '
                   f'font-family="monospace" font-size="11">{xlabel}</text>')
    if ylabel:
        yc = MARGIN_TOP + plot_h // 2
        out.append(f'<text x="14" y="{yc}" text-anchor="middle" '
                   f'font-family="monospace" font-size="11" '
                   f'transform="rotate(-90 14 {yc})">{ylabel}</text>')

    for v in vlines:
        if not (x_lo <= tx(v) <= x_hi):
            continue
        x = px(v)
        out.append(f'<line x1="{x:.2f}" y1="{MARGIN_TOP}" x2="{x:.2f}" '
                   f'y2="{MARGIN_TOP + plot_h}" stroke="#888" '
                   f'stroke-dasharray="4,3"/>')

    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}"
                       for x, y in zip(s.x, s.y)
                       if (not logx or x > 0) and (not logy or y > 0))
        out.append(f'<polyline points="{pts}" fill="none" '
                   f'stroke="{color}" stroke-width="1.5"/>')
        if s.label:
            ly = MARGIN_TOP + 14 + 14 * i
            out.append(f'<line x1="{WIDTH - 150}" y1="{ly - 4}" '
                       f'x2="{WIDTH - 130}" y2="{ly - 4}" '
                       f'stroke="{color}" stroke-width="1.5"/>')
            out.append(f'<text x="{WIDTH - 125}" y="{ly}" '
                       f'font-family="monospace" font-size="10">'
                       f'{s.label}</text>')

    for (ax, ay, text) in annotations:
        out.append(f'<text x="{px(ax):.2f}" y="{py(ay):.2f}" '
                   f'font-family="monospace" font-size="10" '
                   f'fill="#333">{text}</text>')

    out.append("</svg>")
    return "\n".join(out) + "\n"
