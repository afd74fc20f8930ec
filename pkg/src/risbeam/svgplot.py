"""Minimal deterministic SVG line plots (no plotting library needed)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f")

W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 170, 40, 60


def _nice_ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.floor(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        if t >= lo - 1e-9 * step:
            ticks.append(round(t, 10))
        t += step
    return ticks


def _f(x: float) -> str:
    return f"{x:.2f}"


def line_plot(series, title: str, xlabel: str, ylabel: str, caption: str = "", ylim=None) -> str:
    """Render ``series`` (ordered ``{label: (xs, ys)}``) as a standalone SVG document."""
    if not series or all(len(xs) == 0 for xs, _ in series.values()):
        raise ValueError("nothing to plot")
    xs_all = [x for xs, _ in series.values() for x in xs]
    ys_all = [y for _, ys in series.values() for y in ys if math.isfinite(y)]
    x0, x1 = min(xs_all), max(xs_all)
    if x1 == x0:
        x1 = x0 + 1
    if ylim is None:
        y0, y1 = min(ys_all), max(ys_all)
        if y1 == y0:
            y0, y1 = y0 - 0.5, y1 + 0.5
    else:
        y0, y1 = ylim
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def px(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def py(y):
        return TOP + ph - (y - y0) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" '
        'font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2 - RIGHT / 2:.0f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _nice_ticks(x0, x1):
        X = px(t)
        out.append(f'<line x1="{_f(X)}" y1="{TOP + ph}" x2="{_f(X)}" y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_f(X)}" y="{TOP + ph + 18}" text-anchor="middle">{t:g}</text>')
    for t in _nice_ticks(y0, y1):
        Y = py(t)
        out.append(f'<line x1="{LEFT - 5}" y1="{_f(Y)}" x2="{LEFT}" y2="{_f(Y)}" stroke="black"/>')
        out.append(f'<line x1="{LEFT}" y1="{_f(Y)}" x2="{LEFT + pw}" y2="{_f(Y)}" stroke="#dddddd"/>')
        out.append(f'<text x="{LEFT - 8}" y="{_f(Y + 4)}" text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.0f}" y="{H - 22}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="18" y="{TOP + ph / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {TOP + ph / 2:.0f})">{escape(ylabel)}</text>'
    )
    for i, (label, (xs, ys)) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{_f(px(x))},{_f(py(y))}" for x, y in zip(xs, ys) if math.isfinite(y))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
        if len(xs) <= 30:
            for x, y in zip(xs, ys):
                if math.isfinite(y):
                    out.append(f'<circle cx="{_f(px(x))}" cy="{_f(py(y))}" r="3" fill="{color}"/>')
        ly = TOP + 10 + 20 * i
        lx = LEFT + pw + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 30}" y="{ly + 4}">{escape(str(label))}</text>')
    if caption:
        out.append(f'<text x="{LEFT}" y="{H - 6}" font-size="11" fill="#444444">{escape(caption)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
