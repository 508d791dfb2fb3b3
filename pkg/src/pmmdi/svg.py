"""Minimal log-linear SVG line chart: polylines and axis ticks, nothing else."""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=20, top=20, bottom=50)
_STYLES = ("stroke:#1f77b4;stroke-dasharray:8,4", "stroke:#000000", "stroke:#d62728;stroke-dasharray:2,3")


def _segments(xs, ys):
    """Split a curve wherever y is non-positive or non-finite (no log)."""
    seg: list[tuple[float, float]] = []
    for x, y in zip(xs, ys):
        if y > 0 and math.isfinite(y) and math.isfinite(x):
            seg.append((x, math.log10(y)))
        elif seg:
            yield seg
            seg = []
    if seg:
        yield seg


def line_chart(
    x: Sequence[float],
    series: dict[str, Sequence[float]],
    xlabel: str = "L (km)",
    ylabel: str = "key rate (bits per round)",
) -> str:
    """Render ``series`` against ``x`` with a log10 y axis."""
    logs = [math.log10(v) for ys in series.values() for v in ys if v > 0 and math.isfinite(v)]
    xs = [v for v in x if math.isfinite(v)]
    x0, x1 = (min(xs), max(xs)) if xs else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0
    y0 = math.floor(min(logs)) if logs else -1
    y1 = math.ceil(max(logs)) if logs else 0
    if y1 == y0:
        y1 = y0 + 1
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(v):
        return MARGIN["left"] + (v - x0) / (x1 - x0) * pw

    def py(v):
        return MARGIN["top"] + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
        'fill="none" stroke="#444"/>',
    ]
    # y ticks at every decade
    step = max(1, (y1 - y0) // 10)
    for d in range(y0, y1 + 1, step):
        y = py(d)
        out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{y:.2f}" x2="{MARGIN["left"]}" y2="{y:.2f}" stroke="#444"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{y + 4:.2f}" text-anchor="end">1e{d}</text>')
    for t in _nice_ticks(x0, x1):
        xx = px(t)
        yb = MARGIN["top"] + ph
        out.append(f'<line x1="{xx:.2f}" y1="{yb}" x2="{xx:.2f}" y2="{yb + 5}" stroke="#444"/>')
        out.append(f'<text x="{xx:.2f}" y="{yb + 18}" text-anchor="middle">{t:g}</text>')
    out.append(
        f'<text x="{MARGIN["left"] + pw / 2}" y="{HEIGHT - 10}" text-anchor="middle">{escape(xlabel)}</text>'
    )
    out.append(
        f'<text transform="translate(16,{MARGIN["top"] + ph / 2}) rotate(-90)" text-anchor="middle">'
        f"{escape(ylabel)}</text>"
    )
    for n, (name, ys) in enumerate(series.items()):
        style = _STYLES[n % len(_STYLES)]
        for seg in _segments(x, ys):
            pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in seg)
            out.append(f'<polyline fill="none" style="{style};stroke-width:1.5" points="{pts}"/>')
        ly = MARGIN["top"] + 16 + 16 * n
        lx = MARGIN["left"] + pw - 150
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 24}" y2="{ly - 4}" style="{style};stroke-width:1.5"/>')
        out.append(f'<text x="{lx + 30}" y="{ly}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _nice_ticks(a: float, b: float, target: int = 6) -> list[float]:
    raw = (b - a) / target
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    first = math.ceil(a / step) * step
    ticks = []
    t = first
    while t <= b + 1e-9 * step:
        ticks.append(round(t, 10))
        t += step
    return ticks
