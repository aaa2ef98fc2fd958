"""A tiny SVG scatter plot with one fitted line; enough for report figures."""
from __future__ import annotations

from xml.sax.saxutils import escape

WIDTH, HEIGHT, PAD = 480, 360, 50


def _ticks(lo: float, hi: float, n: int = 5):
    return [lo + (hi - lo) * k / (n - 1) for k in range(n)]


def scatter_with_line(x, y, intercept: float, slope: float, xlabel: str = "x",
                      ylabel: str = "y") -> str:
    """Points (x, y) and the line y = intercept + slope x.  Output is deterministic."""
    x = [float(v) for v in x]
    y = [float(v) for v in y]
    if not x:
        x, y = [0.0, 1.0], [0.0, 1.0]
    line_y = [intercept + slope * v for v in (min(x), max(x))]
    x0, x1 = min(x), max(x)
    y0, y1 = min(y + line_y), max(y + line_y)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1

    def px(v):
        return PAD + (v - x0) / (x1 - x0) * (WIDTH - 2 * PAD)

    def py(v):
        return HEIGHT - PAD - (v - y0) / (y1 - y0) * (HEIGHT - 2 * PAD)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<line x1="{PAD}" y1="{HEIGHT - PAD}" x2="{WIDTH - PAD}" y2="{HEIGHT - PAD}" stroke="black"/>',
           f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{HEIGHT - PAD}" stroke="black"/>']
    for v in _ticks(x0, x1):
        out.append(f'<text x="{px(v):.2f}" y="{HEIGHT - PAD + 16}" font-size="10" '
                   f'text-anchor="middle">{v:.3g}</text>')
    for v in _ticks(y0, y1):
        out.append(f'<text x="{PAD - 6}" y="{py(v) + 3:.2f}" font-size="10" '
                   f'text-anchor="end">{v:.3g}</text>')
    for a, b in zip(x, y):
        out.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="2.5" fill="steelblue"/>')
    out.append(f'<line x1="{px(x0):.2f}" y1="{py(line_y[0]):.2f}" x2="{px(x1):.2f}" '
               f'y2="{py(line_y[1]):.2f}" stroke="firebrick"/>')
    out.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" font-size="12" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{HEIGHT / 2}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 14 {HEIGHT / 2})">{escape(ylabel)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
