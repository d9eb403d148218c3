"""Minimal static SVG line plots with deterministic text output."""

import math
from xml.sax.saxutils import escape

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _finite(xs, ys, logx):
    pts = []
    for x, y in zip(xs, ys):
        x, y = float(x), float(y)
        if logx:
            if x <= 0:
                continue
            x = math.log10(x)
        if math.isfinite(x) and math.isfinite(y):
            pts.append((x, y))
    return pts


def line_plot(series, title="", xlabel="", ylabel="", logx=False, width=640, height=400):
    """Render ``{label: (xs, ys)}`` as an SVG document string."""
    data = {k: _finite(xs, ys, logx) for k, (xs, ys) in series.items()}
    allp = [p for pts in data.values() for p in pts]
    x0, x1 = (min(p[0] for p in allp), max(p[0] for p in allp)) if allp else (0.0, 1.0)
    y0, y1 = (min(p[1] for p in allp), max(p[1] for p in allp)) if allp else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    ml, mr, mt, mb = 70, 20, 40, 50
    pw, ph = width - ml - mr, height - mt - mb

    def sx(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return mt + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2:.2f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
           f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for tx in _ticks(x0, x1):
        lab = f"{10 ** tx:.3g}" if logx else f"{tx:.4g}"
        out.append(f'<line x1="{sx(tx):.2f}" y1="{mt + ph}" x2="{sx(tx):.2f}" y2="{mt + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{sx(tx):.2f}" y="{mt + ph + 18}" text-anchor="middle" font-size="11">{lab}</text>')
    for ty in _ticks(y0, y1):
        out.append(f'<line x1="{ml - 5}" y1="{sy(ty):.2f}" x2="{ml}" y2="{sy(ty):.2f}" stroke="black"/>')
        out.append(f'<text x="{ml - 8}" y="{sy(ty) + 4:.2f}" text-anchor="end" font-size="11">{ty:.4g}</text>')
    out.append(f'<text x="{ml + pw / 2:.2f}" y="{height - 10}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{mt + ph / 2:.2f}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 16 {mt + ph / 2:.2f})">{escape(ylabel)}</text>')
    for i, (label, pts) in enumerate(data.items()):
        c = COLORS[i % len(COLORS)]
        if pts:
            path = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
            out.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{path}"/>')
        out.append(f'<text x="{ml + pw - 5}" y="{mt + 15 + 14 * i}" text-anchor="end" font-size="11" '
                   f'fill="{c}">{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
