"""Minimal SVG line charts written as text."""

from __future__ import annotations

import math
from typing import Sequence

WIDTH, HEIGHT = 640, 400
MARGIN = (70, 20, 30, 50)   # left, right, top, bottom
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _num(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    return format(v, ".4g")


def _range(values: list[float]) -> tuple[float, float]:
    vals = [v for v in values if math.isfinite(v)]
    if not vals:
        return 0.0, 1.0
    lo, hi = min(vals), max(vals)
    if hi - lo <= 1e-300 + 1e-12 * max(abs(lo), abs(hi)):
        pad = 0.5 * max(abs(lo), 1.0)
        return lo - pad, hi + pad
    pad = 0.04 * (hi - lo)
    return lo - pad, hi + pad


def line_chart(series: Sequence[tuple[str, Sequence[float], Sequence[float]]], title: str = "",
               xlabel: str = "", ylabel: str = "", markers: Sequence[float] = (),
               logx: bool = False) -> str:
    """Polyline chart of ``(label, xs, ys)`` series; vertical lines at ``markers``.

    Non-finite points are skipped.  Output depends only on the inputs.
    """
    tx = (lambda v: math.log10(v)) if logx else (lambda v: v)
    pts = []
    for label, xs, ys in series:
        pts.append((label, [(tx(float(x)), float(y)) for x, y in zip(xs, ys)
                            if math.isfinite(float(y)) and (not logx or float(x) > 0)]))
    xlo, xhi = _range([p[0] for _, ps in pts for p in ps] + [tx(m) for m in markers])
    ylo, yhi = _range([p[1] for _, ps in pts for p in ps])
    left, right, top, bottom = MARGIN
    pw, ph = WIDTH - left - right, HEIGHT - top - bottom

    def X(v):
        return left + (v - xlo) / (xhi - xlo) * pw

    def Y(v):
        return top + (yhi - v) / (yhi - ylo) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}">',
           f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for k in range(5):
        fy = ylo + (yhi - ylo) * k / 4
        fx = xlo + (xhi - xlo) * k / 4
        out.append(f'<line x1="{left - 4}" y1="{_num(Y(fy))}" x2="{left}" y2="{_num(Y(fy))}" stroke="black"/>')
        out.append(f'<text x="{left - 6}" y="{_num(Y(fy) + 4)}" font-size="11" text-anchor="end">'
                   f'{_tick_label(fy)}</text>')
        xl = 10 ** fx if logx else fx
        out.append(f'<line x1="{_num(X(fx))}" y1="{top + ph}" x2="{_num(X(fx))}" y2="{top + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{_num(X(fx))}" y="{top + ph + 16}" font-size="11" text-anchor="middle">'
                   f'{_tick_label(xl)}</text>')
    for m in markers:
        xm = X(tx(m))
        out.append(f'<line x1="{_num(xm)}" y1="{top}" x2="{_num(xm)}" y2="{top + ph}" '
                   f'stroke="gray" stroke-dasharray="4,3"/>')
    for k, (label, ps) in enumerate(pts):
        color = COLORS[k % len(COLORS)]
        if ps:
            coords = " ".join(f"{_num(X(x))},{_num(Y(y))}" for x, y in ps)
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        if label:
            out.append(f'<text x="{left + pw - 6}" y="{top + 16 + 14 * k}" font-size="11" '
                       f'text-anchor="end" fill="{color}">{_esc(label)}</text>')
    if title:
        out.append(f'<text x="{left + pw / 2:.2f}" y="{top - 10}" font-size="13" '
                   f'text-anchor="middle">{_esc(title)}</text>')
    if xlabel:
        out.append(f'<text x="{left + pw / 2:.2f}" y="{HEIGHT - 10}" font-size="12" '
                   f'text-anchor="middle">{_esc(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="16" y="{top + ph / 2:.2f}" font-size="12" text-anchor="middle" '
                   f'transform="rotate(-90 16 {top + ph / 2:.2f})">{_esc(ylabel)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_chart(path: str, *args, **kwargs) -> None:
    with open(path, "w") as fh:
        fh.write(line_chart(*args, **kwargs))
