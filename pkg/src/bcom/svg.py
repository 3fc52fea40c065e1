"""Small deterministic SVG charts: line chart with trade markers, histogram, scatter matrix."""

from __future__ import annotations

import math
from datetime import datetime, timezone
from typing import Sequence
from xml.sax.saxutils import escape

from .simulation import Histogram, ScatterMatrix

PALETTE = ("#1f77b4", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f")
BUY_COLOR = "#2ca02c"
SELL_COLOR = "#d62728"
FITNESS_COLOR = "#555555"


def _f(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def _label(v: float) -> str:
    return f"{v:.4g}"


class _Doc:
    def __init__(self, width: int, height: int, title: str, timestamp: bool) -> None:
        self.parts = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        ]
        if timestamp:
            stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
            self.parts.append(f"<!-- generated {stamp} -->")
        self.parts.append(f'<rect width="{width}" height="{height}" fill="white"/>')
        if title:
            self.text(width / 2, 18, title, anchor="middle", size=14)

    def text(self, x, y, s, anchor="start", size=None, color="black", rotate=None) -> None:
        extra = f' font-size="{size}"' if size else ""
        if rotate is not None:
            extra += f' transform="rotate({rotate} {_f(x)} {_f(y)})"'
        self.parts.append(f'<text x="{_f(x)}" y="{_f(y)}" text-anchor="{anchor}" fill="{color}"{extra}>'
                          f"{escape(str(s))}</text>")

    def line(self, x1, y1, x2, y2, color="black", width=1.0, dash=None) -> None:
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" '
                          f'stroke="{color}" stroke-width="{width}"{d}/>')

    def polyline(self, pts, color, width=1.2) -> None:
        if not pts:
            return
        coords = " ".join(f"{_f(x)},{_f(y)}" for x, y in pts)
        self.parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="{width}"/>')

    def rect(self, x, y, w, h, fill, stroke="none") -> None:
        self.parts.append(f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}" '
                          f'fill="{fill}" stroke="{stroke}"/>')

    def circle(self, x, y, r, fill) -> None:
        self.parts.append(f'<circle cx="{_f(x)}" cy="{_f(y)}" r="{r}" fill="{fill}" fill-opacity="0.7"/>')

    def triangle(self, x, y, up: bool, color: str, size: float = 5.0) -> None:
        if up:
            pts = [(x, y - size), (x - size, y + size), (x + size, y + size)]
        else:
            pts = [(x, y + size), (x - size, y - size), (x + size, y - size)]
        coords = " ".join(f"{_f(a)},{_f(b)}" for a, b in pts)
        self.parts.append(f'<polygon points="{coords}" fill="{color}"/>')

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _span(values: Sequence[float]) -> tuple[float, float]:
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        return 0.0, 1.0
    lo, hi = min(finite), max(finite)
    if lo == hi:
        pad = abs(lo) * 0.05 or 1.0
        return lo - pad, hi + pad
    pad = (hi - lo) * 0.05
    return lo - pad, hi + pad


def _scale(lo: float, hi: float, a: float, b: float):
    return lambda v: a + (v - lo) / (hi - lo) * (b - a)


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def line_chart(dates: Sequence, series: dict[str, Sequence[float]], fitness: Sequence[float] | None = None,
               buys: Sequence[int] = (), sells: Sequence[int] = (), marker_series: str | None = None,
               title: str = "", timestamp: bool = True, width: int = 900, height: int = 450) -> str:
    """Price and filter lines on the left axis, fitness on the right, trade triangles on the price."""
    doc = _Doc(width, height, title, timestamp)
    left, right, top, bottom = 70, width - 70, 35, height - 60
    n = len(dates)
    x = _scale(0, max(n - 1, 1), left, right)
    lo, hi = _span([v for s in series.values() for v in s])
    y = _scale(lo, hi, bottom, top)
    doc.line(left, bottom, right, bottom)
    doc.line(left, top, left, bottom)
    for t in _ticks(lo, hi):
        doc.line(left - 4, y(t), left, y(t))
        doc.text(left - 6, y(t) + 4, _label(t), anchor="end")
    for i in sorted({0, n // 2, n - 1}) if n else []:
        doc.text(x(i), bottom + 16, str(dates[i]), anchor="middle")
    for k, (name, vals) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        doc.polyline([(x(i), y(v)) for i, v in enumerate(vals)], color)
        doc.line(left + 10 + 120 * k, height - 20, left + 30 + 120 * k, height - 20, color, 2)
        doc.text(left + 34 + 120 * k, height - 16, name)
    if fitness is not None and len(fitness):
        flo, fhi = _span(fitness)
        fy = _scale(flo, fhi, bottom, top)
        doc.line(right, top, right, bottom)
        for t in _ticks(flo, fhi):
            doc.line(right, fy(t), right + 4, fy(t))
            doc.text(right + 6, fy(t) + 4, _label(t))
        doc.polyline([(x(i), fy(v)) for i, v in enumerate(fitness)], FITNESS_COLOR, 1.0)
        k = len(series)
        doc.line(left + 10 + 120 * k, height - 20, left + 30 + 120 * k, height - 20, FITNESS_COLOR, 2)
        doc.text(left + 34 + 120 * k, height - 16, "fitness (right)")
    base = series.get(marker_series) if marker_series else next(iter(series.values()), None)
    if base is not None:
        for i in buys:
            doc.triangle(x(i), y(base[i]), True, BUY_COLOR)
        for i in sells:
            doc.triangle(x(i), y(base[i]), False, SELL_COLOR)
    return doc.render()


def _normal_pdf(v: float, mean: float, sd: float) -> float:
    return math.exp(-0.5 * ((v - mean) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))


def histogram_chart(h: Histogram, title: str = "", xlabel: str = "fitness", timestamp: bool = True,
                    width: int = 700, height: int = 420) -> str:
    doc = _Doc(width, height, title, timestamp)
    left, right, top, bottom = 60, width - 30, 35, height - 50
    lo, hi = h.bins[0][0], h.bins[-1][1]
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    x = _scale(lo, hi, left, right)
    total = sum(h.counts)
    width_bin = (hi - lo) / len(h.bins)
    curve = []
    if h.stdev > 0:
        curve = [(v, total * width_bin * _normal_pdf(v, h.mean, h.stdev))
                 for v in (lo + (hi - lo) * i / 100 for i in range(101))]
    top_count = max([*h.counts, *(c for _, c in curve)]) or 1
    y = _scale(0, top_count * 1.05, bottom, top)
    doc.line(left, bottom, right, bottom)
    doc.line(left, top, left, bottom)
    for a, b, c in h.bins:
        a, b = (lo, hi) if a == b else (a, b)
        doc.rect(x(a), y(c), max(x(b) - x(a) - 1, 0.5), bottom - y(c), "#9ecae1", "#3182bd")
    doc.polyline([(x(v), y(c)) for v, c in curve], SELL_COLOR, 1.5)
    for t in _ticks(lo, hi):
        doc.text(x(t), bottom + 16, _label(t), anchor="middle")
    for t in _ticks(0, top_count):
        doc.text(left - 6, y(t) + 4, _label(t), anchor="end")
    doc.text((left + right) / 2, height - 12, f"{xlabel}  (normal fit: mean {_label(h.mean)}, sd {_label(h.stdev)})",
             anchor="middle")
    return doc.render()


def scatter_matrix_chart(sm: ScatterMatrix, title: str = "", timestamp: bool = True, cell: int = 160) -> str:
    k = len(sm.features)
    pad = 40
    size = pad * 2 + cell * k
    doc = _Doc(size, size + 20, title, timestamp)
    cols = {}
    for f in sm.features:
        vals = None
        for (a, b), p in sm.pairs.items():
            if a == f:
                vals = [pt[0] for pt in p.points]
                break
        cols[f] = vals or []
    for i, fy in enumerate(sm.features):
        for j, fx in enumerate(sm.features):
            x0, y0 = pad + j * cell, pad + 20 + i * cell
            doc.rect(x0, y0, cell - 6, cell - 6, "none", "#cccccc")
            if i == 0:
                doc.text(x0 + (cell - 6) / 2, y0 - 6, fx, anchor="middle")
            if j == 0:
                doc.text(x0 - 6, y0 + (cell - 6) / 2, fy, anchor="middle", rotate=-90)
            if fx == fy:
                mean, sd = sm.diagonal[fx]
                doc.text(x0 + 8, y0 + 20, f"mean {_label(mean)}")
                doc.text(x0 + 8, y0 + 36, f"sd {_label(sd)}")
                continue
            pair = sm.pairs[(fx, fy)]
            xlo, xhi = _span(cols[fx])
            ylo, yhi = _span(cols[fy])
            sx = _scale(xlo, xhi, x0 + 4, x0 + cell - 10)
            sy = _scale(ylo, yhi, y0 + cell - 10, y0 + 4)
            for px, py in pair.points:
                doc.circle(sx(px), sy(py), 1.6, PALETTE[0])
            if pair.slope is not None:
                doc.line(sx(xlo), sy(pair.intercept + pair.slope * xlo),
                         sx(xhi), sy(pair.intercept + pair.slope * xhi), SELL_COLOR, 1.2)
                doc.text(x0 + 6, y0 + cell - 12, f"r={pair.r:+.2f}", size=9)
    return doc.render()
