"""Dependency-free SVG line and box charts."""

from __future__ import annotations

import math
from html import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")
_W, _H = 640, 400
_L, _R, _T, _B = 70, 20, 40, 50


def moving_average(values, window: int) -> np.ndarray:
    """Trailing mean; a window longer than the series collapses to one point."""
    v = np.asarray(values, dtype=np.float64)
    if window <= 1 or len(v) == 0:
        return v
    if window >= len(v):
        return np.array([v.mean()])
    c = np.cumsum(np.insert(v, 0, 0.0))
    return (c[window:] - c[:-window]) / window


def _ticks(lo, hi, n=5):
    if not math.isfinite(lo) or not math.isfinite(hi):
        return [0.0]
    if hi == lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw), default=raw)
    first = math.ceil(lo / step) * step
    return [first + i * step for i in range(int((hi - first) / step + 1e-9) + 1)]


def _label(v):
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-2:
        return f"{v:.3g}"
    return f"{v:g}"


class _Frame:
    def __init__(self, xlo, xhi, ylo, yhi):
        if xhi == xlo:
            xlo, xhi = xlo - 0.5, xhi + 0.5
        if yhi == ylo:
            ylo, yhi = ylo - 0.5, yhi + 0.5
        self.xlo, self.xhi, self.ylo, self.yhi = xlo, xhi, ylo, yhi

    def x(self, v):
        return _L + (v - self.xlo) / (self.xhi - self.xlo) * (_W - _L - _R)

    def y(self, v):
        return _H - _B - (v - self.ylo) / (self.yhi - self.ylo) * (_H - _T - _B)

    def axes(self, title, xlabel, ylabel, xticks=True):
        out = [f'<rect x="{_L}" y="{_T}" width="{_W - _L - _R}" height="{_H - _T - _B}" '
               f'fill="none" stroke="#444"/>',
               f'<text x="{_W / 2}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
               f'<text x="{_W / 2}" y="{_H - 10}" text-anchor="middle" font-size="12">'
               f'{escape(xlabel)}</text>',
               f'<text x="16" y="{_H / 2}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 16 {_H / 2})">{escape(ylabel)}</text>']
        for t in _ticks(self.ylo, self.yhi):
            yy = self.y(t)
            out.append(f'<line x1="{_L - 4}" y1="{yy:.2f}" x2="{_L}" y2="{yy:.2f}" stroke="#444"/>')
            out.append(f'<text x="{_L - 6}" y="{yy + 4:.2f}" text-anchor="end" font-size="11">'
                       f'{_label(t)}</text>')
        if xticks:
            for t in _ticks(self.xlo, self.xhi):
                xx = self.x(t)
                out.append(f'<line x1="{xx:.2f}" y1="{_H - _B}" x2="{xx:.2f}" y2="{_H - _B + 4}" '
                           f'stroke="#444"/>')
                out.append(f'<text x="{xx:.2f}" y="{_H - _B + 16}" text-anchor="middle" '
                           f'font-size="11">{_label(t)}</text>')
        return out


def _doc(body):
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
            f'viewBox="0 0 {_W} {_H}" font-family="sans-serif">\n'
            + "\n".join(body) + "\n</svg>\n")


def line_chart(series, title="", xlabel="", ylabel="") -> str:
    """``series`` is a list of ``(label, xs, ys)``; one polyline per entry."""
    series = [(lab, np.asarray(xs, float), np.asarray(ys, float)) for lab, xs, ys in series]
    finite = [v for _, xs, ys in series for v in (xs, ys) if len(v)]
    if not finite:
        return _doc([f'<text x="20" y="40">{escape(title)}: no data</text>'])
    xs_all = np.concatenate([xs for _, xs, _ in series])
    ys_all = np.concatenate([ys for _, _, ys in series])
    frame = _Frame(xs_all.min(), xs_all.max(), ys_all.min(), ys_all.max())
    body = frame.axes(title, xlabel, ylabel)
    for k, (lab, xs, ys) in enumerate(series):
        colour = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{frame.x(a):.2f},{frame.y(b):.2f}" for a, b in zip(xs, ys))
        body.append(f'<polyline class="series" fill="none" stroke="{colour}" stroke-width="1.5" '
                    f'points="{pts}"><title>{escape(lab)}</title></polyline>')
        ly = _T + 16 + 16 * k
        body.append(f'<line x1="{_W - _R - 150}" y1="{ly - 4}" x2="{_W - _R - 130}" y2="{ly - 4}" '
                    f'stroke="{colour}" stroke-width="2"/>')
        body.append(f'<text class="legend" x="{_W - _R - 125}" y="{ly}" font-size="12">'
                    f'{escape(lab)}</text>')
    return _doc(body)


def box_chart(groups, title="", ylabel="") -> str:
    """Tukey boxes (quartiles, 1.5 IQR whiskers) for ``[(label, values), ...]``."""
    groups = [(lab, np.asarray(v, float)) for lab, v in groups]
    allv = np.concatenate([v for _, v in groups if len(v)] or [np.zeros(1)])
    frame = _Frame(0.0, float(len(groups)), allv.min(), allv.max())
    body = frame.axes(title, "", ylabel, xticks=False)
    for k, (lab, v) in enumerate(groups):
        if not len(v):
            continue
        q1, med, q3 = np.percentile(v, [25, 50, 75])
        iqr = q3 - q1
        lo = v[v >= q1 - 1.5 * iqr].min()
        hi = v[v <= q3 + 1.5 * iqr].max()
        cx = frame.x(k + 0.5)
        half = 0.2 * (frame.x(1) - frame.x(0))
        colour = PALETTE[k % len(PALETTE)]
        body += [
            f'<line x1="{cx:.2f}" y1="{frame.y(lo):.2f}" x2="{cx:.2f}" y2="{frame.y(hi):.2f}" '
            f'stroke="#444"/>',
            f'<rect class="box" x="{cx - half:.2f}" y="{frame.y(q3):.2f}" width="{2 * half:.2f}" '
            f'height="{max(frame.y(q1) - frame.y(q3), 0.5):.2f}" fill="{colour}" fill-opacity="0.35" '
            f'stroke="{colour}"/>',
            f'<line x1="{cx - half:.2f}" y1="{frame.y(med):.2f}" x2="{cx + half:.2f}" '
            f'y2="{frame.y(med):.2f}" stroke="#000" stroke-width="2"/>',
            f'<text x="{cx:.2f}" y="{_H - _B + 16}" text-anchor="middle" font-size="12">'
            f'{escape(lab)}</text>',
        ]
        for o in v[(v < lo) | (v > hi)]:
            body.append(f'<circle cx="{cx:.2f}" cy="{frame.y(o):.2f}" r="2" fill="none" '
                        f'stroke="{colour}"/>')
    return _doc(body)
