"""Static SVG figures: planar unit balls with marked vertices, and switching signals."""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .polytope import SymPolytope, outline

SIZE = 400
MARGIN = 40
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _f(x: float) -> str:
    return f"{x:.3f}"


def polytope_svg(P: SymPolytope, title: str = "") -> str:
    """Unit ball of ``||.||_P`` with every vertex ``+-v_k`` marked and labelled.

    Each marked point is a ``<circle class="vertex">``; their count is twice
    the number of stored vertex pairs.
    """
    if P.dim != 2:
        raise ValueError("only planar polytopes can be drawn")
    V = P.vertices
    poly = outline(P)
    r = float(np.abs(np.vstack([V, -V])).max()) * 1.1 or 1.0
    scale = (SIZE - 2 * MARGIN) / (2 * r)
    c = SIZE / 2

    def xy(p):
        return c + scale * p[0], c - scale * p[1]

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">',
        f'<rect width="{SIZE}" height="{SIZE}" fill="white"/>',
        f'<line x1="{MARGIN / 2}" y1="{c}" x2="{SIZE - MARGIN / 2}" y2="{c}" stroke="#bbb"/>',
        f'<line x1="{c}" y1="{MARGIN / 2}" x2="{c}" y2="{SIZE - MARGIN / 2}" stroke="#bbb"/>',
    ]
    pts = " ".join(f"{_f(a)},{_f(b)}" for a, b in (xy(p) for p in poly))
    out.append(f'<polygon class="ball" points="{pts}" fill="#1f77b4" fill-opacity="0.15" stroke="#1f77b4"/>')
    for k, v in enumerate(V):
        for sign, name in ((1.0, f"v{k}"), (-1.0, f"-v{k}")):
            a, b = xy(sign * v)
            out.append(f'<circle class="vertex" cx="{_f(a)}" cy="{_f(b)}" r="3" fill="black"/>')
            out.append(f'<text x="{_f(a + 5)}" y="{_f(b - 5)}" font-size="10">{name}</text>')
    if title:
        out.append(f'<text x="{MARGIN / 2}" y="{MARGIN / 2}" font-size="13">{escape(title)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def signal_svg(segments: Sequence[tuple[str, Fraction]], periods: int = 3, title: str = "") -> str:
    """Piecewise-constant mode timeline of a periodic signal, ``periods`` times."""
    modes = sorted({m for m, _ in segments})
    level = {m: i for i, m in enumerate(modes)}
    T = float(sum(d for _, d in segments)) * periods
    height = 60 + 30 * len(modes)
    sx = (SIZE * 1.5 - 2 * MARGIN) / T if T > 0 else 1.0

    def y(m):
        return height - MARGIN / 2 - 30 * level[m]

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{int(SIZE * 1.5)}" height="{height}">',
        f'<rect width="{int(SIZE * 1.5)}" height="{height}" fill="white"/>',
    ]
    t = 0.0
    path = []
    for _ in range(periods):
        for m, d in segments:
            x0, x1 = MARGIN + sx * t, MARGIN + sx * (t + float(d))
            path.append(f"{'M' if not path else 'L'}{_f(x0)},{_f(y(m))} L{_f(x1)},{_f(y(m))}")
            t += float(d)
    out.append(f'<path class="signal" d="{" ".join(path)}" fill="none" stroke="#d62728" stroke-width="2"/>')
    for m in modes:
        out.append(f'<text x="4" y="{_f(y(m) + 4)}" font-size="11">{escape(m)}</text>')
    if title:
        out.append(f'<text x="{MARGIN}" y="16" font-size="13">{escape(title)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def trajectory_svg(t: np.ndarray, x: np.ndarray, active: np.ndarray, title: str = "") -> str:
    """``log ||x(t)||`` against ``t``; samples on dark intervals are drawn grey."""
    n = np.linalg.norm(x, axis=1)
    ok = n > 0
    t, ln, act = t[ok], np.log(n[ok]), active[ok]
    w, h = int(SIZE * 1.5), SIZE // 2
    tspan = float(t[-1] - t[0]) or 1.0
    lspan = float(ln.max() - ln.min()) or 1.0

    def xy(a, b):
        return MARGIN + (w - 2 * MARGIN) * (a - t[0]) / tspan, h - MARGIN - (h - 2 * MARGIN) * (b - ln.min()) / lspan

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">',
           f'<rect width="{w}" height="{h}" fill="white"/>']
    for k in range(len(t) - 1):
        a0, b0 = xy(t[k], ln[k])
        a1, b1 = xy(t[k + 1], ln[k + 1])
        col = "#1f77b4" if act[k + 1] else "#999"
        out.append(f'<line x1="{_f(a0)}" y1="{_f(b0)}" x2="{_f(a1)}" y2="{_f(b1)}" stroke="{col}"/>')
    if title:
        out.append(f'<text x="{MARGIN}" y="16" font-size="13">{escape(title)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
