"""Minimal self-contained SVG line charts.

Enough plotting for run diagnostics without pulling in a plotting stack:
straight polylines on linear or log10 axes, tick labels, and a legend.
Output is deterministic for identical inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

__all__ = ["Series", "line_chart"]

_COLORS = ("#1f6fb2", "#d1495b", "#3a7d44", "#8e5fa8", "#c77d2e", "#38808f")
LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class Series:
    xs: Sequence[float]
    ys: Sequence[float]
    label: str


def _ticks(lo: float, hi: float, want: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(want - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-9 * step:
        out.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return out or [lo, hi]


def _fmt(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.1e}"
    return f"{v:g}"


def line_chart(
    path: str | Path,
    series: Sequence[Series],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    logy: bool = False,
    width: int = 720,
    height: int = 440,
) -> None:
    """Write a line chart of the given series to ``path`` as SVG.

    With ``logy`` the y axis is log10 and nonpositive values are dropped
    from the drawing (a fully nonpositive series is skipped).
    """
    series = [s for s in series if len(s.xs) > 0]
    if not series:
        raise ValueError("nothing to plot")
    ml, mr, mt, mb = 70, 20, 40, 55
    pw, ph = width - ml - mr, height - mt - mb

    pts = []
    for s in series:
        for x, y in zip(s.xs, s.ys):
            if logy and y <= LOG_FLOOR:
                continue
            pts.append((float(x), math.log10(y) if logy else float(y)))
    if not pts:
        raise ValueError("no drawable points (log axis with nonpositive data?)")
    x_lo = min(p[0] for p in pts)
    x_hi = max(p[0] for p in pts)
    y_lo = min(p[1] for p in pts)
    y_hi = max(p[1] for p in pts)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def sx(x: float) -> float:
        return ml + (x - x_lo) / (x_hi - x_lo) * pw

    def sy(y: float) -> float:
        return mt + (1.0 - (y - y_lo) / (y_hi - y_lo)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    if title:
        out.append(
            f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" '
            f'font-size="15">{title}</text>'
        )
    for xv in _ticks(x_lo, x_hi):
        px = sx(xv)
        out.append(
            f'<line x1="{px:.1f}" y1="{mt + ph}" x2="{px:.1f}" y2="{mt + ph + 5}" stroke="#444"/>'
        )
        out.append(
            f'<text x="{px:.1f}" y="{mt + ph + 18}" text-anchor="middle">{_fmt(xv)}</text>'
        )
    for yv in _ticks(y_lo, y_hi):
        py = sy(yv)
        label = f"1e{yv:g}" if logy else _fmt(yv)
        out.append(
            f'<line x1="{ml - 5}" y1="{py:.1f}" x2="{ml}" y2="{py:.1f}" stroke="#444"/>'
        )
        out.append(
            f'<line x1="{ml}" y1="{py:.1f}" x2="{ml + pw}" y2="{py:.1f}" '
            f'stroke="#ddd" stroke-width="0.5"/>'
        )
        out.append(
            f'<text x="{ml - 8}" y="{py + 4:.1f}" text-anchor="end">{label}</text>'
        )
    if xlabel:
        out.append(
            f'<text x="{ml + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">{xlabel}</text>'
        )
    if ylabel:
        out.append(
            f'<text x="18" y="{mt + ph / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 18 {mt + ph / 2:.1f})">{ylabel}</text>'
        )

    for k, s in enumerate(series):
        color = _COLORS[k % len(_COLORS)]
        chunk: list[str] = []
        chunks: list[list[str]] = [chunk]
        for x, y in zip(s.xs, s.ys):
            if logy and y <= LOG_FLOOR:
                if chunk:
                    chunk = []
                    chunks.append(chunk)
                continue
            yy = math.log10(y) if logy else float(y)
            chunk.append(f"{sx(float(x)):.2f},{sy(yy):.2f}")
        for ch in chunks:
            if len(ch) >= 2:
                out.append(
                    f'<polyline points="{" ".join(ch)}" fill="none" '
                    f'stroke="{color}" stroke-width="1.6"/>'
                )
            elif len(ch) == 1:
                cx, cy = ch[0].split(",")
                out.append(f'<circle cx="{cx}" cy="{cy}" r="2.5" fill="{color}"/>')
        ly = mt + 16 + 16 * k
        out.append(
            f'<line x1="{ml + pw - 150}" y1="{ly - 4}" x2="{ml + pw - 126}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="3"/>'
        )
        out.append(f'<text x="{ml + pw - 120}" y="{ly}">{s.label}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
