"""Hand-rolled static SVG line charts.

Text output only, fixed float formatting, no timestamps or randomness:
identical inputs produce byte-identical files.  A chart holds the
observed series, optionally a forecast overlay in a dashed second
style, and optionally a training-loss panel below.
"""
from __future__ import annotations

import math

from .errors import DataError

WIDTH = 960
CHART_H = 420
LOSS_H = 220
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 76, 24, 44, 56

SERIES_STYLE = 'fill="none" stroke="#1f6fb4" stroke-width="1.6"'
FORECAST_STYLE = 'fill="none" stroke="#d04a35" stroke-width="1.6" stroke-dasharray="6,4"'
LOSS_STYLE = 'fill="none" stroke="#2f8f4e" stroke-width="1.4"'


def _f(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    """Round tick positions covering [lo, hi]; deterministic."""
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        step = mult * mag
        if step >= raw:
            break
    first = math.floor(lo / step) * step
    ticks = []
    t = first
    while t <= hi + step * 0.5:
        ticks.append(round(t, 10))
        t += step
    return ticks


def _polyline(xs: list[float], ys: list[float], style: str) -> str:
    pts = " ".join(f"{_f(x)},{_f(y)}" for x, y in zip(xs, ys))
    return f'<polyline {style} points="{pts}"/>'


def _panel(lines: list[str], x_labels: list[tuple[float, str]],
           values_lo: float, values_hi: float, top: float, height: float,
           x_of, y_of, title: str) -> None:
    left, right = MARGIN_L, WIDTH - MARGIN_R
    bottom = top + height
    lines.append(f'<text x="{_f(left)}" y="{_f(top - 12)}" class="title">{title}</text>')
    lines.append(f'<rect x="{_f(left)}" y="{_f(top)}" width="{_f(right - left)}" '
                 f'height="{_f(height)}" class="frame"/>')
    for tick in _ticks(values_lo, values_hi):
        if not values_lo <= tick <= values_hi:
            continue
        y = y_of(tick)
        lines.append(f'<line x1="{_f(left)}" y1="{_f(y)}" x2="{_f(right)}" '
                     f'y2="{_f(y)}" class="grid"/>')
        label = f"{tick:g}"
        lines.append(f'<text x="{_f(left - 8)}" y="{_f(y + 4)}" '
                     f'class="ylab">{label}</text>')
    for x, label in x_labels:
        lines.append(f'<line x1="{_f(x)}" y1="{_f(bottom)}" x2="{_f(x)}" '
                     f'y2="{_f(bottom + 5)}" class="tick"/>')
        lines.append(f'<text x="{_f(x)}" y="{_f(bottom + 20)}" '
                     f'class="xlab">{label}</text>')


def render_chart(series: list[tuple[str, float]],
                 forecast: list[tuple[str, float]] | None = None,
                 loss: list[tuple[int, float]] | None = None,
                 title: str = "Monthly fire spots") -> str:
    """Build the complete SVG document as a string."""
    if not series:
        raise DataError("cannot plot an empty series")
    total_h = CHART_H + (LOSS_H if loss else 0)
    left, right = MARGIN_L, WIDTH - MARGIN_R
    top = MARGIN_T
    plot_h = CHART_H - MARGIN_T - MARGIN_B

    months = [m for m, _ in series]
    values = [v for _, v in series]
    fc = forecast or []
    n_total = len(series) + len(fc)
    all_vals = values + [v for _, v in fc]
    v_lo = min(0.0, min(all_vals))
    v_hi = max(all_vals)
    if v_hi <= v_lo:
        v_hi = v_lo + 1.0
    pad = (v_hi - v_lo) * 0.05
    v_hi += pad

    def x_of(i: float) -> float:
        if n_total == 1:
            return left
        return left + (right - left) * i / (n_total - 1)

    def y_of(v: float) -> float:
        return top + plot_h * (1.0 - (v - v_lo) / (v_hi - v_lo))

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{total_h}" viewBox="0 0 {WIDTH} {total_h}">',
        "<style>",
        "text { font-family: sans-serif; font-size: 12px; fill: #333; }",
        ".title { font-size: 15px; font-weight: bold; }",
        ".ylab { text-anchor: end; }",
        ".xlab { text-anchor: middle; }",
        ".frame { fill: none; stroke: #999; stroke-width: 1; }",
        ".grid { stroke: #ddd; stroke-width: 1; }",
        ".tick { stroke: #999; stroke-width: 1; }",
        "</style>",
        f'<rect x="0" y="0" width="{WIDTH}" height="{total_h}" fill="#ffffff"/>',
    ]

    all_months = months + [m for m, _ in fc]
    n_lab = min(8, n_total)
    label_idx = sorted({round(i * (n_total - 1) / max(1, n_lab - 1))
                        for i in range(n_lab)})
    x_labels = [(x_of(i), all_months[i]) for i in label_idx]
    _panel(lines, x_labels, v_lo, v_hi, top, plot_h, x_of, y_of, title)

    lines.append(_polyline([x_of(i) for i in range(len(series))],
                           [y_of(v) for v in values], SERIES_STYLE))
    if fc:
        idx = list(range(len(series) - 1, n_total))
        joined = [values[-1]] + [v for _, v in fc]
        lines.append(_polyline([x_of(i) for i in idx],
                               [y_of(v) for v in joined], FORECAST_STYLE))
        lx = right - 170
        lines.append(f'<line x1="{_f(lx)}" y1="{_f(top + 10)}" x2="{_f(lx + 28)}" '
                     f'y2="{_f(top + 10)}" stroke="#1f6fb4" stroke-width="1.6"/>')
        lines.append(f'<text x="{_f(lx + 34)}" y="{_f(top + 14)}">observed</text>')
        lines.append(f'<line x1="{_f(lx)}" y1="{_f(top + 28)}" x2="{_f(lx + 28)}" '
                     f'y2="{_f(top + 28)}" stroke="#d04a35" stroke-width="1.6" '
                     f'stroke-dasharray="6,4"/>')
        lines.append(f'<text x="{_f(lx + 34)}" y="{_f(top + 32)}">forecast</text>')

    if loss:
        l_top = CHART_H + MARGIN_T
        l_h = LOSS_H - MARGIN_T - MARGIN_B
        epochs = [e for e, _ in loss]
        lvals = [v for _, v in loss]
        e_lo, e_hi = min(epochs), max(epochs)
        lv_lo, lv_hi = 0.0, max(lvals)
        if lv_hi <= lv_lo:
            lv_hi = lv_lo + 1.0
        lv_hi *= 1.05

        def lx_of(e: float) -> float:
            if e_hi == e_lo:
                return left
            return left + (right - left) * (e - e_lo) / (e_hi - e_lo)

        def ly_of(v: float) -> float:
            return l_top + l_h * (1.0 - (v - lv_lo) / (lv_hi - lv_lo))

        n_el = min(6, len(set(epochs)))
        el_idx = sorted({round(e_lo + i * (e_hi - e_lo) / max(1, n_el - 1))
                         for i in range(n_el)})
        _panel(lines, [(lx_of(e), str(e)) for e in el_idx], lv_lo, lv_hi,
               l_top, l_h, lx_of, ly_of, "Training loss (normalized)")
        lines.append(_polyline([lx_of(e) for e in epochs],
                               [ly_of(v) for v in lvals], LOSS_STYLE))

    lines.append("</svg>")
    return "\n".join(lines) + "\n"
