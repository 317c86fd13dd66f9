"""Native SVG chart generation, no plotting dependency.

Byte-deterministic: fixed canvas geometry, fixed float formatting, and no
timestamps, so identical input produces identical files.  Three chart kinds
cover the experiment reports: multi-series line charts (optionally log-log),
bar charts with error bars, and function overlays (staircase target vs
network) with position markers.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

__all__ = ["emit_svg", "line_chart", "bar_chart", "function_overlay"]

WIDTH, HEIGHT = 960, 600
MARGIN = dict(left=80, right=200, top=56, bottom=64)
COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")
    )


def _ticks(lo: float, hi: float, log: bool):
    if log:
        lo_e = math.floor(math.log10(lo))
        hi_e = math.ceil(math.log10(hi))
        return [10.0**e for e in range(lo_e, hi_e + 1)]
    span = hi - lo
    if span <= 0:
        return [lo]
    step = 10.0 ** math.floor(math.log10(span / 4))
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= 6:
            step *= mult
            break
    first = math.ceil(lo / step) * step
    out = []
    v = first
    while v <= hi + 1e-12 * abs(span):
        out.append(v)
        v += step
    return out


class _Frame:
    """Maps data coordinates to pixel coordinates inside the plot area."""

    def __init__(self, x_lo, x_hi, y_lo, y_hi, logx=False, logy=False):
        self.logx, self.logy = logx, logy
        if logx:
            x_lo, x_hi = math.log10(x_lo), math.log10(x_hi)
        if logy:
            y_lo, y_hi = math.log10(y_lo), math.log10(y_hi)
        if x_hi <= x_lo:
            x_hi = x_lo + 1.0
        if y_hi <= y_lo:
            y_hi = y_lo + 1.0
        self.x_lo, self.x_hi, self.y_lo, self.y_hi = x_lo, x_hi, y_lo, y_hi
        self.px_lo = MARGIN["left"]
        self.px_hi = WIDTH - MARGIN["right"]
        self.py_lo = HEIGHT - MARGIN["bottom"]
        self.py_hi = MARGIN["top"]

    def x(self, v: float) -> float:
        if self.logx:
            v = math.log10(v)
        t = (v - self.x_lo) / (self.x_hi - self.x_lo)
        return self.px_lo + t * (self.px_hi - self.px_lo)

    def y(self, v: float) -> float:
        if self.logy:
            v = math.log10(v)
        t = (v - self.y_lo) / (self.y_hi - self.y_lo)
        return self.py_lo + t * (self.py_hi - self.py_lo)


def _header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="Helvetica,Arial,sans-serif">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<text x="{WIDTH / 2:.1f}" y="30" text-anchor="middle" font-size="18">{_escape(title)}</text>',
    ]


def _axes(frame: _Frame, x_label: str, y_label: str, draw_x_ticks: bool = True) -> list[str]:
    parts = []
    parts.append(
        f'<line x1="{frame.px_lo}" y1="{frame.py_lo}" x2="{frame.px_hi}" y2="{frame.py_lo}" '
        'stroke="#000" stroke-width="1.5"/>'
    )
    parts.append(
        f'<line x1="{frame.px_lo}" y1="{frame.py_lo}" x2="{frame.px_lo}" y2="{frame.py_hi}" '
        'stroke="#000" stroke-width="1.5"/>'
    )
    xt_lo = 10.0**frame.x_lo if frame.logx else frame.x_lo
    xt_hi = 10.0**frame.x_hi if frame.logx else frame.x_hi
    for v in _ticks(xt_lo, xt_hi, frame.logx) if draw_x_ticks else ():
        px = frame.x(v)
        if px < frame.px_lo - 0.5 or px > frame.px_hi + 0.5:
            continue
        parts.append(
            f'<line x1="{px:.2f}" y1="{frame.py_lo}" x2="{px:.2f}" y2="{frame.py_lo + 5}" stroke="#000"/>'
        )
        parts.append(
            f'<text x="{px:.2f}" y="{frame.py_lo + 20}" text-anchor="middle" font-size="12">{_fmt(v)}</text>'
        )
    yt_lo = 10.0**frame.y_lo if frame.logy else frame.y_lo
    yt_hi = 10.0**frame.y_hi if frame.logy else frame.y_hi
    for v in _ticks(yt_lo, yt_hi, frame.logy):
        py = frame.y(v)
        if py > frame.py_lo + 0.5 or py < frame.py_hi - 0.5:
            continue
        parts.append(
            f'<line x1="{frame.px_lo - 5}" y1="{py:.2f}" x2="{frame.px_lo}" y2="{py:.2f}" stroke="#000"/>'
        )
        parts.append(
            f'<text x="{frame.px_lo - 8}" y="{py + 4:.2f}" text-anchor="end" font-size="12">{_fmt(v)}</text>'
        )
        parts.append(
            f'<line x1="{frame.px_lo}" y1="{py:.2f}" x2="{frame.px_hi}" y2="{py:.2f}" '
            'stroke="#dddddd" stroke-width="0.5"/>'
        )
    parts.append(
        f'<text x="{(frame.px_lo + frame.px_hi) / 2:.1f}" y="{HEIGHT - 18}" text-anchor="middle" '
        f'font-size="14">{_escape(x_label)}</text>'
    )
    mid_y = (frame.py_lo + frame.py_hi) / 2
    parts.append(
        f'<text x="24" y="{mid_y:.1f}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 24 {mid_y:.1f})">{_escape(y_label)}</text>'
    )
    return parts


def _legend(labels_colors) -> list[str]:
    parts = []
    lx = WIDTH - MARGIN["right"] + 16
    ly = MARGIN["top"] + 10
    for i, (label, color) in enumerate(labels_colors):
        y = ly + 22 * i
        parts.append(f'<line x1="{lx}" y1="{y}" x2="{lx + 24}" y2="{y}" stroke="{color}" stroke-width="2.5"/>')
        parts.append(f'<text x="{lx + 30}" y="{y + 4}" font-size="12">{_escape(label)}</text>')
    return parts


def line_chart(series, title="", x_label="", y_label="", logx=False, logy=False) -> str:
    """Multi-series line chart.  ``series`` is a list of (label, x, y)."""
    if not series:
        raise ValueError("no series to plot")
    xs, ys = [], []
    floor = 1e-300
    for _, x, y in series:
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if x.size == 0:
            raise ValueError("empty series")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("series contain non-finite values")
        xs.append(x)
        ys.append(y)
    all_x = np.concatenate(xs)
    all_y = np.concatenate(ys)
    if logx:
        all_x = all_x[all_x > floor]
    if logy:
        all_y = all_y[all_y > floor]
        if all_y.size == 0:
            raise ValueError("log-scale y axis needs positive values")
    frame = _Frame(all_x.min(), all_x.max(), all_y.min(), all_y.max(), logx, logy)
    parts = _header(title) + _axes(frame, x_label, y_label)
    labels = []
    for i, (label, x, y) in enumerate(zip([s[0] for s in series], xs, ys)):
        color = COLORS[i % len(COLORS)]
        labels.append((label, color))
        pts = []
        for xv, yv in zip(x, y):
            if (logx and xv <= floor) or (logy and yv <= floor):
                continue
            pts.append(f"{frame.x(xv):.2f},{frame.y(yv):.2f}")
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{" ".join(pts)}"/>'
        )
    parts += _legend(labels)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def bar_chart(labels, means, errors=None, title="", x_label="", y_label="") -> str:
    """Bar chart with optional symmetric error bars."""
    means = np.asarray(means, float)
    if means.size == 0:
        raise ValueError("no bars to plot")
    errors = np.zeros_like(means) if errors is None else np.asarray(errors, float)
    y_hi = float(np.max(means + errors)) * 1.15
    frame = _Frame(0.0, float(means.size), 0.0, max(y_hi, 1e-12))
    # Bars carry their own labels, so the numeric x ticks are suppressed.
    parts = _header(title) + _axes(frame, x_label, y_label, draw_x_ticks=False)
    width = (frame.px_hi - frame.px_lo) / means.size
    for i, (label, mean, err) in enumerate(zip(labels, means, errors)):
        x0 = frame.px_lo + i * width + 0.18 * width
        x1 = frame.px_lo + (i + 1) * width - 0.18 * width
        y0 = frame.y(0.0)
        y1 = frame.y(mean)
        parts.append(
            f'<rect x="{x0:.2f}" y="{y1:.2f}" width="{x1 - x0:.2f}" height="{y0 - y1:.2f}" '
            f'fill="{COLORS[0]}" fill-opacity="0.85"/>'
        )
        if err > 0:
            cx = (x0 + x1) / 2
            parts.append(
                f'<line x1="{cx:.2f}" y1="{frame.y(mean - err):.2f}" x2="{cx:.2f}" '
                f'y2="{frame.y(mean + err):.2f}" stroke="#000" stroke-width="1.5"/>'
            )
            for yy in (mean - err, mean + err):
                parts.append(
                    f'<line x1="{cx - 5:.2f}" y1="{frame.y(yy):.2f}" x2="{cx + 5:.2f}" '
                    f'y2="{frame.y(yy):.2f}" stroke="#000" stroke-width="1.5"/>'
                )
        parts.append(
            f'<text x="{(x0 + x1) / 2:.2f}" y="{frame.py_lo + 20}" text-anchor="middle" '
            f'font-size="12">{_escape(str(label))}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def function_overlay(target, curves, positions=None, title="", n_grid: int = 2001) -> str:
    """Target staircase (as a step path) against one or more fitted curves,
    with optional neuron-position tick marks along the bottom."""
    grid = np.linspace(0.0, 1.0, n_grid)
    tv = np.asarray(target(grid), float)
    ys = [tv] + [np.asarray(fn(grid), float) for _, fn in curves]
    y_lo = min(float(np.min(y)) for y in ys)
    y_hi = max(float(np.max(y)) for y in ys)
    pad = 0.08 * max(y_hi - y_lo, 1e-12)
    frame = _Frame(0.0, 1.0, y_lo - pad, y_hi + pad)
    parts = _header(title) + _axes(frame, "input", "value")
    labels = [("target", COLORS[0])]
    pts = " ".join(f"{frame.x(x):.2f},{frame.y(y):.2f}" for x, y in zip(grid, tv))
    parts.append(f'<polyline fill="none" stroke="{COLORS[0]}" stroke-width="2" points="{pts}"/>')
    for i, (label, _) in enumerate(curves):
        color = COLORS[(i + 1) % len(COLORS)]
        labels.append((label, color))
        pts = " ".join(f"{frame.x(x):.2f},{frame.y(y):.2f}" for x, y in zip(grid, ys[i + 1]))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
    if positions is not None:
        for u in np.asarray(positions, float).ravel():
            px = frame.x(min(max(u, 0.0), 1.0))
            parts.append(
                f'<line x1="{px:.2f}" y1="{frame.py_lo - 10}" x2="{px:.2f}" y2="{frame.py_lo}" '
                'stroke="#555" stroke-width="1" stroke-dasharray="2,2"/>'
            )
    parts += _legend(labels)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_svg(series, style=None, path=None) -> str:
    """Render a chart described by ``series`` and a ``style`` mapping.

    style keys: kind ("line" | "bar"), title, x_label, y_label, logx, logy,
    plus bar-chart labels/errors.  Returns the SVG text; writes it to
    ``path`` when given.  Raises on empty input.
    """
    style = dict(style or {})
    kind = style.pop("kind", "line")
    if kind == "line":
        text = line_chart(series, **style)
    elif kind == "bar":
        labels = style.pop("labels")
        errors = style.pop("errors", None)
        text = bar_chart(labels, series, errors=errors, **style)
    else:
        raise ValueError(f"unknown chart kind {kind!r}")
    if path is not None:
        Path(path).write_text(text)
    return text
