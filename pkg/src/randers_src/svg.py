"""Self-contained SVG plots: contour maps, profiles and (t, x) diagrams."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np
from skimage.measure import find_contours

from .charts import Chart

SIZE = 480
MARGIN = 30
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")


class _Frame:
    """Affine map from data coordinates to SVG pixels (y up)."""

    def __init__(self, xlim, ylim, size: int = SIZE):
        self.x0, self.x1 = map(float, xlim)
        self.y0, self.y1 = map(float, ylim)
        span = max(self.x1 - self.x0, self.y1 - self.y0)
        self.scale = (size - 2 * MARGIN) / span if span > 0 else 1.0
        self.width = int(round(2 * MARGIN + self.scale * (self.x1 - self.x0)))
        self.height = int(round(2 * MARGIN + self.scale * (self.y1 - self.y0)))

    def px(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return MARGIN + self.scale * (x - self.x0), self.height - MARGIN - self.scale * (y - self.y0)


def _polyline(frame: _Frame, pts: np.ndarray, colour: str, width: float = 1.0) -> str:
    X, Y = frame.px(pts[:, 0], pts[:, 1])
    coords = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(X, Y))
    return f'<polyline points="{coords}" fill="none" stroke="{colour}" stroke-width="{width}"/>'


def _document(frame: _Frame, body: list[str], title: str) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{frame.width}" height="{frame.height}" '
            f'viewBox="0 0 {frame.width} {frame.height}">')
    X, Y = frame.px([frame.x0, frame.x1], [frame.y0, frame.y1])
    box = (f'<rect x="{X[0]:.2f}" y="{Y[1]:.2f}" width="{X[1] - X[0]:.2f}" height="{Y[0] - Y[1]:.2f}" '
           'fill="white" stroke="black" stroke-width="0.5"/>')
    label = f'<text x="{MARGIN}" y="{MARGIN - 10}" font-family="sans-serif" font-size="12">{escape(title)}</text>'
    return "\n".join([head, box, *body, label, "</svg>"]) + "\n"


def _index_to_data(chart: Chart, contour: np.ndarray) -> np.ndarray:
    lo = np.asarray(chart.lower, dtype=float)
    return lo + contour * np.asarray(chart.spacing, dtype=float)


def contour_svg(chart: Chart, values: np.ndarray, levels, overlay: np.ndarray | None = None,
                curves=(), title: str = "") -> str:
    """Level lines of a 2-D node field, with an optional node overlay and curves."""
    if chart.dim != 2:
        raise ValueError("contour plots need a 2-D chart")
    frame = _Frame((chart.lower[0], chart.upper[0]), (chart.lower[1], chart.upper[1]))
    vals = np.where(np.isfinite(values), values, np.nanmax(np.where(np.isfinite(values), values, np.nan)))
    body = []
    for k, level in enumerate(levels):
        for c in find_contours(vals, float(level)):
            body.append(_polyline(frame, _index_to_data(chart, c), PALETTE[k % len(PALETTE)]))
    if overlay is not None and overlay.any():
        pts = chart.nodes()[overlay]
        X, Y = frame.px(pts[:, 0], pts[:, 1])
        body += [f'<circle cx="{a:.2f}" cy="{b:.2f}" r="1.5" fill="#d62728"/>' for a, b in zip(X, Y)]
    for c in curves:
        body.append(_polyline(frame, np.asarray(c, dtype=float), "black", 1.5))
    return _document(frame, body, title)


def profile_svg(xs: np.ndarray, series: dict, marks=(), title: str = "") -> str:
    """Graphs of 1-D functions; ``marks`` are x positions drawn as dots on the first series."""
    ys = [np.asarray(v, dtype=float) for v in series.values()]
    finite = np.concatenate([y[np.isfinite(y)] for y in ys])
    lo, hi = (float(finite.min()), float(finite.max())) if len(finite) else (0.0, 1.0)
    frame = _Frame((xs[0], xs[-1]), (lo, hi if hi > lo else lo + 1.0))
    body = [_polyline(frame, np.column_stack([xs, y]), PALETTE[k % len(PALETTE)], 1.5)
            for k, y in enumerate(ys)]
    if len(marks):
        first = ys[0]
        for m in marks:
            X, Y = frame.px(m, np.interp(m, xs, first))
            body.append(f'<circle cx="{X:.2f}" cy="{Y:.2f}" r="3" fill="#d62728"/>')
    return _document(frame, body, title)


def tx_svg(xs: np.ndarray, times: np.ndarray, mask: np.ndarray | None = None, curves=(),
           title: str = "") -> str:
    """(t, x) diagram with x horizontal and t vertical.

    ``mask`` is a (len(times), len(xs)) node mask drawn as a shaded region; ``curves``
    are arrays with columns (t, x).
    """
    frame = _Frame((xs[0], xs[-1]), (times[0], times[-1]))
    body = []
    if mask is not None and mask.any():
        padded = np.pad(mask.astype(float), 1)
        dx, dt = xs[1] - xs[0], times[1] - times[0]
        for c in find_contours(padded, 0.5):
            X, Y = frame.px(xs[0] + (c[:, 1] - 1) * dx, times[0] + (c[:, 0] - 1) * dt)
            coords = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(X, Y))
            body.append(f'<polygon points="{coords}" fill="#c6dbef" stroke="#1f77b4" stroke-width="0.5"/>')
    for c in curves:
        c = np.asarray(c, dtype=float)
        body.append(_polyline(frame, c[:, [1, 0]], "#d62728", 1.5))
    return _document(frame, body, title)
