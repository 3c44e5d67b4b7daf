"""Coordinate charts, grids and smooth fields.

Every field is vectorised over leading axes: a point array of shape
``(..., dim)`` maps to values of shape ``(...)`` (scalar), ``(..., dim)``
(one-form) or ``(..., dim, dim)`` (metric).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator


class DomainError(ValueError):
    """A point lies outside the non-periodic bounds of a chart."""


@dataclass(frozen=True)
class Chart:
    """Rectangular coordinate patch with optional periodic axes.

    A periodic axis identifies ``lower`` with ``upper``; its grid has
    ``resolution`` nodes spaced ``extent / resolution`` apart, so the upper
    bound is not a node.  Non-periodic axes carry ``resolution`` nodes from
    ``lower`` to ``upper`` inclusive.
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    periodic: tuple[bool, ...] = ()
    resolution: tuple[int, ...] = ()

    def __post_init__(self):
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        upper = tuple(float(v) for v in np.atleast_1d(self.upper))
        dim = len(lower)
        if len(upper) != dim:
            raise ValueError("lower and upper must have the same length")
        periodic = tuple(bool(p) for p in self.periodic) or (False,) * dim
        resolution = tuple(int(n) for n in self.resolution) or (64,) * dim
        if len(periodic) != dim or len(resolution) != dim:
            raise ValueError("periodic/resolution must match the chart dimension")
        for lo, hi in zip(lower, upper):
            if not lo < hi:
                raise ValueError(f"degenerate bounds [{lo}, {hi}]")
        if min(resolution) < 2:
            raise ValueError("resolution must be at least 2 per axis")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "periodic", periodic)
        object.__setattr__(self, "resolution", resolution)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def extent(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.resolution

    @property
    def spacing(self) -> np.ndarray:
        return np.array(
            [
                ext / n if per else ext / (n - 1)
                for ext, n, per in zip(self.extent, self.resolution, self.periodic)
            ]
        )

    @property
    def default_step(self) -> np.ndarray:
        return 1e-4 * self.extent

    @property
    def any_periodic(self) -> bool:
        return any(self.periodic)

    def axes(self) -> list[np.ndarray]:
        out = []
        for lo, hi, n, per in zip(self.lower, self.upper, self.resolution, self.periodic):
            if per:
                out.append(lo + (hi - lo) * np.arange(n) / n)
            else:
                out.append(np.linspace(lo, hi, n))
        return out

    def nodes(self) -> np.ndarray:
        """All grid nodes, shape ``(*shape, dim)``, C order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(mesh, axis=-1)

    def normalize(self, x) -> np.ndarray:
        """Wrap periodic coordinates into ``[lower, upper)``."""
        x = np.array(x, dtype=float, copy=True)
        if not self.any_periodic:
            return x
        for i, per in enumerate(self.periodic):
            if per:
                lo = self.lower[i]
                x[..., i] = lo + np.mod(x[..., i] - lo, self.extent[i])
        return x

    def contains(self, x, margin=0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        margin = np.broadcast_to(np.asarray(margin, dtype=float), (self.dim,))
        ok = np.ones(x.shape[:-1], dtype=bool)
        slack = 1e-12 * self.extent
        for i, per in enumerate(self.periodic):
            if per:
                continue
            lo = self.lower[i] + margin[i] - slack[i]
            hi = self.upper[i] - margin[i] + slack[i]
            ok &= (x[..., i] >= lo) & (x[..., i] <= hi)
        return ok

    def check(self, x, margin=0.0) -> np.ndarray:
        """Normalise ``x`` and raise :class:`DomainError` if it is outside."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"expected points of dimension {self.dim}, got {x.shape}")
        if not np.all(self.contains(x, margin)):
            raise DomainError(f"point(s) outside chart bounds {self.lower}..{self.upper}")
        return self.normalize(x)

    def displacement(self, a, b) -> np.ndarray:
        """Shortest coordinate displacement from ``a`` to ``b`` (periodic aware)."""
        d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        for i, per in enumerate(self.periodic):
            if per:
                ext = self.extent[i]
                d[..., i] = d[..., i] - ext * np.round(d[..., i] / ext)
        return d

    def nearest_index(self, x) -> tuple[int, ...]:
        x = self.normalize(np.asarray(x, dtype=float))
        idx = []
        for i, (lo, n, per) in enumerate(zip(self.lower, self.resolution, self.periodic)):
            k = int(np.round((x[i] - lo) / self.spacing[i]))
            idx.append(k % n if per else int(np.clip(k, 0, n - 1)))
        return tuple(idx)

    def node(self, index) -> np.ndarray:
        return np.array([ax[i] for ax, i in zip(self.axes(), index)])

    def boundary_mask(self) -> np.ndarray:
        """Nodes on a non-periodic truncation boundary."""
        mask = np.zeros(self.shape, dtype=bool)
        for i, per in enumerate(self.periodic):
            if per:
                continue
            sl = [slice(None)] * self.dim
            sl[i] = 0
            mask[tuple(sl)] = True
            sl[i] = -1
            mask[tuple(sl)] = True
        return mask

    def with_bounds(self, lower, upper, resolution=None) -> "Chart":
        return Chart(tuple(lower), tuple(upper), self.periodic, tuple(resolution or self.resolution))

    def with_resolution(self, resolution) -> "Chart":
        res = tuple(np.broadcast_to(np.asarray(resolution, dtype=int), (self.dim,)))
        return Chart(self.lower, self.upper, self.periodic, res)

    def scaled(self, factor: float) -> "Chart":
        """Grow non-periodic bounds about the centre, keeping the cell size."""
        lower, upper, res = [], [], []
        for lo, hi, n, per, h in zip(self.lower, self.upper, self.resolution, self.periodic, self.spacing):
            if per:
                lower.append(lo)
                upper.append(hi)
                res.append(n)
                continue
            c, half = 0.5 * (lo + hi), 0.5 * (hi - lo) * factor
            lower.append(c - half)
            upper.append(c + half)
            res.append(int(round(2 * half / h)) + 1)
        return Chart(tuple(lower), tuple(upper), self.periodic, tuple(res))


class _Field:
    rank = 0

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], *, chart: Chart | None = None,
                 grid_sampled: bool = False):
        self._fn = fn
        self.chart = chart
        self.grid_sampled = grid_sampled

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.chart is not None:
            x = self.chart.normalize(x)
        return np.asarray(self._fn(x), dtype=float)

    @classmethod
    def from_samples(cls, chart: Chart, values):
        """Multilinear interpolation of node samples, periodic axes wrapped."""
        values = np.asarray(values, dtype=float)
        axes = chart.axes()
        for i, per in enumerate(chart.periodic):
            if per:
                axes[i] = np.append(axes[i], chart.upper[i])
                first = np.take(values, [0], axis=i)
                values = np.concatenate([values, first], axis=i)
        interp = RegularGridInterpolator(axes, values, method="linear", bounds_error=True)
        tail = values.shape[chart.dim:]

        def fn(x):
            x = np.asarray(x, dtype=float)
            flat = x.reshape(-1, chart.dim)
            return interp(flat).reshape(x.shape[:-1] + tail)

        return cls(fn, chart=chart, grid_sampled=True)


class ScalarField(_Field):
    """Scalar function on a chart, optionally with a closed-form gradient."""

    def __init__(self, fn, *, grad=None, chart=None, grid_sampled=False):
        super().__init__(fn, chart=chart, grid_sampled=grid_sampled)
        self._grad = grad

    @classmethod
    def constant(cls, value: float, dim: int) -> "ScalarField":
        return cls(lambda x: np.full(np.shape(x)[:-1], float(value)),
                   grad=lambda x: np.zeros(np.shape(x)))

    @property
    def has_gradient(self) -> bool:
        return self._grad is not None

    def gradient(self, x, step=None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self._grad is not None:
            xn = self.chart.normalize(x) if self.chart is not None else x
            return np.asarray(self._grad(xn), dtype=float) + np.zeros(x.shape)
        if step is None:
            step = 1e-4 * self.chart.extent if self.chart is not None else 1e-5
        return _central_gradient(self, x, step)


class OneFormField(_Field):
    rank = 1

    @classmethod
    def constant(cls, components) -> "OneFormField":
        c = np.asarray(components, dtype=float)
        return cls(lambda x: np.broadcast_to(c, np.shape(x)[:-1] + c.shape).copy())


class MetricField(_Field):
    rank = 2

    @classmethod
    def constant(cls, matrix) -> "MetricField":
        m = np.asarray(matrix, dtype=float)
        return cls(lambda x: np.broadcast_to(m, np.shape(x)[:-1] + m.shape).copy())

    @classmethod
    def euclidean(cls, dim: int) -> "MetricField":
        return cls.constant(np.eye(dim))


def _central_gradient(fn, x, step) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    dim = x.shape[-1]
    step = np.broadcast_to(np.asarray(step, dtype=float), (dim,))
    out = np.empty(x.shape)
    for i in range(dim):
        e = np.zeros(dim)
        e[i] = step[i]
        out[..., i] = (fn(x + e) - fn(x - e)) / (2 * step[i])
    return out


def fd_partials(fn, x, step) -> np.ndarray:
    """Fourth-order central differences of ``fn`` along every coordinate.

    Returns an array with a new leading axis of length ``dim``:
    ``out[k] = d fn / d x^k``.  All 4*dim stencil points are evaluated in a
    single vectorised call.
    """
    x = np.asarray(x, dtype=float)
    dim = x.shape[-1]
    h = float(step)
    offs = np.array([-2.0, -1.0, 1.0, 2.0]) * h
    eye = np.eye(dim)
    # (4, dim, ..., dim)
    shifts = offs[:, None, None] * eye[None, :, :]
    shifts = shifts.reshape((4, dim) + (1,) * (x.ndim - 1) + (dim,))
    pts = x[None, None] + shifts
    vals = np.asarray(fn(pts))
    w = np.array([1.0, -8.0, 8.0, -1.0]) / (12.0 * h)
    return np.tensordot(w, vals, axes=(0, 0))


def fd_directional(fn, x, v, step) -> np.ndarray:
    """Fourth-order central difference of ``fn`` along direction ``v``."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    h = float(step)
    offs = np.array([-2.0, -1.0, 1.0, 2.0]).reshape((4,) + (1,) * x.ndim) * h
    vals = np.asarray(fn(x[None] + offs * v[None]))
    w = np.array([1.0, -8.0, 8.0, -1.0]) / (12.0 * h)
    return np.tensordot(w, vals, axes=(0, 0))


def eval_metric(metric: MetricField, p, chart: Chart | None = None) -> np.ndarray:
    """Evaluate a metric field at one point and confirm it is SPD."""
    chart = chart or metric.chart
    p = np.asarray(p, dtype=float)
    if chart is not None:
        p = chart.check(p)
    m = metric(p)
    if not np.allclose(m, np.swapaxes(m, -1, -2), rtol=0, atol=1e-12 * max(1.0, np.abs(m).max())):
        raise ValueError("metric value is not symmetric")
    np.linalg.cholesky(m)
    return m


def diff_scalar(f: ScalarField, p, step=None, chart: Chart | None = None) -> np.ndarray:
    """Central finite-difference gradient of a scalar field (a covector)."""
    chart = chart or f.chart
    p = np.asarray(p, dtype=float)
    if step is None:
        if chart is None:
            raise ValueError("step is required when no chart is attached")
        step = chart.default_step
    step = np.broadcast_to(np.asarray(step, dtype=float), (p.shape[-1],))
    if np.any(step <= 0):
        raise ValueError("step must be positive")
    if chart is not None:
        chart.check(p, margin=step)
    return _central_gradient(f, p, step)


@dataclass(frozen=True)
class SampledCurve:
    """Polyline with per-node parameter values (unwrapped coordinates)."""

    points: np.ndarray
    params: np.ndarray = field(default=None)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        params = self.params
        if params is None:
            params = np.linspace(0.0, 1.0, len(pts)) if len(pts) > 1 else np.zeros(1)
        params = np.asarray(params, dtype=float)
        if params.shape != (len(pts),):
            raise ValueError("params must have one value per point")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "params", params)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def start(self) -> np.ndarray:
        return self.points[0]

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]

    def reversed(self) -> "SampledCurve":
        a, b = self.params[0], self.params[-1]
        return SampledCurve(self.points[::-1].copy(), (a + b - self.params[::-1]).copy())

    def euclidean_length(self) -> float:
        return float(np.linalg.norm(np.diff(self.points, axis=0), axis=1).sum())

    def resample(self, n: int) -> "SampledCurve":
        """Resample to ``n`` nodes equally spaced in Euclidean arclength."""
        seg = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
        s = np.concatenate([[0.0], np.cumsum(seg)])
        if s[-1] == 0.0:
            return SampledCurve(np.repeat(self.points[:1], n, axis=0),
                                np.linspace(self.params[0], self.params[-1], n))
        target = np.linspace(0.0, s[-1], n)
        pts = np.stack([np.interp(target, s, self.points[:, i]) for i in range(self.dim)], axis=1)
        params = np.interp(target, s, self.params)
        return SampledCurve(pts, params)

    def at(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.stack([np.interp(t, self.params, self.points[:, i]) for i in range(self.dim)], axis=-1)


def polyline_hausdorff(a: np.ndarray, b: np.ndarray, chart: Chart | None = None) -> float:
    """Hausdorff distance between two point samples (periodic aware)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if chart is not None:
        d = chart.displacement(a[:, None, :], b[None, :, :])
    else:
        d = b[None, :, :] - a[:, None, :]
    dist = np.linalg.norm(d, axis=-1)
    return float(max(dist.min(axis=1).max(), dist.min(axis=0).max()))


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def as_points(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if dim == 1 and x.shape[-1:] != (1,):
        x = x[..., None]
    return x


def grid_indices(shape: Sequence[int]) -> np.ndarray:
    return np.arange(int(np.prod(shape))).reshape(shape)
