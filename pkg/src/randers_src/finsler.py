"""Randers norms, the fundamental tensor and curve functionals."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .charts import Chart, MetricField, OneFormField, SampledCurve, fd_partials

# Gauss-Legendre 2-point nodes on [0, 1]
GAUSS2 = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])


class UndefinedAtZero(ValueError):
    """The Finsler norm is not smooth on the zero section."""


@dataclass(frozen=True, eq=False)
class RandersData:
    """Riemannian metric ``h`` plus one-form ``omega`` with h-norm below one.

    ``fd_step`` is the base-point step used for the fourth-order finite
    differences of the geodesic spray; ``seams`` lists coordinate planes
    ``(axis, value)`` where the fields are only piecewise smooth.
    ``reduced`` optionally supplies ``h - omega (x) omega`` in closed form;
    the norm then avoids the cancellation in ``alpha + omega(v)`` when
    ``omega(v) < 0`` by using ``(alpha^2 - omega(v)^2) / (alpha - omega(v))``.
    """

    h: MetricField
    omega: OneFormField
    chart: Chart
    fd_step: float = 1e-3
    seams: tuple[tuple[int, float], ...] = ()
    name: str = ""
    reduced: MetricField | None = None

    @property
    def dim(self) -> int:
        return self.chart.dim

    def fields(self, x):
        x = self.chart.normalize(np.asarray(x, dtype=float))
        return self.h(x), self.omega(x)

    def with_chart(self, chart: Chart) -> "RandersData":
        return RandersData(self.h, self.omega, chart, self.fd_step, self.seams, self.name, self.reduced)

    def riemannian(self) -> "RandersData":
        """Same ``h`` with the one-form dropped."""
        zero = OneFormField(lambda x: np.zeros(np.shape(x)))
        return RandersData(self.h, zero, self.chart, self.fd_step, self.seams, self.name + "-h")

    def norm(self, reverse: bool = False) -> "FinslerNorm":
        return FinslerNorm(self, reverse)


@dataclass(frozen=True, eq=False)
class FinslerNorm:
    """A Randers norm with an orientation; ``reverse`` flips the one-form."""

    data: RandersData
    reverse: bool = False
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def chart(self) -> Chart:
        return self.data.chart

    @property
    def dim(self) -> int:
        return self.data.dim

    def reversed(self) -> "FinslerNorm":
        key = "reversed"
        if key not in self._cache:
            other = FinslerNorm(self.data, not self.reverse)
            other._cache[key] = self
            self._cache[key] = other
        return self._cache[key]

    def _split(self, x, v):
        h, w = self.data.fields(x)
        if self.reverse:
            w = -w
        v = np.asarray(v, dtype=float)
        hv = np.einsum("...ij,...j->...i", h, v)
        alpha = np.sqrt(np.maximum(np.einsum("...i,...i->...", v, hv), 0.0))
        beta = np.einsum("...i,...i->...", w, v)
        return h, w, hv, alpha, beta

    def __call__(self, x, v) -> np.ndarray:
        _, _, _, alpha, beta = self._split(x, v)
        if self.data.reduced is None:
            return alpha + beta
        v = np.asarray(v, dtype=float)
        a = self.data.reduced(self.chart.normalize(np.asarray(x, dtype=float)))
        q = np.einsum("...i,...ij,...j->...", v, a, v)
        with np.errstate(divide="ignore", invalid="ignore"):
            stable = q / (alpha - beta)
        return np.where(beta >= 0, alpha + beta, stable)

    def riemannian_norm(self, x, v) -> np.ndarray:
        return self._split(x, v)[3]

    def grad_v(self, x, v) -> np.ndarray:
        """Fiber gradient dF/dv (closed form)."""
        _, w, hv, alpha, _ = self._split(x, v)
        if np.any(alpha == 0):
            raise UndefinedAtZero("fiber derivative requested at v = 0")
        return hv / alpha[..., None] + w

    def tensor(self, x, v) -> np.ndarray:
        """Closed-form Randers fundamental tensor ``(F/alpha)(h - l l) + F_v F_v``."""
        h, w, hv, alpha, beta = self._split(x, v)
        if np.any(alpha == 0):
            raise UndefinedAtZero("fundamental tensor requested at v = 0")
        l = hv / alpha[..., None]
        fv = l + w
        F = alpha + beta
        return (F / alpha)[..., None, None] * (h - l[..., :, None] * l[..., None, :]) \
            + fv[..., :, None] * fv[..., None, :]

    def grad_x(self, x, v) -> np.ndarray:
        """Base-point gradient dF/dx by fourth-order central differences."""
        v = np.asarray(v, dtype=float)
        parts = fd_partials(lambda y: self(y, v[None, None]), x, self.data.fd_step)
        return np.moveaxis(parts, 0, -1)


def randers_norm(F: FinslerNorm, x, v) -> np.ndarray:
    """``sqrt(h(v,v)) +/- omega(v)``; the sign follows the orientation."""
    x = F.chart.check(np.asarray(x, dtype=float))
    return F(x, v)


def fundamental_tensor(F: FinslerNorm, x, v, rel_step: float = 1e-5) -> np.ndarray:
    """Half the fiber Hessian of F^2, by central second differences.

    The step is ``rel_step * |v|``.  Off-diagonal entries are computed once
    and mirrored, so the result is exactly symmetric.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    scale = np.linalg.norm(v)
    if scale == 0.0:
        raise UndefinedAtZero("fundamental tensor is undefined at v = 0")
    x = F.chart.check(x)
    dim = v.shape[-1]
    eps = rel_step * scale
    E = np.eye(dim) * eps

    def F2(w):
        return F(x, w) ** 2

    g = np.empty((dim, dim))
    f0 = F2(v)
    for i in range(dim):
        g[i, i] = 0.5 * (F2(v + E[i]) - 2.0 * f0 + F2(v - E[i])) / eps**2
        for j in range(i + 1, dim):
            val = (F2(v + E[i] + E[j]) - F2(v + E[i] - E[j])
                   - F2(v - E[i] + E[j]) + F2(v - E[i] - E[j])) / (8.0 * eps**2)
            g[i, j] = g[j, i] = val
    return g


def _segment_gauss(F: FinslerNorm, pts: np.ndarray):
    """Gauss points and displacements of every polyline segment."""
    delta = np.diff(pts, axis=0)
    gp = pts[:-1, None, :] + GAUSS2[None, :, None] * delta[:, None, :]
    return gp, delta


def segment_lengths(F: FinslerNorm, points) -> np.ndarray:
    """Two-point Gauss length of each straight segment of a polyline."""
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return np.zeros(0)
    gp, delta = _segment_gauss(F, pts)
    vals = F(gp, np.broadcast_to(delta[:, None, :], gp.shape))
    return 0.5 * vals.sum(axis=1)


def curve_length(F: FinslerNorm, curve: SampledCurve) -> float:
    """Finsler length of a polyline (per-segment 2-point Gauss rule)."""
    return float(segment_lengths(F, curve.points).sum())


def curve_energy(F: FinslerNorm, curve: SampledCurve) -> float:
    """Integral of F(gamma')^2 over the parameter interval."""
    pts = curve.points
    ds = np.diff(curve.params)
    if len(pts) < 2:
        return 0.0
    if np.any(ds <= 0):
        raise ValueError("curve parameters must be strictly increasing")
    gp, delta = _segment_gauss(F, pts)
    vel = delta / ds[:, None]
    vals = F(gp, np.broadcast_to(vel[:, None, :], gp.shape)) ** 2
    return float((0.5 * vals.sum(axis=1) * ds).sum())


@dataclass(frozen=True)
class ValidityReport:
    max_omega_norm: float
    min_h_eigenvalue: float
    valid: bool
    worst_point: tuple


def omega_h_norm(data: RandersData, x) -> np.ndarray:
    h, w = data.fields(x)
    return np.sqrt(np.einsum("...i,...i->...", w, np.linalg.solve(h, w[..., None])[..., 0]))


def validate(data: RandersData, samples: int = 64) -> ValidityReport:
    """Sample ``samples`` points per axis and check the Randers condition."""
    chart = data.chart
    axes = [np.linspace(lo, hi, samples, endpoint=not per)
            for lo, hi, per in zip(chart.lower, chart.upper, chart.periodic)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, chart.dim)
    h, _ = data.fields(pts)
    norms = omega_h_norm(data, pts)
    eig = np.linalg.eigvalsh(h).min(axis=-1)
    k = int(np.argmax(norms))
    return ValidityReport(
        max_omega_norm=float(norms.max()),
        min_h_eigenvalue=float(eig.min()),
        valid=bool(norms.max() < 1.0 and eig.min() > 0.0),
        worst_point=tuple(float(c) for c in pts[k]),
    )
