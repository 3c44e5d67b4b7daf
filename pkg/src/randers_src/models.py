"""Field definitions of the shipped scenarios."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from .charts import Chart, MetricField, OneFormField, ScalarField, smooth_step
from .causality import RegionMask
from .finsler import RandersData
from .stationary import StationaryData


def euclidean_data(chart: Chart, one_form=None, name: str = "flat") -> RandersData:
    w = np.zeros(chart.dim) if one_form is None else np.asarray(one_form, dtype=float)
    return RandersData(MetricField.euclidean(chart.dim), OneFormField.constant(w), chart, name=name)


def flat(res: int = 81, half_width: float = 2.0) -> RandersData:
    chart = Chart((-half_width,) * 2, (half_width,) * 2, resolution=(res, res))
    return euclidean_data(chart, name="flat")


def constant_form(a: float = 0.5, res: int = 81, half_width: float = 2.0) -> RandersData:
    """Euclidean plane with the exact one-form ``a dx``."""
    chart = Chart((-half_width,) * 2, (half_width,) * 2, resolution=(res, res))
    return euclidean_data(chart, [a, 0.0], name=f"constant-form(a={a:g})")


def linear_potential(a: float, dim: int = 2) -> ScalarField:
    """``f = a x`` with ``df = a dx``."""
    c = np.zeros(dim)
    c[0] = a
    return ScalarField(lambda x: a * np.asarray(x)[..., 0], grad=lambda x: np.broadcast_to(c, np.shape(x)))


# ----------------------------------------------------------------------------
# strip glued into a cylinder

STRIP_HALF_WIDTH = 6.0


def strip_bump(x, centre: float):
    """Smooth bump, 1 for |x - centre| <= 1 and 0 for |x - centre| >= 2.

    The distance to the centre is taken on the circle of length 12, so the
    bump is smooth across the identification x = -6 ~ 6.
    """
    period = 2 * STRIP_HALF_WIDTH
    d = np.abs((np.asarray(x) - centre + 0.5 * period) % period - 0.5 * period)
    return smooth_step(2.0 - d)


def _strip_omega(x):
    x = np.asarray(x, dtype=float)
    mu = strip_bump(x[..., 0], 3.0) - strip_bump(x[..., 0], -3.0)
    y = x[..., 1]
    out = np.zeros(x.shape)
    out[..., 1] = mu * y**2 / (1.0 + y**2)
    return out


def strip_cylinder(height: float = 8.0, res_x: int = 48, cell: float | None = None) -> RandersData:
    """Cylinder ``[-6, 6) x [-height, height]`` with the bump one-form in dy."""
    h = cell if cell is not None else 2 * STRIP_HALF_WIDTH / res_x
    ny = int(round(2 * height / h)) + 1
    nx = int(round(2 * STRIP_HALF_WIDTH / h))
    chart = Chart((-STRIP_HALF_WIDTH, -height), (STRIP_HALF_WIDTH, height), (True, False), (nx, ny))
    return RandersData(MetricField.euclidean(2), OneFormField(_strip_omega), chart, name="strip-cylinder")


# ----------------------------------------------------------------------------
# a hyperbola as a spacelike section of 1+1 Minkowski space

def hyperbola_section(extent: float = 20.0, res: int = 401) -> StationaryData:
    """Splitting of 1+1 Minkowski space by the hyperbola-branch section.

    In the branch parameter theta: ``beta = 1``, ``g0 = 1`` and
    ``omega = -sinh|theta| dtheta``; the fields have a corner at theta = 0.
    """
    chart = Chart((-extent,), (extent,), resolution=(res,))
    one = ScalarField(lambda x: np.ones(np.shape(x)[:-1]), grad=lambda x: np.zeros(np.shape(x)))
    g0 = MetricField.constant([[1.0]])
    omega = OneFormField(lambda x: -np.sinh(np.abs(np.asarray(x))))
    return StationaryData(one, g0, omega, chart, seams=((0, 0.0),), name="hyperbola-section")


def hyperbola_flat_section() -> ScalarField:
    """Graph function of the slice t = 0 over the hyperbola section."""
    def f(x):
        th = np.asarray(x)[..., 0]
        return -np.sign(th) * (np.cosh(th) - 1.0)

    return ScalarField(f, grad=lambda x: -np.sinh(np.abs(np.asarray(x))))


def hyperbola_exact_length(extent: float) -> float:
    """Fermat length of [-extent, extent]: the integrand is exp(-|theta|)."""
    return 2.0 * (1.0 - np.exp(-extent))


# ----------------------------------------------------------------------------
# a sequence that is Cauchy for the symmetrized distance

@dataclass(frozen=True)
class CauchyCurve:
    n: int
    amplitude: float
    eps: float
    alpha: float
    width: float
    samples: np.ndarray  # (m, 2) points at arclength s
    arclength: np.ndarray
    tangents: np.ndarray


def _curve_amplitude(length: float = 2.0) -> float:
    """Amplitude c with arclength of (c sin(pi u), u), u in [0, 1], equal to length."""
    u = np.linspace(0.0, 1.0, 20001)

    def arc(c):
        return np.trapezoid(np.sqrt(1.0 + (c * np.pi * np.cos(np.pi * u)) ** 2), u) - length

    return brentq(arc, 0.0, 2.0, xtol=1e-14)


def cauchy_curves(n_max: int = 6, m: int = 40001):
    """Curves from p_n = (0, n) to p_{n+1} and their mirror images."""
    c = _curve_amplitude()
    u = np.linspace(0.0, 1.0, m)
    curves = []
    for n in range(1, n_max + 1):
        pts = np.column_stack([c * np.sin(np.pi * u), n + u])
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        s = np.concatenate([[0.0], np.cumsum(seg)])
        s *= 2.0 / s[-1]
        der = np.column_stack([c * np.pi * np.cos(np.pi * u), np.ones_like(u)])
        tang = der / np.linalg.norm(der, axis=1, keepdims=True)
        eps = 2.0 ** (-n - 3)
        curves.append(CauchyCurve(n, c, eps, 1.0 - eps, eps / 8.0, pts, s, tang))
    return curves


def _cauchy_omega_factory(curves):
    trees = []
    for cv in curves:
        for sign, mirror in ((-1.0, 1.0), (1.0, -1.0)):
            pts = cv.samples * np.array([mirror, 1.0])
            tang = cv.tangents * np.array([mirror, 1.0])
            pad = 2 * cv.width + 0.01
            box = (pts.min(axis=0) - pad, pts.max(axis=0) + pad)
            trees.append((cKDTree(pts), pts, tang, cv, sign, box))

    def omega(x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, 2)
        out = np.zeros_like(flat)
        for tree, pts, tang, cv, sign, (lo, hi) in trees:
            inside = np.flatnonzero(np.all((flat >= lo) & (flat <= hi), axis=1))
            if len(inside) == 0:
                continue
            dist, idx = tree.query(flat[inside], distance_upper_bound=2 * cv.width)
            ok = np.isfinite(dist)
            if not ok.any():
                continue
            hit = inside[ok]
            q = flat[hit]
            k = idx[ok]
            # project onto the neighbouring chord for sub-sample accuracy
            k0 = np.clip(k - 1, 0, len(pts) - 2)
            best_d = np.full(len(q), np.inf)
            best_s = np.zeros(len(q))
            best_t = np.zeros((len(q), 2))
            for j in (k0, k0 + 1):
                j = np.clip(j, 0, len(pts) - 2)
                a, b = pts[j], pts[j + 1]
                ab = b - a
                lam = np.clip(np.einsum("ij,ij->i", q - a, ab) / np.einsum("ij,ij->i", ab, ab), 0, 1)
                foot = a + lam[:, None] * ab
                d = np.linalg.norm(q - foot, axis=1)
                better = d < best_d
                best_d = np.where(better, d, best_d)
                s = cv.arclength[j] + lam * (cv.arclength[j + 1] - cv.arclength[j])
                best_s = np.where(better, s, best_s)
                t = (1 - lam)[:, None] * tang[j] + lam[:, None] * tang[j + 1]
                best_t = np.where(better[:, None], t, best_t)
            best_t /= np.linalg.norm(best_t, axis=1, keepdims=True)
            # bump along the curve: 0 near both ends, 1 on [eps, 2 - eps]
            e = cv.eps
            along = smooth_step((best_s - 0.5 * e) / (0.5 * e)) * smooth_step((2.0 - best_s - 0.5 * e) / (0.5 * e))
            across = smooth_step(2.0 - 2.0 * best_d / cv.width)
            out[hit] += sign * cv.alpha * (along * across)[:, None] * best_t
        return out.reshape(x.shape)

    return omega


def ds_cauchy_sequence(n_max: int = 6, res: int = 41) -> tuple[RandersData, list]:
    """Euclidean plane with a one-form concentrated in thin tubes.

    Along the n-th curve from (0, n) to (0, n + 1) the one-form is
    ``-alpha_n`` times the unit tangent (cheap forward travel); along its
    mirror image it is ``+alpha_n`` times the tangent (cheap backward
    travel).  ``1 - alpha_n = eps_n = 2^(-n-3)``.
    """
    curves = cauchy_curves(n_max)
    chart = Chart((-1.0, 0.5), (1.0, n_max + 1.5), resolution=(res, int(round(res * (n_max + 1) / 2)) + 1))
    omega = OneFormField(_cauchy_omega_factory(curves))
    data = RandersData(MetricField.euclidean(2), omega, chart, fd_step=1e-6, name="ds-cauchy-sequence")
    return data, curves


# ----------------------------------------------------------------------------
# regions for distance-to-set scenarios

def disk_complement(chart: Chart, radius: float = 1.0) -> RegionMask:
    """C = {|p| >= radius}."""
    return RegionMask.from_level_set(chart, lambda x: radius - np.linalg.norm(x, axis=-1))


def two_disks(chart: Chart, centre: float = 1.0, radius: float = 0.5) -> RegionMask:
    def phi(x):
        x = np.asarray(x, dtype=float)
        c = np.array([centre, 0.0])
        return np.minimum(np.linalg.norm(x - c, axis=-1), np.linalg.norm(x + c, axis=-1)) - radius

    return RegionMask.from_level_set(chart, phi)


def interval(chart: Chart, lo: float, hi: float) -> RegionMask:
    """Open interval (lo, hi) on a 1-D chart."""
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    return RegionMask.from_level_set(chart, lambda x: np.abs(np.asarray(x)[..., 0] - mid) - half,
                                     closed=False)
