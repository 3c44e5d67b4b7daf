"""Property checks re-asserted by every scenario run."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .finsler import FinslerNorm, RandersData, fundamental_tensor
from .geodesics import geodesic_ivp
from .stationary import (Event, StationaryData, integrate_null_geodesic, null_vector,
                         stationary_from_randers)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    limit: float
    detail: str = ""

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.name}: {self.value:.3e} (limit {self.limit:.1e}) {self.detail}".rstrip()


def _random_points(R: RandersData, rng, n: int, points=None) -> np.ndarray:
    chart = R.chart
    lo = np.asarray(chart.lower)
    hi = np.asarray(chart.upper)
    pts = lo + (hi - lo) * rng.random((n, chart.dim))
    if points is not None:
        pts = np.vstack([pts, np.asarray(points, dtype=float).reshape(-1, chart.dim)])
    return pts


def norm_checks(R: RandersData, rng, n: int = 500, points=None) -> list[Check]:
    """Triangle inequality, homogeneity, reverse consistency, tensor SPD."""
    F = FinslerNorm(R)
    x = _random_points(R, rng, n, points)
    v1 = rng.normal(size=x.shape)
    v2 = rng.normal(size=x.shape)
    f1, f2, f12 = F(x, v1), F(x, v2), F(x, v1 + v2)
    tri = float(np.max((f12 - f1 - f2) / (f1 + f2)))
    lam = rng.uniform(0.1, 10.0, size=len(x))
    hom = float(np.max(np.abs(F(x, lam[:, None] * v1) - lam * f1) / (lam * f1)))
    rev = float(np.max(np.abs(F.reversed()(x, v1) - F(x, -v1))))
    pos = float(np.min(f1 / np.linalg.norm(v1, axis=1)))
    asym = 0.0
    min_eig = np.inf
    for i in range(min(len(x), 40)):
        g = fundamental_tensor(F, x[i], v1[i])
        asym = max(asym, float(np.abs(g - g.T).max()))
        min_eig = min(min_eig, float(np.linalg.eigvalsh(g).min()))
    return [
        Check("triangle inequality", tri <= 1e-12, max(tri, 0.0), 1e-12),
        Check("positive homogeneity", hom <= 1e-12, hom, 1e-12),
        Check("reverse consistency", rev == 0.0, rev, 0.0),
        Check("positivity", pos > 0.0, pos, 0.0, "min F(v)/|v|"),
        Check("fundamental tensor symmetric", asym < 1e-8, asym, 1e-8),
        Check("fundamental tensor positive definite", min_eig > 0.0, min_eig, 0.0, "min eigenvalue"),
    ]


def geodesic_checks(R: RandersData, p, v, tol: float = 1e-9) -> list[Check]:
    F = FinslerNorm(R)
    sol = geodesic_ivp(F, p, v, 1.0, tol)
    dev = sol.speed_deviation
    return [Check("geodesic speed constancy", dev < 10 * tol, dev, 10 * tol)]


def null_checks(sd: StationaryData, x, u, s_max: float = 1.0) -> list[Check]:
    """Killing conservation and tdot >= F(xdot) on a future null geodesic."""
    F = sd.fermat()
    v = null_vector(sd, x, u, "future", F)
    geo = integrate_null_geodesic(sd, Event(0.0, x), v, "future", s_max=s_max, F=F)
    pts = geo.curve.points
    tdot = geo.velocities[:, 0]
    fx = F(pts[:, 1:], geo.velocities[:, 1:])
    margin = float(np.min(tdot - fx + 1e-9 * np.abs(tdot)))
    return [
        Check("Killing conservation", geo.killing_drift < 1e-9, geo.killing_drift, 1e-9),
        Check("tdot >= F(xdot) > 0", margin >= 0 and bool(np.all(fx > 0)), float(np.min(tdot - fx)), -1e-9),
    ]


def invariant_suite(R: RandersData, rng, launch, null_launch=None, sd: StationaryData | None = None,
                    extra_points=None, tol: float = 1e-9) -> list[Check]:
    """All module-level invariants on one scenario.

    ``launch`` is ``(p, v)`` for the geodesic speed check and
    ``null_launch`` is ``(x, u)`` for the spacetime checks (defaults to
    ``launch``).
    """
    checks = norm_checks(R, rng, points=extra_points)
    checks += geodesic_checks(R, *launch, tol=tol)
    sd = sd or stationary_from_randers(R)
    checks += null_checks(sd, *(null_launch or launch))
    return checks
