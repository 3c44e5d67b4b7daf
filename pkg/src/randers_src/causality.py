"""Distance to sets, Cauchy developments, horizons and cut loci."""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.ndimage import distance_transform_edt
from scipy.optimize import brentq, minimize_scalar

from .charts import Chart, SampledCurve
from .distance import DistanceField, _field_from_sources, shorten
from .finsler import FinslerNorm, RandersData, segment_lengths
from .geodesics import GeodesicSolution, shoot_connect

CREASE_ANGLE = np.deg2rad(15.0)


class EmptySet(ValueError):
    pass


@dataclass(eq=False)
class RegionMask:
    """A closed (or open) region of a chart given as a node mask.

    ``level_set`` optionally describes the region as ``{phi <= 0}`` (closed)
    or ``{phi < 0}`` (open); it is used to place boundary samples off the
    grid.  ``boundary_points`` may be given explicitly instead.
    """

    chart: Chart
    mask: np.ndarray
    level_set: Callable | None = None
    closed: bool = True
    boundary_points: np.ndarray | None = None

    @classmethod
    def from_level_set(cls, chart: Chart, phi: Callable, closed: bool = True) -> "RegionMask":
        vals = phi(chart.nodes())
        mask = vals <= 0 if closed else vals < 0
        return cls(chart, mask, phi, closed)

    @property
    def is_empty(self) -> bool:
        return not bool(self.mask.any())

    def complement(self) -> "RegionMask":
        phi = self.level_set
        neg = None if phi is None else (lambda x: -phi(x))
        return RegionMask(self.chart, ~self.mask, neg, not self.closed, self.boundary_points)

    def boundary_nodes(self) -> np.ndarray:
        """Nodes of the region with a grid neighbour outside it."""
        out = np.zeros_like(self.mask)
        for ax, per in enumerate(self.chart.periodic):
            for s in (1, -1):
                shifted = np.roll(self.mask, s, axis=ax)
                edge = self.mask & ~shifted
                if not per:
                    sl = [slice(None)] * self.mask.ndim
                    sl[ax] = 0 if s == 1 else -1
                    edge[tuple(sl)] = False
                out |= edge
        return out

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        if self.level_set is not None:
            v = float(self.level_set(p))
            return v <= 0 if self.closed else v < 0
        return bool(self.mask[self.chart.nearest_index(p)])

    def sample_boundary(self, density: int = 8) -> list[np.ndarray]:
        """Boundary polylines: explicit samples, level-set contours or nodes."""
        if self.boundary_points is not None:
            pts = np.asarray(self.boundary_points, dtype=float).reshape(-1, self.chart.dim)
            return [pts[i:i + 1] for i in range(len(pts))]
        if self.level_set is not None:
            if self.chart.dim == 1:
                return _roots_1d(self.chart, self.level_set, density)
            if self.chart.dim == 2:
                return _contours_2d(self.chart, self.level_set, density)
        nodes = self.chart.nodes()[self.boundary_nodes()]
        return [nodes[i:i + 1] for i in range(len(nodes))]


def _roots_1d(chart: Chart, phi, density) -> list[np.ndarray]:
    xs = np.linspace(chart.lower[0], chart.upper[0], density * chart.shape[0])
    vals = phi(xs[:, None])
    out = []
    for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0):
        a, b = xs[i], xs[i + 1]
        if vals[i] == 0:
            r = a
        elif vals[i + 1] == 0:
            continue
        else:
            r = brentq(lambda s: float(phi(np.array([s]))), a, b, xtol=1e-15)
        out.append(np.array([[r]]))
    return out


def _contours_2d(chart: Chart, phi, density) -> list[np.ndarray]:
    from skimage.measure import find_contours

    n = [density * s for s in chart.shape]
    axes = [np.linspace(lo, hi, k) for lo, hi, k in zip(chart.lower, chart.upper, n)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    vals = phi(grid)
    out = []
    for c in find_contours(vals, 0.0):
        pts = np.column_stack([np.interp(c[:, i], np.arange(n[i]), axes[i]) for i in range(2)])
        pts = _project(phi, pts)
        out.append(pts)
    return out


def _project(phi, pts, iters: int = 3, eps: float = 1e-7) -> np.ndarray:
    """Newton steps onto ``phi = 0``."""
    for _ in range(iters):
        v = phi(pts)
        g = np.stack([(phi(pts + eps * e) - phi(pts - eps * e)) / (2 * eps) for e in np.eye(pts.shape[1])],
                     axis=-1)
        gn = np.einsum("...i,...i->...", g, g)
        pts = pts - (v / np.where(gn > 0, gn, 1.0))[..., None] * g
    return pts


def is_constant_metric(data: RandersData, samples: int = 7, rtol: float = 1e-14) -> bool:
    """True when h and omega do not vary over a sample of the chart."""
    chart = data.chart
    axes = [np.linspace(lo, hi, samples) for lo, hi in zip(chart.lower, chart.upper)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, chart.dim)
    h, w = data.fields(pts)
    return bool(np.abs(h - h[:1]).max() <= rtol * max(1.0, np.abs(h).max())
                and np.abs(w - w[:1]).max() <= rtol * max(1.0, np.abs(w).max() + 1.0))


@dataclass(eq=False)
class SetDistance:
    """rho_C on the grid: ``from_set`` d(C, x) or ``to_set`` d(x, C).

    ``values`` are the refined node values; ``coarse`` is the multi-source
    Dijkstra field.  For constant metrics straight chords are minimisers and
    the refinement is the minimum over dense boundary samples of the chord
    length; otherwise the coarse field is kept and single points can be
    refined with :meth:`refined_value`.
    """

    norm: FinslerNorm
    region: RegionMask
    orientation: str
    coarse: DistanceField
    values: np.ndarray
    boundary: list
    exact_chords: bool
    extra: dict = field(default_factory=dict)

    @property
    def chart(self) -> Chart:
        return self.norm.chart

    @property
    def samples(self) -> np.ndarray:
        return np.concatenate(self.boundary, axis=0)

    def chord_lengths(self, p, feet=None) -> np.ndarray:
        """Length of straight chords between boundary samples and ``p``."""
        p = np.asarray(p, dtype=float)
        feet = self.samples if feet is None else feet
        F = self.norm
        d = self.chart.displacement(feet, p)  # foot -> p
        start = feet
        if self.orientation == "to_set":
            start, d = feet + d, -d
        if self.exact_chords:
            return F(start, d)
        ts = np.linspace(0.0, 1.0, 9)
        pts = start[:, None, :] + ts[None, :, None] * d[:, None, :]
        return np.array([segment_lengths(F, q).sum() for q in pts])

    def _neighbours(self):
        if "nbr" not in self.extra:
            prev, nxt = [], []
            start = 0
            for poly in self.boundary:
                n = len(poly)
                idx = np.arange(start, start + n)
                prev.append(np.where(idx > start, idx - 1, -1))
                nxt.append(np.where(idx < start + n - 1, idx + 1, -1))
                start += n
            self.extra["nbr"] = (np.concatenate(prev), np.concatenate(nxt))
        return self.extra["nbr"]

    def chord_min(self, points, chunk: int = 256, iters: int = 60):
        """Minimum chord length from the boundary polylines to each point.

        The best sample is refined by golden-section search on its two
        adjacent polyline segments (chord length is convex along a segment
        for a constant norm).  Returns ``(values, feet)``.
        """
        pts = np.asarray(points, dtype=float).reshape(-1, self.chart.dim)
        feet = self.samples
        prev, nxt = self._neighbours()
        vals = np.empty(len(pts))
        best_feet = np.empty_like(pts)
        invphi = (np.sqrt(5.0) - 1.0) / 2.0
        for lo in range(0, len(pts), chunk):
            P = pts[lo:lo + chunk]
            lengths = self._chords(feet[None, :, :], P[:, None, :])
            k = np.argmin(lengths, axis=1)
            best = lengths[np.arange(len(P)), k]
            foot = feet[k].copy()
            for nb in (prev[k], nxt[k]):
                has = nb >= 0
                if not has.any():
                    continue
                a = feet[k[has]]
                b = feet[nb[has]]
                Q = P[has]
                s0, s1 = np.zeros(len(Q)), np.ones(len(Q))
                for _ in range(iters):
                    m1 = s1 - invphi * (s1 - s0)
                    m2 = s0 + invphi * (s1 - s0)
                    f1 = self._chords(a + m1[:, None] * (b - a), Q)
                    f2 = self._chords(a + m2[:, None] * (b - a), Q)
                    left = f1 < f2
                    s1 = np.where(left, m2, s1)
                    s0 = np.where(left, s0, m1)
                sm = 0.5 * (s0 + s1)
                c = a + sm[:, None] * (b - a)
                fm = self._chords(c, Q)
                better = fm < best[has]
                idx = np.flatnonzero(has)[better]
                best[idx] = fm[better]
                foot[idx] = c[better]
            phi = self.region.level_set
            if phi is not None:
                foot = _project(phi, foot)
                best = self._chords(foot, P)
            vals[lo:lo + chunk] = best
            best_feet[lo:lo + chunk] = foot
        return vals, best_feet

    def _chords(self, feet, p):
        d = self.chart.displacement(feet, p)
        start = np.broadcast_to(feet, d.shape)
        if self.orientation == "to_set":
            start, d = start + d, -d
        if self.exact_chords:
            h, w = self._constants()
            alpha = np.sqrt(np.maximum(np.einsum("...i,ij,...j->...", d, h, d), 0.0))
            return alpha + d @ w
        return self.norm(start, d)

    def _constants(self):
        if "const" not in self.extra:
            F = self.norm
            h, w = F.data.fields(np.asarray(F.chart.lower, dtype=float))
            self.extra["const"] = (h, -w if F.reverse else w)
        return self.extra["const"]

    def refined_value(self, p) -> float:
        p = np.asarray(p, dtype=float).reshape(-1)
        if self.region.contains(p):
            return 0.0
        if self.exact_chords:
            return float(self.chord_min(p)[0][0])
        chord = float(self.chord_lengths(p).min())
        foot = self.samples[int(np.argmin(self.chord_lengths(p)))]
        a, b = (foot, foot + self.chart.displacement(foot, p))
        if self.orientation == "to_set":
            a, b = p, p + self.chart.displacement(p, foot)
        _, length = shorten(self.norm, SampledCurve(np.vstack([a, b])), 8, 64)
        return min(chord, length)

    def value_at(self, p) -> float:
        return self.refined_value(p)

    def to_csv(self, path) -> None:
        nodes = self.chart.nodes().reshape(-1, self.chart.dim)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i}" for i in range(self.chart.dim)] + ["value", "reached"])
            for x, v, r in zip(nodes, self.values.reshape(-1), self.coarse.reached.reshape(-1)):
                w.writerow([f"{c:.10g}" for c in x] + [f"{v:.10g}", int(r)])


def distance_to_set(F: FinslerNorm, C: RegionMask, orientation: str = "from_set",
                    radius: int = 2, density: int = 4) -> SetDistance:
    """Distance from (``from_set``) or to (``to_set``) a closed region."""
    if C.is_empty:
        raise EmptySet("distance to an empty set")
    if orientation not in ("from_set", "to_set"):
        raise ValueError(f"unknown orientation {orientation!r}")
    sources = np.flatnonzero(C.mask.reshape(-1))
    graph_orient = "forward" if orientation == "from_set" else "backward"
    coarse = _field_from_sources(F, sources, graph_orient, radius)
    boundary = C.sample_boundary(density)
    if not boundary:
        nodes = C.chart.nodes()[C.boundary_nodes()]
        boundary = [nodes[i:i + 1] for i in range(len(nodes))]
    exact = is_constant_metric(F.data)
    values = coarse.values.copy()
    out = SetDistance(F, C, orientation, coarse, values, boundary, exact)
    if exact:
        nodes = F.chart.nodes().reshape(-1, F.dim)
        flat = values.reshape(-1)
        outside = np.flatnonzero(~C.mask.reshape(-1))
        if len(outside):
            flat[outside] = np.minimum(flat[outside], out.chord_min(nodes[outside])[0])
        flat[C.mask.reshape(-1)] = 0.0
    return out


# ----------------------------------------------------------------------------
# minimizing segments and the cut locus

def _local_min_on_polyline(fn, poly: np.ndarray, k: int) -> tuple[np.ndarray, float]:
    """Discrete descent along a polyline from index ``k``, then 1-D refinement."""
    n = len(poly)
    vals = {}

    def val(i):
        if i not in vals:
            vals[i] = float(fn(poly[i]))
        return vals[i]

    while True:
        best = k
        for j in (k - 1, k + 1):
            if 0 <= j < n and val(j) < val(best):
                best = j
        if best == k:
            break
        k = best
    if n == 1:
        return poly[0], val(0)
    lo, hi = max(k - 1, 0), min(k + 1, n - 1)

    def point(s):
        i = min(int(np.floor(s)), n - 2)
        w = s - i
        return (1 - w) * poly[i] + w * poly[i + 1]

    res = minimize_scalar(lambda s: float(fn(point(s))), bounds=(lo, hi), method="bounded",
                          options=dict(xatol=1e-10))
    if res.fun < val(k):
        return point(res.x), float(res.fun)
    return poly[k], val(k)


@dataclass(frozen=True)
class MinimizingSegments:
    segments: list
    feet: np.ndarray
    rho: float

    @property
    def count(self) -> int:
        return len(self.segments)


def minimizing_segments(F: FinslerNorm, C: RegionMask, p, restarts: int = 8, seed: int = 0,
                        tol: float = 1e-4, sd: SetDistance | None = None) -> MinimizingSegments:
    """C-minimizing segments ending at ``p`` (``from_set`` orientation).

    Candidate feet come from the boundary sample nearest to the Dijkstra
    root, the best chord, and ``restarts`` random boundary seeds, each
    followed by a local descent of the chord length along the boundary.
    Each foot whose value is within ``tol`` of rho_C(p) is validated by
    shooting a geodesic from the foot to ``p``.
    """
    p = np.asarray(p, dtype=float).reshape(-1)
    if C.contains(p):
        raise ValueError("p lies in C")
    sd = sd or distance_to_set(F, C, "from_set")
    rho = sd.refined_value(p)
    rng = np.random.default_rng(seed)
    seeds: list[tuple[int, int]] = []
    sizes = [len(b) for b in sd.boundary]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    samples = sd.samples
    chords = sd.chord_lengths(p)
    best = int(np.argmin(chords))
    seeds.append(_locate(offsets, best))
    flat = int(np.ravel_multi_index(F.chart.nearest_index(p), F.chart.shape))
    root = int(np.atleast_1d(sd.coarse.roots)[flat]) if np.ndim(sd.coarse.roots) else int(sd.coarse.roots)
    if root >= 0:
        root_pt = F.chart.nodes().reshape(-1, F.dim)[root]
        j = int(np.argmin(np.linalg.norm(F.chart.displacement(samples, root_pt), axis=1)))
        seeds.append(_locate(offsets, j))
    for j in rng.integers(0, len(samples), size=restarts):
        seeds.append(_locate(offsets, int(j)))

    def fn(x):
        return float(sd.chord_lengths(p, np.asarray(x)[None])[0])

    cands = []
    for b, k in seeds:
        foot, val = _local_min_on_polyline(fn, sd.boundary[b], k)
        if val <= rho + tol:
            cands.append(foot)
    sep = 1e-3 * float(F.chart.extent.max())
    feet: list[np.ndarray] = []
    for c in cands:
        if all(np.linalg.norm(F.chart.displacement(c, f)) > sep for f in feet):
            feet.append(c)
    segments: list[GeodesicSolution] = []
    kept = []
    for foot in feet:
        sols = shoot_connect(F, foot, p, tol=1e-9, restarts=2, seed=seed, grid_seed=False)
        ok = [s for s in sols if abs(s.length - rho) <= tol]
        if ok:
            segments.append(ok[0])
            kept.append(foot)
    if not segments:
        raise RuntimeError(f"no C-minimizing segment found for p = {tuple(p)}")
    return MinimizingSegments(segments, np.array(kept), rho)


def _locate(offsets, j):
    b = int(np.searchsorted(offsets, j, side="right") - 1)
    return b, int(j - offsets[b])


def one_sided_gradients(values: np.ndarray, spacing, valid: np.ndarray, order: int = 2):
    """One-sided differences of first or second order in every axis direction.

    Returns ``(plus, minus, ok)``: arrays of shape ``(dim, *shape)`` and a mask of
    nodes where both stencils of every axis stay inside ``valid``.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    dim = values.ndim
    plus = np.full((dim,) + values.shape, np.nan)
    minus = np.full((dim,) + values.shape, np.nan)
    ok = valid.copy()
    for ax in range(dim):
        h = spacing[ax]
        n = values.shape[ax]
        sl = lambda a, b: tuple(slice(a, b) if i == ax else slice(None) for i in range(dim))
        stencil_ok = np.zeros_like(valid)
        if order == 1:
            d = (values[sl(1, n)] - values[sl(0, n - 1)]) / h
            plus[(ax,) + sl(0, n - 1)] = d
            minus[(ax,) + sl(1, n)] = d
            stencil_ok[sl(1, n - 1)] = valid[sl(0, n - 2)] & valid[sl(2, n)]
        else:
            # forward: (-3 f0 + 4 f1 - f2) / 2h on indices 0..n-3
            plus[(ax,) + sl(0, n - 2)] = (-3 * values[sl(0, n - 2)] + 4 * values[sl(1, n - 1)]
                                          - values[sl(2, n)]) / (2 * h)
            minus[(ax,) + sl(2, n)] = (3 * values[sl(2, n)] - 4 * values[sl(1, n - 1)]
                                       + values[sl(0, n - 2)]) / (2 * h)
            stencil_ok[sl(2, n - 2)] = (valid[sl(0, n - 4)] & valid[sl(1, n - 3)] & valid[sl(3, n - 1)]
                                        & valid[sl(4, n)])
        ok &= stencil_ok
    return plus, minus, ok


def _spread(plus, minus, ok) -> np.ndarray:
    dim = plus.shape[0]
    grads = []
    for combo in itertools.product((0, 1), repeat=dim):
        grads.append(np.stack([plus[a] if c == 0 else minus[a] for a, c in enumerate(combo)], axis=-1))
    spread = np.zeros(plus.shape[1:])
    for g1, g2 in itertools.combinations(grads, 2):
        n1 = np.linalg.norm(g1, axis=-1)
        n2 = np.linalg.norm(g2, axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            cos = np.einsum("...i,...i->...", g1, g2) / (n1 * n2)
        ang = np.arccos(np.clip(np.nan_to_num(cos, nan=1.0), -1.0, 1.0))
        spread = np.maximum(spread, np.where(ok, ang, 0.0))
    return spread


def gradient_spread(values: np.ndarray, spacing, valid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Largest angle between one-sided gradients at every node.

    The first-order stencils only reach the adjacent cells, so a kink one
    cell away does not register, but they carry an O(h) curvature error.
    The second-order stencils reach two cells but are curvature-accurate.
    A kink registers in both, a discretisation artefact in at most one, so
    the smaller of the two spreads is returned.
    """
    p1, m1, ok1 = one_sided_gradients(values, spacing, valid, order=1)
    p2, m2, ok2 = one_sided_gradients(values, spacing, valid, order=2)
    ok = ok1 & ok2
    return np.minimum(_spread(p1, m1, ok), _spread(p2, m2, ok)), ok


def foot_count(sd: SetDistance, p, tol: float = 1e-7, angle: float = CREASE_ANGLE) -> int:
    """Estimate N_C(p) from near-optimal boundary samples.

    Near-optimal samples (chord within ``tol`` of the minimum) are grouped in
    runs along the boundary polylines; a run whose directions from ``p``
    spread by more than ``angle`` counts as two.
    """
    p = np.asarray(p, dtype=float)
    count = 0
    best = np.inf
    per_poly = []
    for poly in sd.boundary:
        c = sd.chord_lengths(p, poly)
        per_poly.append(c)
        best = min(best, float(c.min()))
    for poly, c in zip(sd.boundary, per_poly):
        near = c <= best + tol
        if not near.any():
            continue
        idx = np.flatnonzero(near)
        runs = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
        closed = len(poly) > 2 and np.allclose(poly[0], poly[-1])
        if closed and len(runs) > 1 and runs[0][0] == 0 and runs[-1][-1] == len(poly) - 1:
            runs = [np.concatenate([runs[-1], runs[0]])] + runs[1:-1]
        for run in runs:
            d = sd.chart.displacement(poly[run], p)
            u = d / np.maximum(np.linalg.norm(d, axis=1, keepdims=True), 1e-300)
            cosmin = float((u @ u.T).min()) if len(u) > 1 else 1.0
            count += 2 if np.arccos(np.clip(cosmin, -1, 1)) > angle else 1
    return count


def _single_foot(sd: SetDistance, pts, angle, tol: float = 1e-7, chunk: int = 256) -> np.ndarray:
    """Vectorised sufficient test for N_C = 1.

    True when all near-optimal samples lie on one polyline and are seen
    from the point within half of ``angle`` of the best sample.
    """
    feet = sd.samples
    owner = np.concatenate([np.full(len(b), i) for i, b in enumerate(sd.boundary)])
    out = np.zeros(len(pts), dtype=bool)
    for lo in range(0, len(pts), chunk):
        P = pts[lo:lo + chunk]
        lengths = sd._chords(feet[None], P[:, None])
        k = np.argmin(lengths, axis=1)
        near = lengths <= lengths[np.arange(len(P)), k][:, None] + tol
        same = np.all(~near | (owner[None] == owner[k][:, None]), axis=1)
        d = sd.chart.displacement(feet[None], P[:, None])
        u = d / np.maximum(np.linalg.norm(d, axis=-1, keepdims=True), 1e-300)
        cos = np.einsum("pki,pi->pk", u, u[np.arange(len(P)), k])
        worst = np.where(near, cos, 1.0).min(axis=1)
        out[lo:lo + chunk] = same & (worst > np.cos(0.5 * angle))
    return out


def _component_switch(sd: SetDistance, valid: np.ndarray, chunk: int = 256) -> np.ndarray:
    """Nodes next to a change of the nearest boundary component.

    When neighbouring nodes take their nearest foot on different boundary
    polylines, a cut point lies between them even if it falls off the grid,
    where a piecewise-linear rho can leave both one-sided stencils unkinked.
    Of each such pair the node with the smaller gap between its two best
    component distances is flagged (both on a tie).
    """
    out = np.zeros(valid.shape, dtype=bool)
    if len(sd.boundary) < 2:
        return out
    offsets = np.cumsum([0] + [len(b) for b in sd.boundary[:-1]])
    feet = sd.samples
    nodes = sd.chart.nodes()[valid]
    near = np.empty(len(nodes), dtype=int)
    gap = np.empty(len(nodes))
    for lo in range(0, len(nodes), chunk):
        P = nodes[lo:lo + chunk]
        per = np.minimum.reduceat(sd._chords(feet[None], P[:, None]), offsets, axis=1)
        order = np.sort(per, axis=1)
        near[lo:lo + chunk] = np.argmin(per, axis=1)
        gap[lo:lo + chunk] = order[:, 1] - order[:, 0]
    comp = np.full(valid.shape, -1)
    gaps = np.zeros(valid.shape)
    comp[valid] = near
    gaps[valid] = gap
    dim = valid.ndim
    for ax in range(dim):
        n = valid.shape[ax]
        a = tuple(slice(0, n - 1) if i == ax else slice(None) for i in range(dim))
        b = tuple(slice(1, n) if i == ax else slice(None) for i in range(dim))
        switch = valid[a] & valid[b] & (comp[a] != comp[b])
        tie = np.abs(gaps[a] - gaps[b]) <= 1e-12
        out[a] |= switch & ((gaps[a] < gaps[b]) | tie)
        out[b] |= switch & ((gaps[b] < gaps[a]) | tie)
    return out


@dataclass(eq=False)
class CutLocus:
    region: RegionMask
    flagged: np.ndarray
    spread: np.ndarray
    classified: np.ndarray
    nc: np.ndarray | None
    counts: dict

    def agreement(self) -> float:
        """Fraction of classified nodes where the gradient flag matches N_C >= 2."""
        if self.nc is None:
            return float("nan")
        m = self.classified
        return float(np.mean((self.flagged[m]) == (self.nc[m] >= 2)))


def cut_locus(F: FinslerNorm, C: RegionMask, sd: SetDistance | None = None,
              count_feet: bool = True, angle: float = CREASE_ANGLE) -> CutLocus:
    """Flag nodes where rho_C fails to be differentiable.

    A node is flagged when the spread of its one-sided gradients exceeds
    ``angle``, when the foot count N_C is at least two, or when it sits at a
    switch of the nearest boundary component.  Nodes whose
    stencils reach into C are left unclassified.
    """
    sd = sd or distance_to_set(F, C, "from_set")
    valid = ~C.mask
    for ax, per in enumerate(F.chart.periodic):
        if per:
            raise NotImplementedError("cut locus on periodic charts")
    spread, ok = gradient_spread(sd.values, F.chart.spacing, valid)
    flagged = ok & (spread > angle)
    nc = None
    if count_feet and sd.exact_chords:
        nodes = F.chart.nodes()
        nc = np.zeros(F.chart.shape, dtype=int)
        idx = np.argwhere(ok)
        pts = nodes[ok]
        simple = _single_foot(sd, pts, angle)
        nc[ok] = np.where(simple, 1, 0)
        for i in np.flatnonzero(~simple):
            nc[tuple(idx[i])] = foot_count(sd, pts[i])
        switch = _component_switch(sd, valid)
        flagged_total = flagged | (nc >= 2) | switch
    else:
        switch = np.zeros_like(flagged)
        flagged_total = flagged
    counts = dict(gradient=int(flagged.sum()), classified=int(ok.sum()),
                  component_switch=int(switch.sum()),
                  total=int(flagged_total.sum()),
                  multiple_feet=int((nc >= 2).sum()) if nc is not None else -1)
    region = RegionMask(F.chart, flagged_total)
    return CutLocus(region, flagged, spread, ok, nc, counts)


# ----------------------------------------------------------------------------
# Cauchy developments and horizons

@dataclass(eq=False)
class Development:
    height: np.ndarray
    t0: float
    side: str
    unbounded: bool
    set_distance: SetDistance | None
    chart: Chart

    def contains(self, t, y) -> bool:
        """Membership of the event (t, y) using refined heights."""
        y = np.asarray(y, dtype=float).reshape(-1)
        if self.unbounded:
            return t >= self.t0 if self.side == "future" else t <= self.t0
        h = self.set_distance.refined_value(y)
        if self.side == "future":
            return self.t0 <= t < self.t0 + h
        return self.t0 - h < t <= self.t0

    def slice_mask(self, t) -> np.ndarray:
        dt = t - self.t0 if self.side == "future" else self.t0 - t
        if dt < 0:
            return np.zeros(self.height.shape, dtype=bool)
        return self.height > dt


def cauchy_development(R: RandersData, A: RegionMask, t0: float = 0.0, side: str = "future",
                       density: int = 8) -> Development:
    """Height function of D+(A_t0) (or D-): distance from (to) the complement of A."""
    if side not in ("future", "past"):
        raise ValueError(f"unknown side {side!r}")
    Ac = A.complement()
    if Ac.is_empty:
        return Development(np.full(A.chart.shape, np.inf), t0, side, True, None, A.chart)
    F = FinslerNorm(R)
    sd = distance_to_set(F, Ac, "from_set" if side == "future" else "to_set", density=density)
    return Development(sd.values, t0, side, False, sd, A.chart)


@dataclass(eq=False)
class HorizonGraph:
    development: Development
    height: np.ndarray
    crease: np.ndarray
    generators: list
    cut: CutLocus | None

    def to_csv(self, path) -> None:
        chart = self.development.chart
        nodes = chart.nodes().reshape(-1, chart.dim)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"y{i}" for i in range(chart.dim)] + ["height", "crease"])
            for y, hgt, c in zip(nodes, self.height.reshape(-1), self.crease.reshape(-1)):
                w.writerow([f"{v:.10g}" for v in y] + [f"{hgt:.10g}", int(c)])


def lift_generator(seg: GeodesicSolution, F: FinslerNorm, t0: float, side: str) -> SampledCurve:
    """Lift a spatial segment to a lightlike curve ``t = t0 +/- s``.

    Time increments are the Fermat lengths of the polyline pieces, so every
    piece is null with respect to the metric at its midpoint.
    """
    pts = seg.curve.points
    sgn = 1.0 if side == "future" else -1.0
    G = F if side == "future" else F.reversed()
    if side == "past":
        pts = pts[::-1]
    mid = 0.5 * (pts[:-1] + pts[1:])
    d = np.diff(pts, axis=0)
    dt = G(mid, d)
    t = np.concatenate([[0.0], np.cumsum(dt)])
    if side == "past":
        t = t - t[-1]
        return SampledCurve(np.column_stack([t0 + t, pts]))
    return SampledCurve(np.column_stack([t0 + sgn * t, pts]))


def horizon(R: RandersData, A: RegionMask, t0: float = 0.0, side: str = "future",
            generator_points=(), restarts: int = 4, density: int = 8) -> HorizonGraph:
    """Cauchy horizon as the graph of the development height.

    Generators through the requested ``generator_points`` are minimizing
    segments from the complement of A, lifted to lightlike curves.
    """
    dev = cauchy_development(R, A, t0, side, density)
    if dev.unbounded:
        return HorizonGraph(dev, dev.height, np.zeros(A.chart.shape, dtype=bool), [], None)
    F = FinslerNorm(R) if side == "future" else FinslerNorm(R).reversed()
    Ac = A.complement()
    sd = dev.set_distance
    if side == "past":
        sd = distance_to_set(F, Ac, "from_set", density=density)
    cut = cut_locus(F, Ac, sd)
    crease = cut.region.mask & A.mask
    gens = []
    for p in generator_points:
        ms = minimizing_segments(F, Ac, p, restarts=restarts, sd=sd)
        for seg in ms.segments:
            gens.append(lift_generator(seg, FinslerNorm(R), t0, side))
    return HorizonGraph(dev, dev.height, crease, gens, cut)


# ----------------------------------------------------------------------------
# brute-force causal reachability on a (t, x) grid

@dataclass(eq=False)
class ReachabilityOracle:
    times: np.ndarray
    xs: np.ndarray
    development: np.ndarray  # True where every past causal grid path meets A


def causal_reachability_oracle(sd_metric: Callable, A_mask_1d: np.ndarray, xs: np.ndarray,
                               times: np.ndarray, max_steps: int = 12, side: str = "future",
                               slack: float = 1e-12) -> ReachabilityOracle:
    """Development of a slice region in 1+1 dimensions by grid reachability.

    Events reachable by future causal grid paths from the slice outside A
    are excluded; the rest of the future half (past for ``side='past'``) is
    the development.  Moves are ``(m, k)`` steps in (t, x) with ``m`` up to
    ``max_steps`` and any ``k``; a move is causal when its displacement is
    future (past) pointing and non-spacelike for the metric evaluated at the
    midpoint of the move.

    ``sd_metric(x)`` returns the 2x2 spacetime metric at spatial points x.
    """
    nt, nx = len(times), len(xs)
    dt = times[1] - times[0]
    dx = xs[1] - xs[0]
    sgn = 1.0 if side == "future" else -1.0
    bad = np.zeros((nt, nx), dtype=bool)
    bad[0] = ~A_mask_1d
    moves = []
    for m in range(1, max_steps + 1):
        for k in range(-nx + 1, nx):
            if np.gcd(m, abs(k)) != 1:
                continue
            v = np.array([sgn * m * dt, k * dx])
            src = np.arange(nx)
            dst = src + k
            ok = (dst >= 0) & (dst < nx)
            if not ok.any():
                continue
            mid = xs[src[ok]] + 0.5 * k * dx
            g = sd_metric(mid[:, None])
            q = np.einsum("...i,...ij,...j->...", v, g, v)
            causal = q <= slack * (v @ v)
            if not causal.any():
                continue
            moves.append((m, src[ok][causal], dst[ok][causal]))
    for i in range(1, nt):
        row = bad[i]
        for m, s, d in moves:
            if i - m < 0:
                continue
            prev = bad[i - m]
            hit = prev[s]
            if hit.any():
                row[d[hit]] = True
    return ReachabilityOracle(times, xs, ~bad)


def mask_hausdorff_cells(a: np.ndarray, b: np.ndarray) -> float:
    """Hausdorff distance between two node masks, in grid cells."""
    if not a.any() and not b.any():
        return 0.0
    if not a.any() or not b.any():
        return float("inf")
    da = distance_transform_edt(~a)
    db = distance_transform_edt(~b)
    return float(max(da[b].max(), db[a].max()))
