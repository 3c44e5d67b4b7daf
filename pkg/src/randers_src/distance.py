"""Non-symmetric distances on a grid: directed Dijkstra plus curve shortening."""

from __future__ import annotations

import csv
import itertools
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .charts import Chart, SampledCurve
from .finsler import GAUSS2, FinslerNorm, segment_lengths

_FIELD_CACHE_SIZE = 64


def stencil_offsets(dim: int, radius: int = 2) -> np.ndarray:
    """Primitive integer offsets with max-norm at most ``radius``.

    In 2-D and radius 2 these are the 8 king moves plus 8 knight moves.
    """
    offs = []
    for o in itertools.product(range(-radius, radius + 1), repeat=dim):
        if all(c == 0 for c in o):
            continue
        if math.gcd(*[abs(c) for c in o]) != 1:
            continue
        offs.append(o)
    return np.array(offs, dtype=int)


@dataclass(eq=False)
class GridGraph:
    """Directed graph on chart nodes, edge weight = Finsler length of the edge."""

    norm: FinslerNorm
    radius: int
    matrix: csr_matrix
    nodes: np.ndarray  # (N, dim)
    half_cell: float

    @property
    def chart(self) -> Chart:
        return self.norm.chart

    def coords(self, idx) -> np.ndarray:
        return self.nodes[idx]


def _build_graph(F: FinslerNorm, radius: int) -> GridGraph:
    chart = F.chart
    shape = chart.shape
    nodes = chart.nodes().reshape(-1, chart.dim)
    idx = np.arange(nodes.shape[0]).reshape(shape)
    h = chart.spacing
    rows, cols, weights = [], [], []
    axis_weights = []
    for off in stencil_offsets(chart.dim, radius):
        src = idx
        dst = idx
        valid = np.ones(shape, dtype=bool)
        multi = np.indices(shape)
        tgt = []
        for ax, o in enumerate(off):
            t = multi[ax] + o
            if chart.periodic[ax]:
                t = np.mod(t, shape[ax])
            else:
                valid &= (t >= 0) & (t < shape[ax])
                t = np.clip(t, 0, shape[ax] - 1)
            tgt.append(t)
        dst = idx[tuple(tgt)]
        s = src[valid]
        d = dst[valid]
        start = nodes[s]
        delta = np.broadcast_to(off * h, start.shape)
        gp = start[:, None, :] + GAUSS2[None, :, None] * delta[:, None, :]
        w = 0.5 * F(gp, np.broadcast_to(delta[:, None, :], gp.shape)).sum(axis=1)
        rows.append(s)
        cols.append(d)
        weights.append(w)
        if np.abs(off).sum() == 1 and len(w):
            axis_weights.append(w.max())
    n = nodes.shape[0]
    mat = csr_matrix((np.concatenate(weights), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    half = 0.5 * max(axis_weights) if axis_weights else 0.0
    return GridGraph(F, radius, mat, nodes, half)


def grid_graph(F: FinslerNorm, radius: int = 2) -> GridGraph:
    key = ("graph", radius)
    if key not in F._cache:
        other = F.reversed()._cache.get(key)
        if other is not None:
            F._cache[key] = GridGraph(F, radius, other.matrix.T.tocsr(), other.nodes, other.half_cell)
        else:
            F._cache[key] = _build_graph(F, radius)
    return F._cache[key]


@dataclass(eq=False)
class DistanceField:
    """Grid of distances from (forward) or to (backward) a source set.

    ``forward``: values are d(source, x).  ``backward``: values are
    d(x, source).  ``touches_boundary`` marks nodes whose optimal grid path
    runs through a non-periodic truncation boundary (their values depend on
    where the chart was cut).
    """

    chart: Chart
    values: np.ndarray
    orientation: str
    source_nodes: np.ndarray
    reached: np.ndarray
    predecessors: np.ndarray
    roots: np.ndarray
    graph: GridGraph
    touches_boundary: np.ndarray = None
    extra: dict = field(default_factory=dict)

    def value_at_node(self, index) -> float:
        return float(self.values[tuple(index)])

    def value_at(self, p) -> float:
        from .charts import ScalarField

        key = "_interp"
        if key not in self.extra:
            self.extra[key] = ScalarField.from_samples(self.chart, self.values)
        return float(self.extra[key](np.asarray(p, dtype=float)))

    def node_path(self, flat_index: int) -> list[int]:
        chain = [int(flat_index)]
        while self.predecessors[chain[-1]] >= 0:
            chain.append(int(self.predecessors[chain[-1]]))
        return chain  # target ... source

    def path_to(self, flat_index: int) -> SampledCurve:
        """Grid path as a curve in travel direction (unwrapped coordinates).

        Forward fields: source -> node.  Backward fields: node -> source.
        """
        chain = self.node_path(flat_index)
        if self.orientation == "forward":
            chain = chain[::-1]
        pts = self.graph.nodes[chain]
        return SampledCurve(unwrap(self.chart, pts))

    def to_csv(self, path) -> None:
        nodes = self.graph.nodes
        vals = self.values.reshape(-1)
        reached = self.reached.reshape(-1)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i}" for i in range(self.chart.dim)] + ["value", "reached"])
            for k in range(len(vals)):
                w.writerow([f"{c:.10g}" for c in nodes[k]] + [f"{vals[k]:.10g}", int(reached[k])])


def unwrap(chart: Chart, pts) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    if len(pts) < 2 or not chart.any_periodic:
        return pts.copy()
    steps = chart.displacement(pts[:-1], pts[1:])
    return np.concatenate([pts[:1], pts[0] + np.cumsum(steps, axis=0)])


def _field_from_sources(F: FinslerNorm, sources: np.ndarray, orientation: str, radius: int) -> DistanceField:
    graph = grid_graph(F, radius)
    chart = F.chart
    mat = graph.matrix if orientation == "forward" else graph.matrix.T.tocsr()
    sources = np.atleast_1d(np.asarray(sources, dtype=int))
    if len(sources) == 1:
        dist, pred = dijkstra(mat, directed=True, indices=int(sources[0]), return_predecessors=True)
        roots = np.full(dist.shape, int(sources[0]))
    else:
        dist, pred, roots = dijkstra(mat, directed=True, indices=sources, return_predecessors=True,
                                     min_only=True)
    pred = np.where(pred < 0, -1, pred)
    reached = np.isfinite(dist)
    bmask = chart.boundary_mask().reshape(-1)
    touches = bmask.copy()
    order = np.argsort(dist, kind="stable")
    for k in order:
        pk = pred[k]
        if pk >= 0 and touches[pk]:
            touches[k] = True
    shape = chart.shape
    return DistanceField(chart, dist.reshape(shape), orientation, sources, reached.reshape(shape),
                         pred, np.asarray(roots), graph, touches.reshape(shape))


def distance_field(F: FinslerNorm, source, orientation: str = "forward", radius: int = 2) -> DistanceField:
    """Coarse (Dijkstra) field from a point, a node index tuple, or a node mask."""
    chart = F.chart
    if isinstance(source, np.ndarray) and source.dtype == bool:
        sources = np.flatnonzero(source.reshape(-1))
        if len(sources) == 0:
            raise ValueError("empty source set")
        return _field_from_sources(F, sources, orientation, radius)
    node = chart.nearest_index(np.asarray(source, dtype=float).reshape(-1))
    flat = int(np.ravel_multi_index(node, chart.shape))
    key = ("field", radius, orientation, flat)
    cache = F._cache.setdefault("fields", OrderedDict())
    if key in cache:
        cache.move_to_end(key)
        return cache[key]
    fld = _field_from_sources(F, np.array([flat]), orientation, radius)
    cache[key] = fld
    if len(cache) > _FIELD_CACHE_SIZE:
        cache.popitem(last=False)
    return fld


# ----------------------------------------------------------------------------
# curve shortening

def _grad_v_safe(F: FinslerNorm, x, v):
    _, w, hv, alpha, _ = F._split(x, v)
    alpha = np.maximum(alpha, 1e-300)
    return hv / alpha[..., None] + w


def _energy(F: FinslerNorm, X: np.ndarray):
    """Discrete energy M * sum(l_k^2) of a polyline and its gradient.

    ``X`` may carry leading batch axes; energies and lengths are summed
    over the batch, the gradient keeps the shape of ``X``.
    """
    M = X.shape[-2] - 1
    delta = np.diff(X, axis=-2)
    gp = X[..., :-1, None, :] + GAUSS2[:, None] * delta[..., None, :]
    dv = np.broadcast_to(delta[..., None, :], gp.shape)
    Fv = F(gp, dv)
    ell = 0.5 * Fv.sum(axis=-1)
    Fx = F.grad_x(gp, dv)
    Fg = _grad_v_safe(F, gp, dv)
    c = GAUSS2[:, None]
    d_start = 0.5 * ((1.0 - c) * Fx - Fg).sum(axis=-2)
    d_end = 0.5 * (c * Fx + Fg).sum(axis=-2)
    grad = np.zeros_like(X)
    grad[..., :-1, :] += 2 * M * ell[..., None] * d_start
    grad[..., 1:, :] += 2 * M * ell[..., None] * d_end
    return M * float((ell**2).sum()), grad, float(ell.sum())


def _bounds(chart: Chart, n_interior: int):
    b = []
    for _ in range(n_interior):
        for i, per in enumerate(chart.periodic):
            b.append((None, None) if per else (chart.lower[i], chart.upper[i]))
    return b


def shorten_once(F: FinslerNorm, X: np.ndarray, maxiter: int = 400) -> tuple[np.ndarray, float]:
    """Minimise the discrete energy over interior nodes; endpoints fixed."""
    X = np.array(X, dtype=float)
    if len(X) <= 2:
        return X, float(segment_lengths(F, X).sum())
    dim = X.shape[1]
    a, b = X[0], X[-1]

    def fun(z):
        Y = np.vstack([a, z.reshape(-1, dim), b])
        E, g, _ = _energy(F, Y)
        return E, g[1:-1].reshape(-1)

    res = minimize(fun, X[1:-1].reshape(-1), jac=True, method="L-BFGS-B",
                   bounds=_bounds(F.chart, len(X) - 2),
                   options=dict(maxiter=maxiter, ftol=1e-14, gtol=1e-11))
    Y = np.vstack([a, res.x.reshape(-1, dim), b])
    return Y, float(segment_lengths(F, Y).sum())


def _subdivide(X: np.ndarray) -> np.ndarray:
    mid = 0.5 * (X[:-1] + X[1:])
    out = np.empty((2 * len(X) - 1, X.shape[1]))
    out[0::2] = X
    out[1::2] = mid
    return out


def shorten(F: FinslerNorm, curve: SampledCurve, start_segments: int = 16,
            max_segments: int = 256, rtol: float = 1e-6) -> tuple[SampledCurve, float]:
    """Iterative curve shortening with node doubling.

    Stops when the relative length change between successive levels drops
    below ``rtol`` or ``max_segments`` is reached.
    """
    X = curve.resample(start_segments + 1).points
    X, length = shorten_once(F, X)
    while 2 * (len(X) - 1) <= max_segments:
        Y, new = shorten_once(F, _subdivide(X))
        change = abs(new - length) / max(abs(length), 1e-300)
        X, length = Y, new
        if change < rtol:
            break
    return SampledCurve(X), length


@dataclass(frozen=True)
class DistanceResult:
    value: float
    coarse: float
    reached: bool
    path: SampledCurve
    lower_bound: bool = False

    def __float__(self) -> float:
        return self.value


def _outside(chart: Chart, q) -> bool:
    return not bool(chart.contains(q))


def forward_distance(F: FinslerNorm, p, q, level: str = "refined", radius: int = 2,
                     initial_path: SampledCurve | None = None, max_segments: int = 128,
                     rtol: float = 1e-6, maxiter: int = 400) -> DistanceResult:
    """Distance d(p, q) of the norm ``F``.

    ``coarse``: directed Dijkstra between the nodes nearest to p and q.
    ``refined``: the coarse path with its ends moved to p and q, shortened
    until the relative length change is below ``rtol``.  With an
    ``initial_path`` the grid is skipped: the path is shortened in place for
    at most ``maxiter`` descent steps and ``coarse`` reports its seed length.
    If q lies beyond a non-periodic truncation bound the result is flagged
    unreached and carries the smallest distance to the truncation boundary,
    a lower bound for d(p, q).
    """
    chart = F.chart
    p = np.asarray(p, dtype=float).reshape(-1)
    q = np.asarray(q, dtype=float).reshape(-1)
    chart.check(p)
    if level not in ("coarse", "refined"):
        raise ValueError(f"unknown level {level!r}")
    if initial_path is not None and not _outside(chart, q):
        seed = SampledCurve(initial_path.points)
        seed_len = float(segment_lengths(F, seed.points).sum())
        if level == "coarse" or maxiter == 0:
            return DistanceResult(seed_len, seed_len, True, seed)
        X, length = shorten_once(F, seed.points, maxiter=maxiter)
        if seed_len <= length:
            return DistanceResult(seed_len, seed_len, True, seed)
        return DistanceResult(length, seed_len, True, SampledCurve(X))
    fld = distance_field(F, p, "forward", radius)
    if _outside(chart, q):
        bmask = chart.boundary_mask()
        lb = float(fld.values[bmask].min())
        return DistanceResult(lb, lb, False, SampledCurve(p[None]), lower_bound=True)
    qn = chart.nearest_index(q)
    flat = int(np.ravel_multi_index(qn, chart.shape))
    coarse = float(fld.values[qn])
    grid_path = fld.path_to(flat).points
    end = p + chart.displacement(p, q)
    if len(grid_path) >= 2:
        shift = grid_path[0] - p
        pts = grid_path - shift  # align the unwrapped start with p
        pts = np.vstack([p, pts[1:-1], pts[-1] + chart.displacement(pts[-1], q)])
    else:
        pts = np.vstack([p, end])
    if len(pts) < 2 or np.allclose(pts[0], pts[-1]):
        pts = np.vstack([p, end])
    curve = SampledCurve(pts)
    if level == "coarse":
        return DistanceResult(coarse, coarse, True, curve)
    if np.linalg.norm(curve.points[-1] - curve.points[0]) == 0.0:
        return DistanceResult(0.0, coarse, True, curve)
    start = int(np.clip(len(pts) - 1, 4, 16))
    refined_curve, length = shorten(F, curve, start, max_segments, rtol)
    direct = float(segment_lengths(F, curve.points).sum())
    if direct < length:
        return DistanceResult(direct, coarse, True, curve)
    return DistanceResult(length, coarse, True, refined_curve)


def backward_distance(F: FinslerNorm, p, q, **kw) -> DistanceResult:
    """d(q, p), computed as the reverse-norm distance from p to q."""
    return forward_distance(F.reversed(), p, q, **kw)


def symmetrized_distance(F: FinslerNorm, p, q, **kw) -> DistanceResult:
    fwd = forward_distance(F, p, q, **kw)
    bwd = backward_distance(F, p, q, **kw)
    return DistanceResult(0.5 * (fwd.value + bwd.value), 0.5 * (fwd.coarse + bwd.coarse),
                          fwd.reached and bwd.reached, fwd.path, fwd.lower_bound or bwd.lower_bound)


def local_distances(F: FinslerNorm, a, b, segments: int = 8) -> np.ndarray:
    """Distances between nearby point pairs ``a[k], b[k]`` by shortening straight chords.

    All chords are shortened together; their energies are independent so
    the joint minimiser is the per-chord minimiser.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = a + F.chart.displacement(a, np.atleast_2d(np.asarray(b, dtype=float)))
    s = np.linspace(0.0, 1.0, segments + 1)[None, :, None]
    X = a[:, None, :] + s * (b - a)[:, None, :]
    chord = np.array([segment_lengths(F, x).sum() for x in X])
    dim = X.shape[-1]
    ends = X[:, [0, -1]]

    def fun(z):
        Y = np.concatenate([ends[:, :1], z.reshape(len(X), -1, dim), ends[:, 1:]], axis=1)
        E, g, _ = _energy(F, Y)
        return E, g[:, 1:-1].reshape(-1)

    res = minimize(fun, X[:, 1:-1].reshape(-1), jac=True, method="L-BFGS-B",
                   bounds=_bounds(F.chart, len(X) * (segments - 1)),
                   options=dict(maxiter=200, ftol=1e-15, gtol=1e-12))
    Y = np.concatenate([ends[:, :1], res.x.reshape(len(X), -1, dim), ends[:, 1:]], axis=1)
    short = np.array([segment_lengths(F, y).sum() for y in Y])
    out = np.minimum(chord, short)
    out[np.all(a == b, axis=1)] = 0.0
    return out


def local_distance(F: FinslerNorm, a, b, segments: int = 8) -> float:
    """Distance between nearby points by shortening the straight chord."""
    return float(local_distances(F, a, b, segments)[0])


# ----------------------------------------------------------------------------
# balls and the Heine-Borel diagnostic

@dataclass(eq=False)
class BallMask:
    norm: FinslerNorm
    center: np.ndarray
    radius: float
    kind: str
    closed: bool
    mask: np.ndarray
    values: np.ndarray

    def contains(self, point) -> bool:
        """Membership of an arbitrary point, using refined distances."""
        d = _kind_distance(self.norm, self.center, point, self.kind, level="refined")
        return d <= self.radius if self.closed else d < self.radius


def _kind_distance(F, c, x, kind, level="refined") -> float:
    if kind == "forward":
        return forward_distance(F, c, x, level=level).value
    if kind == "backward":
        return backward_distance(F, c, x, level=level).value
    if kind == "symmetrized":
        return symmetrized_distance(F, c, x, level=level).value
    raise ValueError(f"unknown ball kind {kind!r}")


def _kind_values(F: FinslerNorm, center, kind: str, radius: int = 2) -> np.ndarray:
    fwd = lambda: distance_field(F, center, "forward", radius).values
    bwd = lambda: distance_field(F, center, "backward", radius).values
    if kind == "forward":
        return fwd()
    if kind == "backward":
        return bwd()
    if kind == "symmetrized":
        return 0.5 * (fwd() + bwd())
    raise ValueError(f"unknown ball kind {kind!r}")


def ball(F: FinslerNorm, center, r: float, kind: str = "forward", closed: bool = False) -> BallMask:
    """Grid mask of a forward, backward or symmetrized ball.

    Open balls use ``d < r``; closed balls ``d <= r + half a cell``.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    center = np.asarray(center, dtype=float).reshape(-1)
    vals = _kind_values(F, center, kind)
    tol = grid_graph(F).half_cell
    mask = vals <= r + tol if closed else vals < r
    return BallMask(F, center, float(r), kind, closed, mask, vals)


@dataclass(frozen=True)
class HeineBorelReport:
    radii: tuple
    truncations: tuple
    inclusions_hold: dict
    touches_boundary: dict
    escape: dict

    @property
    def noncompactness_evidence(self) -> bool:
        return any(self.escape.values())


def heine_borel_diagnostic(F: FinslerNorm, x, radii: Sequence[float],
                           truncations: Sequence[float] = (1.0, 2.0, 4.0)) -> HeineBorelReport:
    """Closed-ball inclusions and escape evidence under chart truncation.

    For every radius r checks, on grid masks,
    ``B+(x,r) & B-(x,r) <= Bs(x,r) <= B+(x,2r) & B-(x,2r)``, and records
    whether the symmetrized ball reaches a non-periodic truncation boundary
    for each chart size (bounds scaled about the centre at fixed cell size).
    Escape at every truncation is reported as evidence of non-compactness.
    """
    data = F.data
    if data.h.grid_sampled or data.omega.grid_sampled:
        truncations = (1.0,)
    x = np.asarray(x, dtype=float).reshape(-1)
    inclusions = {float(r): True for r in radii}
    touches = {float(r): [] for r in radii}
    for fac in truncations:
        chart = data.chart if fac == 1.0 else data.chart.scaled(fac)
        G = FinslerNorm(data.with_chart(chart), F.reverse) if fac != 1.0 else F
        fwd = distance_field(G, x, "forward").values
        bwd = distance_field(G, x, "backward").values
        sym = 0.5 * (fwd + bwd)
        tol = grid_graph(G).half_cell
        bmask = chart.boundary_mask()
        for r in radii:
            r = float(r)
            cap = (fwd <= r + tol) & (bwd <= r + tol)
            s_ball = sym <= r + tol
            s_ball_exact = sym <= r
            big = (fwd <= 2 * r) & (bwd <= 2 * r)
            ok = bool(np.all(~((fwd <= r) & (bwd <= r)) | s_ball_exact)) and bool(np.all(~s_ball_exact | big))
            inclusions[r] = inclusions[r] and ok and bool(np.all(~cap | (sym <= r + tol)))
            touches[r].append(bool(np.any(s_ball & bmask)))
    escape = {r: bool(t) and all(t) for r, t in touches.items()}
    return HeineBorelReport(tuple(float(r) for r in radii), tuple(truncations), inclusions,
                            {r: tuple(t) for r, t in touches.items()}, escape)


# ----------------------------------------------------------------------------
# the length metric generated by the symmetrized distance

@dataclass(frozen=True)
class LengthMetricResult:
    value: float
    level: int
    candidates: dict
    ds: float  # symmetrized distance from the same refined forward and backward runs
    d_h: float  # distance of the Riemannian metric h


def _riemannian_norm(F: FinslerNorm) -> FinslerNorm:
    if "riemannian" not in F._cache:
        F._cache["riemannian"] = FinslerNorm(F.data.riemannian())
    return F._cache["riemannian"]


def local_ds(F: FinslerNorm, a, b, segments: int = 8):
    """Symmetrized local distances for point pairs (scalar for a single pair)."""
    out = 0.5 * (local_distances(F, a, b, segments) + local_distances(F.reversed(), a, b, segments))
    return float(out[0]) if np.ndim(a) == 1 else out


def length_metric_ds(F: FinslerNorm, p, q, refinement: int = 4, perturbations: int = 2) -> LengthMetricResult:
    """Approximate the length metric of ds between p and q.

    Each candidate path is sampled at ``2**refinement + 1`` points and scored
    by the sum of ds over consecutive samples; the smallest score wins.
    Candidates: the h-geodesic, normal perturbations of it, and the optimal
    forward and backward paths.
    """
    p = np.asarray(p, dtype=float).reshape(-1)
    q = np.asarray(q, dtype=float).reshape(-1)
    H = _riemannian_norm(F)
    n = 2 ** int(refinement) + 1
    runs = {
        "h_geodesic": forward_distance(H, p, q),
        "forward": forward_distance(F, p, q),
        "backward": forward_distance(F.reversed(), p, q),
    }
    paths = {k: r.path for k, r in runs.items()}
    base = paths["h_geodesic"].resample(n).points
    if F.dim == 2 and perturbations:
        chord = base[-1] - base[0]
        L = np.linalg.norm(chord)
        if L > 0:
            normal = np.array([-chord[1], chord[0]]) / L
            bump = np.sin(np.pi * np.linspace(0, 1, n))[:, None] * normal[None]
            for k in range(1, perturbations + 1):
                for sgn in (1, -1):
                    paths[f"perturb{sgn * k:+d}"] = SampledCurve(base + sgn * 0.02 * k * L * bump)
    scores = {}
    for name, curve in paths.items():
        pts = curve.resample(n).points if name != "h_geodesic" else base
        if not bool(np.all(F.chart.contains(pts))):
            continue
        scores[name] = float(local_ds(F, pts[:-1], pts[1:]).sum())
    best = min(scores.values())
    ds = 0.5 * (runs["forward"].value + runs["backward"].value)
    return LengthMetricResult(best, int(refinement), scores, ds, runs["h_geodesic"].value)
