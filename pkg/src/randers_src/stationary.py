"""Standard stationary spacetimes and their Fermat (Randers) metrics."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .charts import Chart, MetricField, OneFormField, SampledCurve, ScalarField, fd_partials
from .distance import ball, forward_distance
from .finsler import FinslerNorm, RandersData, omega_h_norm, segment_lengths, validate
from .geodesics import geodesic_ivp


class InvalidData(ValueError):
    """Stationary or Randers data violating its defining inequalities."""


class NotSpacelike(ValueError):
    """A graph section fails to be spacelike."""


class PreconditionError(ValueError):
    """An initial vector is not null or has the wrong time orientation."""


class AccuracyWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class StationaryData:
    """Spacetime ``-beta dt^2 + omega (x) dt + dt (x) omega + g0`` on R x S."""

    beta: ScalarField
    g0: MetricField
    omega: OneFormField
    chart: Chart
    fd_step: float = 1e-3
    seams: tuple = ()
    name: str = ""

    @property
    def dim(self) -> int:
        return self.chart.dim

    def fields(self, x):
        x = self.chart.normalize(np.asarray(x, dtype=float))
        return self.beta(x), self.g0(x), self.omega(x)

    def spacetime_metric(self, x) -> np.ndarray:
        """Metric blocks at spatial point(s) ``x`` in coordinates (t, x)."""
        b, g0, w = self.fields(x)
        n = self.dim
        g = np.zeros(np.shape(b) + (n + 1, n + 1))
        g[..., 0, 0] = -b
        g[..., 0, 1:] = w
        g[..., 1:, 0] = w
        g[..., 1:, 1:] = g0
        return g

    def fermat(self) -> FinslerNorm:
        return FinslerNorm(fermat_from_stationary(self))


@dataclass(frozen=True)
class Event:
    t: float
    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))


def _grid_samples(chart: Chart, n: int = 33) -> np.ndarray:
    axes = [np.linspace(lo, hi, n, endpoint=not per)
            for lo, hi, per in zip(chart.lower, chart.upper, chart.periodic)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, chart.dim)


def fermat_from_stationary(sd: StationaryData, samples: int = 33) -> RandersData:
    """Randers data ``h = g0/beta + (omega/beta)^2``, one-form ``omega/beta``."""
    pts = _grid_samples(sd.chart, samples)
    b = sd.beta(pts)
    if np.any(~(b > 0)):
        k = int(np.argmin(b))
        raise InvalidData(f"beta <= 0 at {tuple(pts[k])}")

    def h(x):
        b, g0, w = sd.fields(x)
        wb = w / b[..., None]
        return g0 / b[..., None, None] + wb[..., :, None] * wb[..., None, :]

    def one_form(x):
        b, _, w = sd.fields(x)
        return w / b[..., None]

    def reduced(x):
        b, g0, _ = sd.fields(x)
        return g0 / b[..., None, None]

    return RandersData(MetricField(h), OneFormField(one_form), sd.chart, sd.fd_step, sd.seams, sd.name,
                       MetricField(reduced))


def stationary_from_randers(R: RandersData, samples: int = 33) -> StationaryData:
    """``beta = 1``, ``g0 = h - omega (x) omega``, same one-form."""
    rep = validate(R, samples)
    if not rep.valid:
        raise InvalidData(f"not a Randers metric: |omega|_h = {rep.max_omega_norm:.6g} "
                          f"at {rep.worst_point}")

    def g0(x):
        if R.reduced is not None:
            return R.reduced(R.chart.normalize(np.asarray(x, dtype=float)))
        h, w = R.fields(x)
        return h - w[..., :, None] * w[..., None, :]

    one = ScalarField(lambda x: np.ones(np.shape(x)[:-1]), grad=lambda x: np.zeros(np.shape(x)))
    return StationaryData(one, MetricField(g0), OneFormField(lambda x: R.fields(x)[1]),
                          R.chart, R.fd_step, R.seams, R.name)


# ----------------------------------------------------------------------------
# arrival time

@dataclass(frozen=True)
class ArrivalTime:
    time: float
    advance: float
    lift: SampledCurve  # points (t, x), params as in the spatial curve


def arrival_time(sd: StationaryData, curve: SampledCurve, t_start: float = 0.0,
                 F: FinslerNorm | None = None) -> ArrivalTime:
    """Arrival time of the future lightlike lift of a spatial curve."""
    F = F or sd.fermat()
    pts = curve.points
    seg = segment_lengths(F, pts)
    t = t_start + np.concatenate([[0.0], np.cumsum(seg)])
    lift = SampledCurve(np.column_stack([t, pts]), curve.params)
    return ArrivalTime(float(t[-1]), float(t[-1] - t_start), lift)


# ----------------------------------------------------------------------------
# null geodesics of the spacetime

def null_vector(sd: StationaryData, x, u, orientation: str = "future",
                F: FinslerNorm | None = None) -> np.ndarray:
    """Null vector ``(tdot, u)`` over spatial velocity ``u``."""
    F = F or sd.fermat()
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if orientation == "future":
        tdot = float(F(x, u))
    elif orientation == "past":
        tdot = -float(F.reversed()(x, u))
    else:
        raise ValueError(f"unknown orientation {orientation!r}")
    return np.concatenate([[tdot], u])


def _metric_pair(sd: StationaryData, X, V):
    """g(V, V) and g(K, V) for spacetime vectors over spatial points X."""
    g = sd.spacetime_metric(X)
    gv = np.einsum("...ij,...j->...i", g, V)
    return np.einsum("...i,...i->...", V, gv), gv[..., 0]


def spacetime_acceleration(sd: StationaryData, x, V) -> np.ndarray:
    """Geodesic acceleration ``-Gamma(V, V)`` with metric derivatives by finite differences."""
    x = np.asarray(x, dtype=float)
    V = np.asarray(V, dtype=float)
    g = sd.spacetime_metric(x)
    n = sd.dim
    dg = fd_partials(sd.spacetime_metric, x, sd.fd_step)  # (n, ..., n+1, n+1); d/dt = 0
    vx = V[..., 1:]
    # (d_alpha g) V^alpha, spatial alpha only
    dg_v = np.einsum("k...ij,...k->...ij", dg, vx)
    term1 = np.einsum("...ij,...j->...i", dg_v, V)
    quad = np.einsum("k...ij,...i,...j->...k", dg, V, V)
    half = np.zeros(V.shape)
    half[..., 1:] = 0.5 * quad
    rhs = half - term1
    del n
    return np.linalg.solve(g, rhs[..., None])[..., 0]


@dataclass(frozen=True)
class NullGeodesic:
    curve: SampledCurve  # points (t, x), params = affine parameter
    velocities: np.ndarray
    fermat_integral: np.ndarray  # running integral of F(xdot) (future) or reverse F (past)
    orientation: str
    null_drift: float
    killing_drift: float
    killing_initial: float
    escaped: bool = False


def integrate_null_geodesic(sd: StationaryData, e0: Event, v0, orientation: str = "future",
                            s_max: float = 1.0, tol: float = 1e-11, n_samples: int = 401,
                            F: FinslerNorm | None = None) -> NullGeodesic:
    """Integrate a spacetime null geodesic from ``e0`` with initial vector ``v0``.

    ``v0`` has components (tdot, xdot).  The null condition, to 1e-10, and
    the time orientation (sign of g(K, v0)) are preconditions.  Drift of
    g(v, v) and of g(K, v) along the flow is recorded; drift above 1e-6
    triggers an :class:`AccuracyWarning`.
    """
    F = F or sd.fermat()
    n = sd.dim
    x0 = sd.chart.check(e0.x)
    v0 = np.asarray(v0, dtype=float).reshape(-1)
    if v0.shape != (n + 1,):
        raise ValueError(f"expected a vector with {n + 1} components")
    if not np.any(v0):
        raise PreconditionError("zero initial vector")
    q, k = _metric_pair(sd, x0, v0)
    scale = max(1.0, float(np.dot(v0, v0)))
    if abs(q) > 1e-10 * scale:
        raise PreconditionError(f"initial vector is not null: g(v, v) = {q:.3e}")
    if orientation == "future" and not k < 0:
        raise PreconditionError("initial vector is not future pointing")
    if orientation == "past" and not k > 0:
        raise PreconditionError("initial vector is not past pointing")
    if orientation not in ("future", "past"):
        raise ValueError(f"unknown orientation {orientation!r}")
    G = F if orientation == "future" else F.reversed()

    def rhs(s, y):
        X = y[1:n + 1]
        V = y[n + 1:2 * n + 2]
        a = spacetime_acceleration(sd, X, V)
        return np.concatenate([V, a, [float(G(X, V[1:]))]])

    events = []
    for i, per in enumerate(sd.chart.periodic):
        if per:
            continue
        for bound, sgn in ((sd.chart.lower[i], 1.0), (sd.chart.upper[i], -1.0)):
            def ev(s, y, i=i, bound=bound, sgn=sgn):
                return sgn * (y[1 + i] - bound)
            ev.terminal = True
            ev.direction = -1
            events.append(ev)
    y0 = np.concatenate([[e0.t], x0, v0, [0.0]])
    sol = solve_ivp(rhs, (0.0, float(s_max)), y0, method="RK45", rtol=tol, atol=tol,
                    dense_output=True, events=events or None)
    s_end = float(sol.t[-1])
    ss = np.linspace(0.0, s_end, n_samples)
    ys = sol.sol(ss)
    ys[:, -1] = sol.y[:, -1]
    pts = ys[:n + 1].T
    vel = ys[n + 1:2 * n + 2].T
    qs, ks = _metric_pair(sd, pts[:, 1:], vel)
    null_drift = float(np.abs(qs).max())
    killing_drift = float(np.abs(ks - k).max())
    if null_drift > 1e-6 or killing_drift > 1e-6:
        warnings.warn(f"null geodesic constraint drift {max(null_drift, killing_drift):.2e}",
                      AccuracyWarning, stacklevel=2)
    return NullGeodesic(SampledCurve(pts, ss), vel, ys[-1], orientation, null_drift,
                        killing_drift, float(k), escaped=sol.status == 1)


@dataclass(frozen=True)
class ProjectionReport:
    max_deviation: float
    fermat_length: float
    deviation_per_length: float
    time_integral_mismatch: float
    monotone_time: bool
    min_time_margin: float


def project_and_compare(sd: StationaryData, geo: NullGeodesic, F: FinslerNorm | None = None,
                        tol: float = 1e-10) -> ProjectionReport:
    """Compare the spatial projection of a null geodesic with a Fermat geodesic.

    The projection is reparametrised by ``tau = |t - t0|``; the comparison
    curve is the unit speed geodesic of the Fermat metric (future) or of
    its reverse (past) with the same initial point and direction.
    """
    F = F or sd.fermat()
    G = F if geo.orientation == "future" else F.reversed()
    pts = geo.curve.points
    t, x = pts[:, 0], pts[:, 1:]
    vel = geo.velocities
    sign = 1.0 if geo.orientation == "future" else -1.0
    tau = sign * (t - t[0])
    # time monotonicity margin: sign * tdot - G(xdot) >= 0
    margin = sign * vel[:, 0] - G(x, vel[:, 1:])
    monotone = bool(np.all(sign * vel[:, 0] > 0)) and bool(np.all(margin > -1e-9))
    mismatch = float(np.abs(tau - geo.fermat_integral).max())
    L = float(tau[-1])
    u = vel[0, 1:] / float(G(x[0], vel[0, 1:]))
    fg = geodesic_ivp(G, x[0], u, t_max=L, tol=tol, n_samples=len(tau))
    spline = CubicSpline(tau, x, axis=0)
    s = fg.curve.params
    dev = sd.chart.displacement(spline(s), fg.curve.points)
    max_dev = float(np.linalg.norm(dev, axis=-1).max())
    return ProjectionReport(max_dev, L, max_dev / max(L, 1e-300), mismatch, monotone,
                            float(margin.min()))


# ----------------------------------------------------------------------------
# chronological futures

def chronological_future(sd: StationaryData, e0: Event, t: float, orientation: str = "future",
                         F: FinslerNorm | None = None) -> np.ndarray:
    """Grid mask of the time-t slice of I+(e0) (or I-(e0) for ``past``)."""
    F = F or sd.fermat()
    if orientation == "future":
        r = t - e0.t
        kind = "forward"
    elif orientation == "past":
        r = e0.t - t
        kind = "backward"
    else:
        raise ValueError(f"unknown orientation {orientation!r}")
    if r <= 0:
        return np.zeros(sd.chart.shape, dtype=bool)
    return ball(F, e0.x, r, kind=kind).mask


def in_chronological_future(sd: StationaryData, e0: Event, e1: Event,
                            F: FinslerNorm | None = None) -> bool:
    """``d(x0, x1) < t1 - t0`` with the refined distance."""
    F = F or sd.fermat()
    dt = e1.t - e0.t
    if dt <= 0:
        return False
    return forward_distance(F, e0.x, e1.x).value < dt


# ----------------------------------------------------------------------------
# graph sections and section changes

@dataclass(frozen=True)
class SectionReport:
    is_spacelike: bool
    margin: float
    sup: float
    worst_point: tuple


def _direction_net(dim: int, n: int) -> np.ndarray:
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        a = 2 * np.pi * np.arange(n) / n
        return np.column_stack([np.cos(a), np.sin(a)])
    rng = np.random.default_rng(0)
    u = rng.normal(size=(n, dim))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def spacelike_section_check(R: RandersData, f: ScalarField, directions: int = 256,
                            tol: float = 1e-9, points=None) -> SectionReport:
    """Estimate ``sup df(v)`` over the unit sphere ``R(v) = 1``.

    The supremum is taken over the chart nodes (or ``points``) and a net of
    ``directions`` directions.  Spacelike iff the supremum is below
    ``1 - tol``.
    """
    chart = R.chart
    pts = chart.nodes().reshape(-1, chart.dim) if points is None else np.asarray(points, float)
    if not f.has_gradient:
        pts = pts[chart.contains(pts, margin=chart.default_step)]
    df = f.gradient(pts)
    dirs = _direction_net(chart.dim, directions)
    F = FinslerNorm(R)
    P = np.repeat(pts[:, None, :], len(dirs), axis=1)
    D = np.broadcast_to(dirs[None], P.shape)
    vals = np.einsum("pi,pdi->pd", df, D) / F(P, D)
    k = np.unravel_index(np.argmax(vals), vals.shape)
    sup = float(vals[k])
    return SectionReport(sup < 1.0 - tol, 1.0 - sup, sup, tuple(float(c) for c in pts[k[0]]))


def induced_fermat_of_graph(sd: StationaryData, f: ScalarField, samples: int = 33) -> RandersData:
    """Fermat data of the splitting adapted to the graph ``t = f(x)``.

    ``g0f = g0 + omega df + df omega - beta df df``, ``omega_f = omega - beta df``
    with the same ``beta``.
    """
    def parts(x):
        b, g0, w = sd.fields(x)
        df = f.gradient(x)
        g0f = g0 + w[..., :, None] * df[..., None, :] + df[..., :, None] * w[..., None, :] \
            - b[..., None, None] * df[..., :, None] * df[..., None, :]
        return b, g0f, w - b[..., None] * df

    pts = _grid_samples(sd.chart, samples)
    if not f.has_gradient:
        pts = pts[sd.chart.contains(pts, margin=sd.chart.default_step)]
    _, g0f, _ = parts(pts)
    eig = np.linalg.eigvalsh(g0f).min(axis=-1)
    if np.any(eig <= 0):
        k = int(np.argmin(eig))
        raise NotSpacelike(f"graph is not spacelike at {tuple(float(c) for c in pts[k])}")
    induced = StationaryData(sd.beta, MetricField(lambda x: parts(x)[1]),
                             OneFormField(lambda x: parts(x)[2]), sd.chart, sd.fd_step,
                             sd.seams, sd.name + "-f")
    return fermat_from_stationary(induced, samples)


@dataclass(frozen=True, eq=False)
class SectionChange:
    data: RandersData
    via_graph: RandersData
    max_h_difference: float
    max_omega_difference: float
    report: SectionReport


def section_change(R: RandersData, f: ScalarField, tol: float = 1e-12,
                   samples: int = 33) -> SectionChange:
    """Randers data of ``R - df``, computed directly and through the graph.

    Direct route: ``(h, omega - df)``.  Graph route: the Fermat metric of the
    splitting adapted to ``t = f`` on the stationary data of ``R``.  The two
    are compared componentwise on a sample grid and must agree to ``tol``.
    """
    rep = spacelike_section_check(R, f)
    if not rep.is_spacelike:
        raise NotSpacelike(f"sup df(v) = {rep.sup:.6g} >= 1 at {rep.worst_point}")
    direct = RandersData(R.h, OneFormField(lambda x: R.fields(x)[1] - f.gradient(x)),
                         R.chart, R.fd_step, R.seams, R.name + "-f")
    graph = induced_fermat_of_graph(stationary_from_randers(R, samples), f, samples)
    pts = _grid_samples(R.chart, samples)
    if not f.has_gradient:
        pts = pts[R.chart.contains(pts, margin=R.chart.default_step)]
    h1, w1 = direct.fields(pts)
    h2, w2 = graph.fields(pts)
    dh = float(np.abs(h1 - h2).max())
    dw = float(np.abs(w1 - w2).max())
    scale = max(1.0, float(np.abs(h1).max()), float(np.abs(w1).max()))
    if dh > tol * scale or dw > tol * scale:
        raise AssertionError(f"section change routes disagree: dh={dh:.3e}, domega={dw:.3e}")
    if np.any(omega_h_norm(direct, pts) >= 1.0):
        raise NotSpacelike("R - df is not a Randers metric on the sample grid")
    return SectionChange(direct, graph, dh, dw, rep)
