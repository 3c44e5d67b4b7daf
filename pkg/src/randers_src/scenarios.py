"""Scenario registry: each scenario builds its data, runs its experiments and checks."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import models
from .causality import (causal_reachability_oracle, cauchy_development, cut_locus, distance_to_set,
                        horizon, mask_hausdorff_cells, minimizing_segments)
from .charts import Chart, SampledCurve, polyline_hausdorff
from .distance import (ball, distance_field, forward_distance, heine_borel_diagnostic,
                       length_metric_ds, symmetrized_distance)
from .finsler import FinslerNorm, RandersData, curve_length
from .geodesics import geodesic_ivp, shoot_connect
from .invariants import Check, invariant_suite
from .stationary import (Event, StationaryData, fermat_from_stationary, integrate_null_geodesic,
                         null_vector, project_and_compare, section_change, stationary_from_randers)
from .svg import contour_svg, profile_svg, tx_svg


class ConfigError(ValueError):
    """Invalid scenario configuration."""


@dataclass
class ScenarioConfig:
    scenario: str
    resolution: int | None = None
    tol: float = 1e-9
    out: str = "out"
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.resolution is not None and int(self.resolution) < 32:
            raise ConfigError("resolution must be at least 32 nodes per axis")
        if not self.tol > 0:
            raise ConfigError("tolerance must be positive")

    def res(self, default: int) -> int:
        return int(self.resolution) if self.resolution is not None else default

    def param(self, key: str, default):
        value = self.params.get(key, default)
        return type(default)(value) if isinstance(default, (int, float)) and not isinstance(default, bool) else value


@dataclass
class ScenarioResult:
    scenario: str
    metrics: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)  # file name -> text, or callable(path)

    def metric(self, key: str, value, tol: float | None = None):
        """Record a metric; ``tol`` is its comparison tolerance (None: informational)."""
        if isinstance(value, (bool, np.bool_)):
            value = bool(value)
        elif isinstance(value, (int, np.integer)):
            value = int(value)
        else:
            value = float(value)
        self.metrics[key] = value
        self.tolerances[key] = tol
        return value

    def check(self, name: str, passed: bool, value: float, limit: float, detail: str = ""):
        self.checks.append(Check(name, bool(passed), float(value), float(limit), detail))

    def extend(self, checks):
        self.checks.extend(checks)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    run: Callable[[ScenarioConfig], ScenarioResult]
    default_resolution: int


REGISTRY: dict[str, Scenario] = {}


def register(name: str, description: str, default_resolution: int):
    def wrap(fn):
        REGISTRY[name] = Scenario(name, description, fn, default_resolution)
        return fn
    return wrap


def run_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    if cfg.scenario not in REGISTRY:
        raise ConfigError(f"unknown scenario {cfg.scenario!r}; known: {', '.join(REGISTRY)}")
    return REGISTRY[cfg.scenario].run(cfg)


# ----------------------------------------------------------------------------
# shared experiments

def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else str(int(v)) if isinstance(v, (bool, np.bool_, int, np.integer))
                              else f"{float(v):.10g}" for v in row))
    return "\n".join(lines) + "\n"


def projection_study(res: ScenarioResult, sd: StationaryData, rng, lower, upper,
                     launches: int = 10, length: float = 1.0):
    """Null geodesics vs Fermat geodesics, future against F and past against the reverse."""
    F = sd.fermat()
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    rows = []
    start = time.perf_counter()
    worst = {"future": [0.0, 0.0, True], "past": [0.0, 0.0, True]}
    for k in range(launches):
        x0 = lower + (upper - lower) * rng.random(len(lower))
        if sd.dim == 1:
            u = np.array([rng.choice([-1.0, 1.0])])
        else:
            ang = rng.uniform(0, 2 * np.pi)
            u = np.array([np.cos(ang), np.sin(ang)])
        for ori in ("future", "past"):
            G = F if ori == "future" else F.reversed()
            v = null_vector(sd, x0, u, ori, F)
            geo = integrate_null_geodesic(sd, Event(0.0, x0), v, ori, s_max=length / float(G(x0, u)), F=F)
            rep = project_and_compare(sd, geo, F)
            w = worst[ori]
            w[0] = max(w[0], rep.deviation_per_length)
            w[1] = max(w[1], rep.time_integral_mismatch)
            w[2] = w[2] and rep.monotone_time
            rows.append([k, ori, *x0, *u, rep.fermat_length, rep.max_deviation, rep.time_integral_mismatch])
    elapsed = time.perf_counter() - start
    for ori, (dev, mis, mono) in worst.items():
        res.metric(f"projection_{ori}_deviation_per_length", dev, 1e-3)
        res.metric(f"projection_{ori}_time_mismatch", mis, 1e-4)
        res.check(f"projection ({ori}): deviation per unit Fermat length", dev < 1e-3, dev, 1e-3)
        res.check(f"projection ({ori}): |t advance - integral of F|", mis < 1e-4, mis, 1e-4)
        res.check(f"projection ({ori}): time monotone along the lift", mono, float(mono), 1.0)
    res.metric("projection_seconds", elapsed)
    header = ["launch", "orientation"] + [f"x{i}" for i in range(sd.dim)] + [f"u{i}" for i in range(sd.dim)] \
        + ["fermat_length", "max_deviation", "time_mismatch"]
    res.artifacts["projection.csv"] = csv_text(header, rows)


def chain_study(res: ScenarioResult, F: FinslerNorm, rng, lower, upper, pairs: int,
                check_coincidence: bool):
    """ds <= ds_l <= d_h on random pairs; optionally ds_l close to d_h."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    slack = 1e-5  # relative slack for shortening tolerances
    rows = []
    lo_gap = up_gap = coincide = 0.0
    for k in range(pairs):
        p, q = lower + (upper - lower) * rng.random((2, F.dim))
        lm = length_metric_ds(F, p, q, refinement=4)
        lo_gap = max(lo_gap, (lm.ds - lm.value) / lm.value)
        up_gap = max(up_gap, (lm.value - lm.d_h) / lm.d_h)
        coincide = max(coincide, abs(lm.value - lm.d_h) / lm.d_h)
        rows.append([*p, *q, lm.ds, lm.value, lm.d_h])
    res.metric("chain_pairs", pairs)
    res.metric("chain_max_ds_excess", lo_gap, slack)
    res.metric("chain_max_dsl_excess", up_gap, slack)
    res.check(f"ds <= ds_l on {pairs} pairs", lo_gap <= slack, lo_gap, slack, "relative")
    res.check(f"ds_l <= d_h on {pairs} pairs", up_gap <= slack, up_gap, slack, "relative")
    if check_coincidence:
        res.metric("chain_max_dsl_vs_dh", coincide, 0.02)
        res.check("|ds_l - d_h| / d_h at refinement 4", coincide < 0.02, coincide, 0.02)
    header = [f"p{i}" for i in range(F.dim)] + [f"q{i}" for i in range(F.dim)] + ["ds", "ds_l", "d_h"]
    res.artifacts["distance_chain.csv"] = csv_text(header, rows)


def roundtrip_study(res: ScenarioResult, R: RandersData, rng, n: int = 10_000):
    """Randers -> stationary -> Randers at random points."""
    chart = R.chart
    pts = np.asarray(chart.lower) + np.asarray(chart.extent) * rng.random((n, chart.dim))
    back = fermat_from_stationary(stationary_from_randers(R))
    h1, w1 = R.fields(pts)
    h2, w2 = back.fields(pts)
    err = max(float(np.abs(h1 - h2).max()), float(np.abs(w1 - w2).max()))
    res.metric("roundtrip_error", err, 1e-12)
    res.check(f"Randers -> stationary -> Randers round trip at {n} points", err <= 1e-12, err, 1e-12)


def section_change_study(res: ScenarioResult, R: RandersData, f, rng, pairs, curves,
                         cell: float, lower, upper):
    """Both routes of R - df, length shift, ds invariance and pregeodesic agreement."""
    sc = section_change(R, f, tol=1e-12)
    route = max(sc.max_h_difference, sc.max_omega_difference)
    res.metric("section_change_route_difference", route, 1e-12)
    res.check("section change: direct and graph routes agree", route <= 1e-12, route, 1e-12)
    F, Ff = FinslerNorm(R), FinslerNorm(sc.data)
    shift = 0.0
    for c in curves:
        pts = c.points
        expected = float(f(pts[0]) - f(pts[-1]))
        shift = max(shift, abs(curve_length(Ff, c) - curve_length(F, c) - expected))
    res.metric("section_change_length_shift_error", shift, 1e-9)
    res.check("section change: length shift equals f(p) - f(q)", shift <= 1e-9, shift, 1e-9)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    ds_gap = 0.0
    pts = lower + (upper - lower) * rng.random((pairs, 2, R.dim))
    for p, q in pts:
        ds_gap = max(ds_gap, abs(symmetrized_distance(F, p, q).value - symmetrized_distance(Ff, p, q).value))
    res.metric("section_change_ds_difference", ds_gap, 2 * cell)
    res.check("section change: ds invariant", ds_gap <= 2 * cell, ds_gap, 2 * cell, "two grid cells")
    p, q = pts[0]
    if R.dim == 1:
        a = forward_distance(F, p, q).path.points
        b = forward_distance(Ff, p, q).path.points
    else:
        a = shoot_connect(F, p, q)[0].curve.points
        b = shoot_connect(Ff, p, q)[0].curve.points
    haus = polyline_hausdorff(SampledCurve(a).resample(4001).points, SampledCurve(b).resample(4001).points)
    res.metric("section_change_pregeodesic_hausdorff", haus, 1e-3)
    res.check("section change: pregeodesic point sets agree", haus < 1e-3, haus, 1e-3, "Hausdorff")
    return sc


def _random_curves(rng, lower, upper, count: int = 5, n: int = 400) -> list[SampledCurve]:
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    s = np.linspace(0.0, 1.0, n)[:, None]
    out = []
    for _ in range(count):
        a, b = lower + (upper - lower) * rng.random((2, len(lower)))
        wiggle = 0.1 * (upper - lower) * np.sin(np.pi * s * rng.integers(1, 4)) * rng.uniform(-1, 1, len(lower))
        out.append(SampledCurve(np.clip(a + s * (b - a) + wiggle, lower, upper)))
    return out


def _axis_ball_edge(F: FinslerNorm, r: float) -> float:
    """Largest node on the positive first axis inside the open forward ball about 0."""
    chart = F.chart
    mask = ball(F, np.zeros(chart.dim), r).mask
    j = chart.nearest_index(np.zeros(chart.dim))
    xs = chart.axes()[0]
    line = mask[(slice(None),) + tuple(j[1:])]
    inside = xs[(xs >= 0) & line]
    return float(inside.max())


def _path_upper(F: FinslerNorm, p, q, refine: int = 8) -> float:
    """Length of the grid path from p to q, subdivided ``refine`` times: an upper bound for d(p, q)."""
    pts = forward_distance(F, p, q, level="coarse").path.points
    s = np.linspace(0.0, 1.0, refine + 1)[:-1, None]
    fine = (pts[:-1, None, :] + s[None] * np.diff(pts, axis=0)[:, None, :]).reshape(-1, pts.shape[1])
    return curve_length(F, SampledCurve(np.vstack([fine, pts[-1:]])))


def _distance_artifacts(res: ScenarioResult, F: FinslerNorm, centre, name: str):
    field = distance_field(F, centre, "forward")
    res.artifacts[f"{name}.csv"] = field.to_csv
    if F.dim == 2:
        finite = field.values[np.isfinite(field.values)]
        levels = np.linspace(0, finite.max(), 12)[1:-1]
        res.artifacts[f"{name}.svg"] = contour_svg(F.chart, field.values, levels,
                                                   title=f"forward distance from {tuple(centre)}")


# ----------------------------------------------------------------------------
# scenarios

@register("flat", "Euclidean plane: distances, projection and distance chain", 81)
def run_flat(cfg: ScenarioConfig) -> ScenarioResult:
    res = ScenarioResult("flat")
    rng = np.random.default_rng(cfg.seed)
    R = models.flat(cfg.res(81))
    F = FinslerNorm(R)
    d = res.metric("distance_unit", forward_distance(F, (-0.5, 0.0), (0.5, 0.0)).value, 1e-3)
    res.check("d((-0.5,0),(0.5,0)) = 1", abs(d - 1) < 1e-3, abs(d - 1), 1e-3)
    roundtrip_study(res, R, rng)
    projection_study(res, stationary_from_randers(R), rng, (-0.8, -0.8), (0.8, 0.8),
                     cfg.param("launches", 10))
    chain_study(res, F, rng, (-1.5, -1.5), (1.5, 1.5), cfg.param("chain_pairs", 20), True)
    res.extend(invariant_suite(R, rng, ((0.1, 0.2), (0.6, 0.3)), tol=cfg.tol))
    _distance_artifacts(res, F, (0.0, 0.0), "distance")
    return res


@register("constant-form", "Euclidean plane with the exact one-form a dx", 81)
def run_constant_form(cfg: ScenarioConfig) -> ScenarioResult:
    res = ScenarioResult("constant-form")
    rng = np.random.default_rng(cfg.seed)
    a = cfg.param("a", 0.5)
    if not abs(a) < 1:
        raise ConfigError("constant-form needs |a| < 1")
    R = models.constant_form(a, cfg.res(81))
    F = FinslerNorm(R)
    cell = float(R.chart.spacing[0])
    res.metric("a", a)
    p, q = (-0.5, 0.3), (0.5, 0.3)
    fwd = res.metric("distance_forward", forward_distance(F, p, q).value, 1e-3)
    bwd = res.metric("distance_backward", forward_distance(F, q, p).value, 1e-3)
    ds = res.metric("distance_symmetrized", symmetrized_distance(F, p, q).value, 1e-3)
    for label, got, want in (("d = (1+a) dx", fwd, 1 + a), ("reverse = (1-a) dx", bwd, 1 - a),
                             ("ds = dx", ds, 1.0)):
        res.check(label, abs(got - want) < 1e-3, abs(got - want), 1e-3)
    edge = res.metric("forward_ball_edge", _axis_ball_edge(F, 1.0), cell)
    res.check("forward ball r=1 edge on +x axis at 1/(1+a)", abs(edge - 1 / (1 + a)) <= cell,
              abs(edge - 1 / (1 + a)), cell, "one grid cell")
    roundtrip_study(res, R, rng)
    f = models.linear_potential(a)
    sc = section_change_study(res, R, f, rng, 5, _random_curves(rng, (-1.5, -1.5), (1.5, 1.5)),
                              cell, (-1.2, -1.2), (1.2, 1.2))
    w = float(np.abs(sc.data.fields(R.chart.nodes().reshape(-1, 2))[1]).max())
    res.metric("section_changed_one_form_max", w, 1e-12)
    res.check("R - df is the Euclidean norm", w <= 1e-12, w, 1e-12)
    projection_study(res, stationary_from_randers(R), rng, (-0.8, -0.8), (0.8, 0.8),
                     cfg.param("launches", 10))
    chain_study(res, F, rng, (-1.5, -1.5), (1.5, 1.5), cfg.param("chain_pairs", 20), True)
    res.extend(invariant_suite(R, rng, ((0.1, 0.2), (0.6, 0.3)), tol=cfg.tol))
    _distance_artifacts(res, F, (0.0, 0.0), "distance")
    return res


@register("strip-cylinder", "Cylinder with two bump one-forms: finite downward length, bounded ds", 48)
def run_strip(cfg: ScenarioConfig) -> ScenarioResult:
    res = ScenarioResult("strip-cylinder")
    rng = np.random.default_rng(cfg.seed)
    height = cfg.param("height", 8.0)
    R = models.strip_cylinder(height, cfg.res(48))
    F = FinslerNorm(R)
    # downward line x = 3, sampled densely near y = 0 and sparsely far out
    T = cfg.param("T", 1e6)
    U = np.arcsinh(T)
    y = np.sinh(np.linspace(U, -U, 8001))
    line = SampledCurve(np.column_stack([np.full_like(y, 3.0), y]))
    truncated = curve_length(F, line)
    tail = 2 * (np.pi / 2 - np.arctan(T))  # exact remainder of the integrand 1/(1+y^2)
    total = res.metric("downward_line_length", truncated + tail, 1e-3)
    res.metric("downward_line_tail_bound", tail)
    res.check("downward line x=3 has length pi", abs(total - np.pi) < 1e-3, abs(total - np.pi), 1e-3)
    # forward incompleteness: the downward ray escapes with bounded length,
    # while the upward ray grows without bound
    down, up = [], []
    for L in (10.0, 100.0, 1e4):
        s = np.sinh(np.linspace(0.0, np.arcsinh(L), 4001))
        down.append(curve_length(F, SampledCurve(np.column_stack([np.full_like(s, 3.0), -s]))))
        up.append(curve_length(F, SampledCurve(np.column_stack([np.full_like(s, 3.0), s]))))
    res.metric("downward_ray_length_1e4", down[-1], 1e-6)
    res.metric("upward_ray_length_1e4", up[-1], 1e-3)
    bounded = bool(np.all(np.diff(down) > 0) and down[-1] < np.pi / 2)
    res.check("downward ray: length bounded by pi/2 while escaping", bounded, down[-1], np.pi / 2)
    res.check("upward ray: length unbounded", up[-1] > 1e4, up[-1], 1e4)
    geo = geodesic_ivp(F, (3.0, 0.0), (0.0, -1.0), t_max=4 * height, tol=cfg.tol)
    res.metric("downward_geodesic_escaped", geo.escaped)
    res.check("downward geodesic leaves the truncated chart", geo.escaped, float(geo.escaped), 1.0)
    # ds bound on random pairs: lengths of explicit grid paths bound d from above
    pairs = cfg.param("pairs", 50)
    bound = 12 + np.pi
    lo = np.array([-6.0, -height])
    pts = lo + np.array([12.0, 2 * height]) * rng.random((pairs, 2, 2))
    vals = [0.5 * (_path_upper(F, p, q) + _path_upper(F, q, p)) for p, q in pts]
    dmax = res.metric("ds_upper_max_random_pairs", max(vals), None)
    res.check(f"ds <= 12 + pi on {pairs} random pairs", dmax <= bound, dmax, bound, "path-length upper bound")
    res.artifacts["ds_pairs.csv"] = csv_text(["p0", "p1", "q0", "q1", "ds_upper"],
                                             [[*p, *q, v] for (p, q), v in zip(pts, vals)])
    hb = heine_borel_diagnostic(F, (0.0, 0.0), radii=(1.0, bound))
    res.metric("heine_borel_escape", hb.noncompactness_evidence)
    res.check("Heine-Borel escape flag raised", hb.escape[bound], float(hb.escape[bound]), 1.0)
    res.check("small symmetrized ball stays inside", not hb.escape[1.0], float(hb.escape[1.0]), 0.0)
    projection_study(res, stationary_from_randers(R), rng, (1.5, -3.0), (4.5, 3.0),
                     cfg.param("launches", 10))
    roundtrip_study(res, R, rng)
    res.extend(invariant_suite(R, rng, ((2.5, 0.5), (0.3, 1.0)), tol=cfg.tol))
    _distance_artifacts(res, F, (3.0, 0.0), "distance")
    return res


@register("hyperbola-section", "Hyperbola branch as a section of 1+1 Minkowski space", 401)
def run_hyperbola(cfg: ScenarioConfig) -> ScenarioResult:
    res = ScenarioResult("hyperbola-section")
    rng = np.random.default_rng(cfg.seed)
    extent = cfg.param("extent", 20.0)
    start = time.perf_counter()
    sd_long = models.hyperbola_section(extent, cfg.res(401))
    F_long = sd_long.fermat()
    th = np.linspace(-extent, extent, 40001)  # odd count keeps the corner at a node
    length = curve_length(F_long, SampledCurve(th[:, None]))
    tail = 2 * np.exp(-extent)
    total = res.metric("total_fermat_length", length + tail, 1e-3)
    res.metric("total_fermat_length_tail_bound", tail)
    res.metric("total_fermat_length_seconds", time.perf_counter() - start)
    res.check("total Fermat length of the line is 2", abs(total - 2) < 1e-3, abs(total - 2), 1e-3)
    res.check("analytic tail bound", tail < 1e-8, tail, 1e-8)
    back = curve_length(F_long.reversed(), SampledCurve(th[:, None]))
    res.metric("reverse_length_grows", back > 1e8)
    res.check("reverse length of the line diverges", back > 1e8, back, 1e8)
    # distances on a window where cosh - sinh has full relative precision
    window = cfg.param("window", 8.0)
    sd = models.hyperbola_section(window, int(round(20 * window)) + 1)
    F = sd.fermat()
    R = F.data
    cell = float(R.chart.spacing[0])
    hb = heine_borel_diagnostic(F, (0.0,), radii=(0.9,), truncations=(0.5, 1.0))
    res.metric("symmetrized_ball_escape", hb.noncompactness_evidence)
    res.check("symmetrized ball r=0.9 is a bounded interval", not hb.escape[0.9], float(hb.escape[0.9]), 0.0)
    fb = ball(F, (0.0,), 1.5, "forward").mask
    bb = ball(F, (0.0,), 1.5, "backward").mask
    res.metric("forward_ball_reaches_upper_end", bool(fb[-1]))
    res.metric("backward_ball_reaches_lower_end", bool(bb[0]))
    res.check("forward ball r=1.5 reaches the truncation (forward incomplete)", bool(fb[-1]), float(fb[-1]), 1.0)
    res.check("backward ball r=1.5 reaches the truncation (backward incomplete)", bool(bb[0]), float(bb[0]), 1.0)
    g0 = float(sd.fields(np.array([[-1.0]]))[1].reshape(-1)[0])
    res.check("g0(v, v) = 1 on the unit tangent", abs(g0 - 1) < 1e-15, abs(g0 - 1), 1e-15)
    roundtrip_study(res, R, rng)
    f = models.hyperbola_flat_section()
    curves = [SampledCurve(np.linspace(a, b, 2001)[:, None]) for a, b in ((-3.0, 3.0), (2.0, -2.0), (0.5, 3.0))]
    sc = section_change_study(res, R, f, rng, 5, curves, cell, (-3.0,), (3.0,))
    nodes = R.chart.nodes().reshape(-1, 1)
    h_f, w_f = sc.data.fields(nodes)
    err = max(float(np.abs(h_f[:, 0, 0] - np.cosh(nodes[:, 0]) ** 2).max() / np.cosh(window) ** 2),
              float(np.abs(w_f).max()))
    res.metric("flat_section_error", err, 1e-12)
    res.check("section change to the flat slice gives cosh^2 and no one-form", err <= 1e-12, err, 1e-12)
    Ff = FinslerNorm(sc.data)
    Lf = curve_length(Ff, SampledCurve(np.linspace(-5.0, 5.0, 2001)[:, None]))
    res.metric("flat_section_length_5", Lf, 1e-6)
    res.check("flat slice length of [-5, 5] is 2 sinh 5", abs(Lf / (2 * np.sinh(5)) - 1) < 1e-6,
              abs(Lf / (2 * np.sinh(5)) - 1), 1e-6)
    res.extend(invariant_suite(R, rng, ((2.0,), (1.0,)), sd=sd, tol=cfg.tol))
    xs = R.chart.axes()[0]
    fwd = distance_field(F, (0.0,), "forward").values
    bwd = distance_field(F, (0.0,), "backward").values
    res.artifacts["distance.csv"] = csv_text(["x0", "forward", "backward", "symmetrized"],
                                             zip(xs, fwd, bwd, 0.5 * (fwd + bwd)))
    clip = np.abs(xs) <= 3
    res.artifacts["distance.svg"] = profile_svg(xs[clip], {"forward": fwd[clip], "backward": np.minimum(bwd[clip], 3),
                                                           "symmetrized": np.minimum(0.5 * (fwd + bwd)[clip], 3)},
                                                title="distances from 0 (clipped at 3)")
    return res


@register("ds-cauchy-sequence", "Sequence that is Cauchy for ds without converging", 41)
def run_ds_cauchy(cfg: ScenarioConfig) -> ScenarioResult:
    res = ScenarioResult("ds-cauchy-sequence")
    rng = np.random.default_rng(cfg.seed)
    n_max = cfg.param("n_max", 6)
    R, curves = models.ds_cauchy_sequence(n_max, cfg.res(41))
    F = FinslerNorm(R)
    seed_points = cfg.param("seed_points", 513)
    maxiter = cfg.param("maxiter", 20)
    rows = []
    total = 0.0
    for cv in curves:
        idx = np.linspace(0, len(cv.samples) - 1, seed_points).astype(int)
        path = SampledCurve(cv.samples[idx])
        mirror = SampledCurve((cv.samples[idx] * [-1.0, 1.0])[::-1])
        f = forward_distance(F, path.start, path.end, initial_path=path, maxiter=maxiter)
        b = forward_distance(F, mirror.start, mirror.end, initial_path=mirror, maxiter=maxiter)
        bound = 2.0 ** -cv.n
        res.metric(f"d_forward_{cv.n}", f.value, 1e-6)
        res.metric(f"d_backward_{cv.n}", b.value, 1e-6)
        res.check(f"d(p_{cv.n}, p_{cv.n + 1}) < 2^-{cv.n}", f.value < bound, f.value, bound)
        res.check(f"d(p_{cv.n + 1}, p_{cv.n}) < 2^-{cv.n}", b.value < bound, b.value, bound)
        total += 0.5 * (f.value + b.value)
        rows.append([cv.n, f.value, b.value, bound])
    res.metric("ds_series_bound", total, 1e-6)
    res.check("sum of ds steps is finite while |p_n - p_m| >= 1", total < 1.0, total, 1.0)
    res.artifacts["sequence.csv"] = csv_text(["n", "d_forward", "d_backward", "bound"], rows)
    tube = np.vstack([cv.samples[::4000] for cv in curves])
    res.extend(invariant_suite(R, rng, ((-0.9, 1.5), (0.0, 1.0)), extra_points=tube, tol=cfg.tol))
    res.artifacts["curves.svg"] = contour_svg(
        R.chart, np.zeros(R.chart.shape), [], curves=[c.samples[::200] for c in curves]
        + [c.samples[::200] * [-1, 1] for c in curves], title="tube curves and their mirrors")
    return res


def _disk_chart(res_n: int) -> Chart:
    return Chart((-1.25, -1.25), (1.25, 1.25), resolution=(res_n, res_n))


@register("disk-cut-locus", "Distance to the complement of the unit disk and its cut locus", 101)
def run_disk(cfg: ScenarioConfig) -> ScenarioResult:
    res = ScenarioResult("disk-cut-locus")
    rng = np.random.default_rng(cfg.seed)
    chart = _disk_chart(cfg.res(101))
    R = models.euclidean_data(chart, name="disk")
    F = FinslerNorm(R)
    C = models.disk_complement(chart)
    sd = distance_to_set(F, C, "from_set")
    nodes = chart.nodes()
    r = np.linalg.norm(nodes, axis=-1)
    inside = r < 1
    err = res.metric("rho_error", float(np.abs(sd.values[inside] - (1 - r[inside])).max()), 1e-3)
    res.check("rho_C = 1 - |p|", err < 1e-3, err, 1e-3)
    cl = cut_locus(F, C, sd)
    cell = float(chart.spacing[0])
    flagged = cl.region.mask
    far = float(r[flagged].max()) / cell if flagged.any() else np.inf
    res.metric("cut_flagged_nodes", int(flagged.sum()))
    res.metric("cut_max_distance_cells", far, 2.0)
    res.check("cut locus within 2 cells of the origin", flagged.any() and far <= 2, far, 2.0, "cells")
    agree = res.metric("cut_agreement", cl.agreement(), 0.01)
    res.check("gradient test agrees with foot count", agree > 0.99, agree, 0.99)
    n_off = minimizing_segments(F, C, (0.5, 0.0), sd=sd).count
    n_org = minimizing_segments(F, C, (0.0, 0.0), restarts=16, sd=sd).count
    res.metric("segments_at_half", n_off)
    res.metric("segments_at_origin", n_org)
    res.check("one minimizing segment at (0.5, 0)", n_off == 1, n_off, 1)
    res.check("several minimizing segments at the origin", n_org >= 2, n_org, 2)
    res.extend(invariant_suite(R, rng, ((0.1, 0.2), (0.6, 0.3)), tol=cfg.tol))
    res.artifacts["rho.csv"] = sd.to_csv
    res.artifacts["rho.svg"] = contour_svg(chart, sd.values, np.linspace(0.1, 0.9, 9), overlay=flagged,
                                           title="distance from the disk complement and cut nodes")
    return res


def _two_disk_chart(res_n: int) -> Chart:
    return Chart((-2.0, -1.5), (2.0, 1.5), resolution=(res_n, int(res_n * 0.75) + 1))


@register("two-disk-horizon", "Horizon of the complement of two disks; crease on the bisector", 81)
def run_two_disk(cfg: ScenarioConfig) -> ScenarioResult:
    res = ScenarioResult("two-disk-horizon")
    rng = np.random.default_rng(cfg.seed)
    n = cfg.res(81)
    chart = _two_disk_chart(n)
    R = models.euclidean_data(chart, name="two-disk")
    C = models.two_disks(chart)
    A = C.complement()
    probe = (0.0, 0.7)
    hg = horizon(R, A, 0.0, "future", generator_points=[probe])
    cell = float(chart.spacing[0])
    xs = chart.nodes()[..., 0]
    crease = hg.crease
    off = float(np.abs(xs[crease]).max()) / cell if crease.any() else np.inf
    res.metric("crease_nodes", int(crease.sum()))
    res.metric("crease_max_offset_cells", off, 2.0)
    res.check("crease lies on the bisector x = 0", crease.any() and off <= 2, off, 2.0, "cells")
    agree = res.metric("cut_agreement", hg.cut.agreement(), 0.01)
    res.check("gradient test agrees with foot count", agree > 0.99, agree, 0.99)
    res.metric("generators_at_probe", len(hg.generators))
    res.check("two horizon generators through a bisector point", len(hg.generators) == 2,
              len(hg.generators), 2)
    sdm = stationary_from_randers(R)
    null = 0.0
    for g in hg.generators:
        P = g.points
        V = np.diff(P, axis=0)
        G = sdm.spacetime_metric(0.5 * (P[1:, 1:] + P[:-1, 1:]))
        null = max(null, float(np.abs(np.einsum("ni,nij,nj->n", V, G, V)).max()))
    res.metric("generator_null_residual", null, 1e-9)
    res.check("generators are lightlike", null < 1e-9, null, 1e-9)
    if cfg.param("doubling", True):
        fine = _two_disk_chart(2 * n - 1)
        Rf = models.euclidean_data(fine, name="two-disk")
        cf = cut_locus(FinslerNorm(Rf), models.two_disks(fine), count_feet=True)
        coarse_count = int(hg.cut.region.mask.sum())
        ratio = cf.counts["total"] / coarse_count
        res.metric("crease_count_ratio", ratio, 0.35)
        res.check("crease count doubles under refinement (finite length)", abs(ratio - 2) <= 0.35,
                  ratio, 2.0, "expected 2 +/- 0.35")
        fagree = res.metric("cut_agreement_refined", cf.agreement(), 0.01)
        res.check("gradient test agrees with foot count (refined)", fagree > 0.99, fagree, 0.99)
    res.extend(invariant_suite(R, rng, ((0.1, 0.2), (0.6, 0.3)), tol=cfg.tol))
    res.artifacts["horizon.csv"] = hg.to_csv
    res.artifacts["horizon.svg"] = contour_svg(chart, hg.height, np.linspace(0.1, 1.2, 12), overlay=crease,
                                               title="horizon height over the two-disk complement")
    return res


@register("minkowski-development", "Development of an interval in 1+1 Minkowski space", 201)
def run_minkowski(cfg: ScenarioConfig) -> ScenarioResult:
    res = ScenarioResult("minkowski-development")
    rng = np.random.default_rng(cfg.seed)
    lo, hi = (float(v) for v in cfg.params.get("A", (-1.0, 1.0)))
    if not lo < hi:
        raise ConfigError("interval A needs lo < hi")
    a = cfg.param("a", 0.0)
    if not abs(a) < 1:
        raise ConfigError("minkowski-development needs |a| < 1")
    half = cfg.param("half_width", 2.0)
    if not (-half < lo and hi < half):
        raise ConfigError("interval A must lie inside the chart")
    start = time.perf_counter()
    n = cfg.res(201)
    chart = Chart((-half,), (half,), resolution=(n,))
    R = models.euclidean_data(chart, [a], name="minkowski")
    A = models.interval(chart, lo, hi)
    xs = chart.axes()[0]
    apex = 0.5 * ((1 - a) * hi + (1 + a) * lo)
    exact = np.clip(np.minimum((1 + a) * (xs - lo), (1 - a) * (hi - xs)), 0, None)
    hg = horizon(R, A, 0.0, "future", generator_points=[(apex,), (0.5 * (apex + hi),)])
    err = res.metric("height_error", float(np.abs(hg.height - exact).max()), 1e-9)
    res.check("D+ height is the asymmetric triangle", err < 1e-9, err, 1e-9)
    cell = float(chart.spacing[0])
    crease = xs[hg.crease]
    res.metric("crease_nodes", int(hg.crease.sum()))
    ok = bool(len(crease)) and float(np.abs(crease - apex).max()) <= cell
    res.metric("apex", apex, cell)
    res.check("apex crease detected", ok, float(np.abs(crease - apex).max()) if len(crease) else np.inf,
              cell, f"apex at {apex:g}")
    sd = stationary_from_randers(R)
    tmax = 1.25 * float(exact.max()) if exact.max() > 0 else 1.0
    times = np.linspace(0.0, tmax, cfg.param("time_steps", n))
    oracle = causal_reachability_oracle(sd.spacetime_metric, A.mask, xs, times,
                                        max_steps=cfg.param("max_steps", 40))
    fermat = (times[:, None] < hg.height[None, :]) & A.mask[None, :]
    dev_h = res.metric("development_hausdorff_cells", mask_hausdorff_cells(oracle.development, fermat), 2.0)
    res.check("D+ matches grid reachability", dev_h <= 2, dev_h, 2.0, "cells")

    def top(mask):
        out = mask & ~np.vstack([mask[1:], np.zeros((1, mask.shape[1]), dtype=bool)])
        out[:, ~mask.any(axis=0)] = False
        return out

    hor_h = res.metric("horizon_hausdorff_cells", mask_hausdorff_cells(top(oracle.development), top(fermat)), 2.0)
    res.check("H+ matches grid reachability", hor_h <= 2, hor_h, 2.0, "cells")
    null = 0.0
    for g in hg.generators:
        P = g.points
        V = np.diff(P, axis=0)
        G = sd.spacetime_metric(0.5 * (P[1:, 1:] + P[:-1, 1:]))
        null = max(null, float(np.abs(np.einsum("ni,nij,nj->n", V, G, V)).max()))
    res.metric("generator_null_residual", null, 1e-9)
    res.check("generators are lightlike", bool(hg.generators) and null < 1e-9, null, 1e-9)
    res.metric("seconds", time.perf_counter() - start)
    res.extend(invariant_suite(R, rng, ((0.3,), (1.0,)), tol=cfg.tol))
    res.artifacts["horizon.csv"] = hg.to_csv
    res.artifacts["development.svg"] = tx_svg(xs, times, fermat, curves=[g.points for g in hg.generators],
                                              title=f"D+ of ({lo:g}, {hi:g}) and horizon generators")
    res.artifacts["height.svg"] = profile_svg(xs, {"height": hg.height}, marks=crease, title="horizon height")
    return res
