"""Geodesics of a Finsler norm: initial-value and two-point problems."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .charts import DomainError, SampledCurve, fd_directional, fd_partials, polyline_hausdorff
from .finsler import FinslerNorm, UndefinedAtZero


class IntegrationError(RuntimeError):
    """The integrator gave up; ``partial`` holds the curve computed so far."""

    def __init__(self, message, partial: SampledCurve | None = None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class GeodesicSolution:
    curve: SampledCurve
    velocities: np.ndarray
    initial_velocity: np.ndarray
    length: float
    speed: float
    speed_deviation: float
    converged: bool
    residual: float = 0.0
    escaped: bool = False
    hit_seam: bool = False

    @property
    def endpoint(self) -> np.ndarray:
        return self.curve.end


def spray(F: FinslerNorm, x, v) -> np.ndarray:
    """Geodesic acceleration from the Euler-Lagrange equations of F^2/2.

    With L = F^2/2 and P = dL/dv, the equations read
    ``g(x, v) a = dL/dx - (dP/dx) v`` where ``g`` is the fundamental tensor.
    Base derivatives use fourth-order central differences.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    step = F.data.fd_step
    Lx = np.moveaxis(fd_partials(lambda y: 0.5 * F(y, v) ** 2, x, step), 0, -1)
    speed = np.linalg.norm(v, axis=-1, keepdims=True)
    u = v / speed

    def P(y):
        return F(y, v)[..., None] * F.grad_v(y, v)

    DvP = fd_directional(P, x, u, step) * speed
    g = F.tensor(x, v)
    return np.linalg.solve(g, (Lx - DvP)[..., None])[..., 0]


def _events(F: FinslerNorm, dim: int):
    chart = F.chart
    events = []
    for i, per in enumerate(chart.periodic):
        if per:
            continue
        lo, hi = chart.lower[i], chart.upper[i]

        def low(t, y, i=i, lo=lo):
            return y[i] - lo

        def high(t, y, i=i, hi=hi):
            return hi - y[i]

        for ev in (low, high):
            ev.terminal = True
            ev.direction = -1
            ev.kind = "escape"
            events.append(ev)
    for axis, value in F.data.seams:
        def seam(t, y, axis=axis, value=value):
            return y[axis] - value

        seam.terminal = True
        seam.direction = 0
        seam.kind = "seam"
        events.append(seam)
    return events


def geodesic_ivp(F: FinslerNorm, p, v, t_max: float = 1.0, tol: float = 1e-9,
                 n_samples: int = 201) -> GeodesicSolution:
    """Integrate the geodesic with initial point ``p`` and velocity ``v``.

    Uses an adaptive Dormand-Prince 4(5) pair with local tolerances
    ``tol / 10``, so the speed drift stays below ``10 * tol`` over unit
    parameter intervals.  Integration stops early
    (``escaped``) when a non-periodic chart bound is reached, or
    (``hit_seam``) when a declared non-smooth seam is crossed.
    """
    p = np.asarray(p, dtype=float).reshape(-1)
    v = np.asarray(v, dtype=float).reshape(-1)
    dim = F.dim
    if np.linalg.norm(v) == 0.0:
        raise UndefinedAtZero("geodesic with zero initial velocity")
    F.chart.check(p)

    def rhs(t, y):
        return np.concatenate([y[dim:], spray(F, y[:dim], y[dim:])])

    events = _events(F, dim)
    sol = solve_ivp(rhs, (0.0, float(t_max)), np.concatenate([p, v]), method="RK45",
                    rtol=0.1 * tol, atol=0.1 * tol, dense_output=True, events=events or None)
    if sol.status == -1:
        partial = SampledCurve(sol.y[:dim].T.copy(), sol.t.copy())
        raise IntegrationError(f"geodesic integration failed: {sol.message}", partial)
    t_end = float(sol.t[-1])
    escaped = hit_seam = False
    if sol.status == 1:
        for ev, times in zip(events, sol.t_events):
            if len(times):
                if ev.kind == "escape":
                    escaped = True
                else:
                    hit_seam = True
    ts = np.linspace(0.0, t_end, max(2, n_samples)) if t_end > 0 else np.zeros(1)
    ys = sol.sol(ts) if t_end > 0 else sol.y[:, :1]
    ys[:, -1] = sol.y[:, -1]
    pts, vel = ys[:dim].T, ys[dim:].T
    speeds = F(pts, vel)
    speed0 = float(F(p, v))
    return GeodesicSolution(
        curve=SampledCurve(pts, ts),
        velocities=vel,
        initial_velocity=v,
        length=float(np.trapezoid(speeds, ts)) if len(ts) > 1 else 0.0,
        speed=speed0,
        speed_deviation=float(np.abs(speeds - speed0).max()),
        converged=bool(sol.success),
        escaped=escaped,
        hit_seam=hit_seam,
    )


def exp_map(F: FinslerNorm, p, v, tol: float = 1e-9) -> np.ndarray:
    """Endpoint at parameter 1 of the geodesic with initial velocity ``v``."""
    p = np.asarray(p, dtype=float).reshape(-1)
    v = np.asarray(v, dtype=float).reshape(-1)
    if np.linalg.norm(v) == 0.0:
        return p.copy()
    sol = geodesic_ivp(F, p, v, 1.0, tol, n_samples=2)
    if sol.escaped or sol.hit_seam:
        raise DomainError("geodesic does not stay in the chart up to parameter 1")
    return sol.endpoint


def reverse_exp_map(F: FinslerNorm, p, v, tol: float = 1e-9) -> np.ndarray:
    """Exponential map of the reverse norm."""
    return exp_map(F.reversed(), p, v, tol)


def _lifts(F: FinslerNorm, q, p=None, windings: int = 1) -> list[np.ndarray]:
    """Images of ``q`` in the covering chart, up to ``windings`` turns from the nearest one."""
    chart = F.chart
    per_axes = [i for i, per in enumerate(chart.periodic) if per]
    if p is not None:
        q = np.asarray(p, dtype=float) + chart.displacement(p, q)
    turns = sorted(range(-windings, windings + 1), key=abs)
    out = []
    for ks in itertools.product(turns, repeat=len(per_axes)):
        t = np.array(q, dtype=float)
        for i, k in zip(per_axes, ks):
            t[i] += k * chart.extent[i]
        out.append(t)
    return out


def _newton_shoot(F, p, target, v0, tol, int_tol, max_iter=40):
    """Damped Newton on the initial velocity.

    The Jacobian is built by finite differences at a coarse integration
    tolerance; endpoints are evaluated at the coarse tolerance until the
    miss is small and at ``int_tol`` afterwards, reusing the coarse Jacobian
    (quasi-Newton) unless progress stalls.
    """
    dim = F.dim
    coarse = max(int_tol, 1e-6)

    def endpoint(v, itol):
        sol = geodesic_ivp(F, p, v, 1.0, itol, n_samples=2)
        if sol.escaped or sol.hit_seam:
            return None
        return sol.endpoint

    def jacobian(v, end, itol):
        eta = 1e-5 * max(np.linalg.norm(v), 1e-3)
        J = np.empty((dim, dim))
        for j in range(dim):
            e = np.zeros(dim)
            e[j] = eta
            ej = endpoint(v + e, itol)
            if ej is None:
                return None
            J[:, j] = (ej - end) / eta
        return J

    v = np.array(v0, dtype=float)
    itol = coarse
    end = endpoint(v, itol)
    if end is None:
        return None, np.inf
    r = end - target
    res = np.linalg.norm(r)
    J = None
    vmax = 4.0 * max(np.linalg.norm(v), 1e-3)
    refreshes = 0
    for _ in range(max_iter):
        if itol == coarse and res < max(1e-3 * coarse ** 0.5, 100 * tol):
            itol = int_tol
            end = endpoint(v, itol)
            if end is None:
                return None, res
            r = end - target
            res = np.linalg.norm(r)
        if itol == int_tol and res < tol:
            return v, res
        if J is None:
            J = jacobian(v, end, coarse)
            if J is None:
                return None, res
        try:
            dv = np.linalg.solve(J, r)
        except np.linalg.LinAlgError:
            return None, res
        lam = 1.0
        while lam > 1e-2:
            trial = v - lam * dv
            if 0 < np.linalg.norm(trial) <= vmax:
                e_trial = endpoint(trial, itol)
                if e_trial is not None:
                    r_trial = e_trial - target
                    res_trial = np.linalg.norm(r_trial)
                    if res_trial < res:
                        if res_trial > 0.5 * res or lam < 1.0:
                            J = None  # slow progress: refresh the Jacobian
                        v, end, r, res = trial, e_trial, r_trial, res_trial
                        break
            lam *= 0.5
        else:
            if J is not None and refreshes < 3:
                J = None
                refreshes += 1
                continue
            return None, res
    return (v, res) if (res < tol and itol == int_tol) else (None, res)


def _direction_key(v):
    u = v / np.linalg.norm(v)
    return tuple(np.round(u, 12))


def shoot_connect(F: FinslerNorm, p, q, tol: float = 1e-8, restarts: int = 6,
                  seed: int = 0, grid_seed: bool = True,
                  extra_seeds=(), windings: int = 1) -> list[GeodesicSolution]:
    """Geodesics from ``p`` to ``q`` found by damped Newton shooting.

    Seeds: straight displacements to the periodic lifts of ``q`` up to
    ``windings`` turns from the nearest image, the
    initial direction of the grid shortest path, random directions, and any
    ``extra_seeds`` velocities.  Distinct solutions (Hausdorff separation of
    their images above 1e-3 of the chart extent) are returned sorted by
    length, then by initial direction.
    """
    p = np.asarray(p, dtype=float).reshape(-1)
    q = np.asarray(q, dtype=float).reshape(-1)
    chart = F.chart
    chart.check(p)
    chart.check(q)
    if np.linalg.norm(chart.displacement(p, q)) == 0.0:
        curve = SampledCurve(np.stack([p, p]), np.array([0.0, 1.0]))
        return [GeodesicSolution(curve, np.zeros((2, F.dim)), np.zeros(F.dim), 0.0, 0.0, 0.0, True)]
    rng = np.random.default_rng(seed)
    int_tol = min(1e-9, tol * 1e-2)
    seeds: list[tuple[np.ndarray, np.ndarray]] = []
    lifts = _lifts(F, q, p, windings)
    for t in lifts:
        seeds.append((t, t - p))
    base_target = p + chart.displacement(p, q)
    if grid_seed:
        from .distance import forward_distance

        try:
            res = forward_distance(F, p, q, level="coarse")
            pts = res.path.points
            if len(pts) >= 2:
                u = pts[min(2, len(pts) - 1)] - pts[0]
                u = u / np.linalg.norm(u)
                d = max(res.value, 1e-12)
                end = pts[-1]
                target = min(lifts, key=lambda t: np.linalg.norm(t - end))
                seeds.append((target, u * d / float(F(p, u))))
        except Exception:
            pass
    d0 = np.linalg.norm(base_target - p)
    for _ in range(restarts):
        u = rng.normal(size=F.dim)
        u /= np.linalg.norm(u)
        scale = d0 * rng.uniform(0.7, 1.5)
        v = u * scale
        end_guess = p + v
        target = min(lifts, key=lambda t: np.linalg.norm(t - end_guess))
        seeds.append((target, v))
    for v in extra_seeds:
        v = np.asarray(v, dtype=float)
        end_guess = p + v
        target = min(lifts, key=lambda t: np.linalg.norm(t - end_guess))
        seeds.append((target, v))

    found: list[GeodesicSolution] = []
    sep = 1e-3 * float(chart.extent.max())
    for target, v0 in seeds:
        if np.linalg.norm(v0) == 0:
            continue
        v, res = _newton_shoot(F, p, target, v0, tol, int_tol)
        if v is None:
            continue
        sol = geodesic_ivp(F, p, v, 1.0, int_tol)
        sol = GeodesicSolution(sol.curve, sol.velocities, sol.initial_velocity, sol.length,
                               sol.speed, sol.speed_deviation, True, float(res),
                               sol.escaped, sol.hit_seam)
        dup = None
        for k, other in enumerate(found):
            if polyline_hausdorff(sol.curve.points, other.curve.points, chart) <= sep:
                dup = k
                break
        if dup is None:
            found.append(sol)
        elif sol.length < found[dup].length:
            found[dup] = sol
    found.sort(key=lambda s: (round(s.length, 10), _direction_key(s.initial_velocity)))
    return found
