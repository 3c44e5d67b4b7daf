import numpy as np
import pytest

from randers_src import models
from randers_src.charts import Chart, MetricField, OneFormField, SampledCurve, ScalarField
from randers_src.finsler import FinslerNorm, curve_length
from randers_src.stationary import (Event, InvalidData, NotSpacelike, PreconditionError, StationaryData,
                                    arrival_time, chronological_future, fermat_from_stationary,
                                    in_chronological_future, induced_fermat_of_graph,
                                    integrate_null_geodesic, null_vector, project_and_compare,
                                    section_change, spacelike_section_check, stationary_from_randers)

CHART = Chart((-1.0, -1.0), (1.0, 1.0), resolution=(41, 41))


def _wavy() -> StationaryData:
    beta = ScalarField(lambda x: 1.5 + 0.5 * np.sin(np.asarray(x)[..., 0]))

    def g0(x):
        x = np.asarray(x)
        out = np.zeros(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = 1 + 0.3 * x[..., 1] ** 2
        out[..., 1, 1] = 2 + np.cos(x[..., 0])
        out[..., 0, 1] = out[..., 1, 0] = 0.2 * x[..., 0] * x[..., 1]
        return out

    omega = OneFormField(lambda x: np.stack([0.4 * np.cos(np.asarray(x)[..., 1]),
                                             0.7 * np.asarray(x)[..., 0]], axis=-1))
    return StationaryData(beta, MetricField(g0), omega, CHART)


def test_static_euclidean_fermat_is_euclidean():
    sd = stationary_from_randers(models.euclidean_data(CHART))
    F = sd.fermat()
    v = np.array([[0.3, -0.4], [1.0, 2.0]])
    assert np.allclose(F(np.zeros((2, 2)), v), np.linalg.norm(v, axis=1), atol=1e-15)


def test_fermat_norm_matches_displayed_formula():
    sd = _wavy()
    F = sd.fermat()
    rng = np.random.default_rng(1)
    x = rng.uniform(-1, 1, (200, 2))
    v = rng.normal(size=(200, 2))
    b, g0, w = sd.fields(x)
    wv = np.einsum("ni,ni->n", w, v)
    want = wv / b + np.sqrt(np.einsum("ni,nij,nj->n", v, g0, v) / b + (wv / b) ** 2)
    assert np.allclose(F(x, v), want, rtol=1e-13)


def test_stationary_from_constant_form():
    sd = stationary_from_randers(models.constant_form(0.5))
    assert np.allclose(sd.g0(np.zeros(2)), np.diag([0.75, 1.0]), atol=1e-15)
    assert float(sd.beta(np.zeros(2))) == 1.0


def test_roundtrip_identity():
    R = fermat_from_stationary(_wavy())
    back = fermat_from_stationary(stationary_from_randers(R))
    x = np.random.default_rng(2).uniform(-1, 1, (1000, 2))
    h1, w1 = R.fields(x)
    h2, w2 = back.fields(x)
    assert np.abs(h1 - h2).max() <= 1e-12 and np.abs(w1 - w2).max() <= 1e-12


def test_invalid_beta_and_invalid_randers():
    bad = StationaryData(ScalarField(lambda x: np.asarray(x)[..., 0]), MetricField.euclidean(2),
                         OneFormField.constant([0.0, 0.0]), CHART)
    with pytest.raises(InvalidData):
        fermat_from_stationary(bad)
    with pytest.raises(InvalidData):
        stationary_from_randers(models.euclidean_data(CHART, [1.2, 0.0]))


def test_arrival_time():
    sd = stationary_from_randers(models.euclidean_data(CHART))
    seg = SampledCurve(np.array([[0.0, 0.0], [1.0, 0.0]]))
    at = arrival_time(sd, seg, t_start=2.0)
    assert at.advance == pytest.approx(1.0, abs=1e-15) and at.time == pytest.approx(3.0)
    assert at.lift.points.shape == (2, 3)


def test_arrival_time_equals_fermat_length_on_random_curves():
    sd = _wavy()
    F = sd.fermat()
    rng = np.random.default_rng(4)
    s = np.linspace(0.0, 1.0, 60)[:, None]
    for _ in range(100):
        a, b = rng.uniform(-0.8, 0.8, (2, 2))
        c = SampledCurve(np.clip(a + s * (b - a) + 0.1 * np.sin(5 * s) * rng.normal(size=2), -1, 1))
        assert abs(arrival_time(sd, c).advance - curve_length(F, c)) <= 1e-12


def test_strip_downward_arrival_advance_is_pi():
    sd = stationary_from_randers(models.strip_cylinder())
    T = 1e6
    y = np.sinh(np.linspace(np.arcsinh(T), -np.arcsinh(T), 8001))
    at = arrival_time(sd, SampledCurve(np.column_stack([np.full_like(y, 3.0), y])))
    assert abs(at.advance + 2 * (np.pi / 2 - np.arctan(T)) - np.pi) < 1e-3


def test_minkowski_null_geodesic_is_straight():
    sd = stationary_from_randers(models.flat())
    x0 = np.array([0.1, -0.2])
    u = np.array([0.6, 0.8])
    v = null_vector(sd, x0, u)
    geo = integrate_null_geodesic(sd, Event(0.5, x0), v, s_max=1.0)
    pts = geo.curve.points
    assert np.allclose(pts[:, 0], 0.5 + np.linalg.norm(pts[:, 1:] - x0, axis=1), atol=1e-10)
    rep = project_and_compare(sd, geo)
    assert rep.max_deviation < 1e-10 and rep.time_integral_mismatch < 1e-10


def test_null_preconditions():
    sd = stationary_from_randers(models.flat())
    with pytest.raises(PreconditionError):
        integrate_null_geodesic(sd, Event(0.0, (0.0, 0.0)), np.array([1.0, 0.5, 0.0]))
    with pytest.raises(PreconditionError):
        integrate_null_geodesic(sd, Event(0.0, (0.0, 0.0)), np.array([-1.0, 1.0, 0.0]), "future")


def test_killing_conservation_and_projection_on_strip():
    sd = stationary_from_randers(models.strip_cylinder())
    F = sd.fermat()
    x0, u = np.array([2.8, 0.7]), np.array([0.5, 0.9])
    for ori in ("future", "past"):
        G = F if ori == "future" else F.reversed()
        v = null_vector(sd, x0, u, ori, F)
        geo = integrate_null_geodesic(sd, Event(0.0, x0), v, ori, s_max=1.0 / float(G(x0, u)), F=F)
        assert geo.killing_drift < 1e-9
        rep = project_and_compare(sd, geo, F)
        assert rep.deviation_per_length < 1e-3
        assert rep.time_integral_mismatch < 1e-4
        assert rep.monotone_time


def test_chronological_future_minkowski_disk():
    R = models.flat(81)
    sd = stationary_from_randers(R)
    mask = chronological_future(sd, Event(0.0, (0.0, 0.0)), 1.0)
    r = np.linalg.norm(R.chart.nodes(), axis=-1)
    cell = R.chart.spacing[0]
    assert np.all(mask[r < 1 - cell]) and not np.any(mask[r > 1 + cell])
    assert not chronological_future(sd, Event(1.0, (0.0, 0.0)), 1.0).any()


def test_chronological_membership_constant_form():
    sd = stationary_from_randers(models.constant_form(0.5))
    e0 = Event(0.0, (0.0, 0.0))
    assert in_chronological_future(sd, e0, Event(1.51, (1.0, 0.0)))
    assert not in_chronological_future(sd, e0, Event(1.49, (1.0, 0.0)))
    assert in_chronological_future(sd, e0, Event(0.51, (-1.0, 0.0)))
    assert not in_chronological_future(sd, e0, Event(0.49, (-1.0, 0.0)))


def test_spacelike_section_check():
    R = models.flat(41)
    const = ScalarField.constant(2.0, 2)
    rep = spacelike_section_check(R, const)
    assert rep.is_spacelike and rep.sup == 0.0
    half = models.linear_potential(0.5)
    assert spacelike_section_check(R, half).sup == pytest.approx(0.5, abs=1e-12)
    lightlike = models.linear_potential(1.0)
    rep = spacelike_section_check(R, lightlike)
    assert not rep.is_spacelike and rep.margin == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(NotSpacelike):
        section_change(R, lightlike)


def test_section_change_constant_leaves_metric():
    R = models.constant_form(0.5, 41)
    sc = section_change(R, ScalarField.constant(1.0, 2))
    x = R.chart.nodes().reshape(-1, 2)
    assert np.allclose(sc.data.fields(x)[1], R.fields(x)[1], atol=0)
    assert sc.max_h_difference <= 1e-12


def test_section_change_routes_agree_on_wavy_data():
    R = fermat_from_stationary(_wavy())
    f = ScalarField(lambda x: 0.2 * np.sin(np.asarray(x)[..., 0] + np.asarray(x)[..., 1]),
                    grad=lambda x: 0.2 * np.cos(np.asarray(x)[..., 0] + np.asarray(x)[..., 1])[..., None]
                    * np.ones(2))
    sc = section_change(R, f)
    assert max(sc.max_h_difference, sc.max_omega_difference) <= 1e-12
    c = SampledCurve(np.column_stack([np.linspace(-0.7, 0.6, 300), 0.3 * np.sin(np.linspace(0, 3, 300))]))
    shift = curve_length(FinslerNorm(sc.data), c) - curve_length(FinslerNorm(R), c)
    assert shift == pytest.approx(float(f(c.start) - f(c.end)), abs=1e-12)


def test_induced_fermat_of_zero_graph():
    sd = _wavy()
    R0 = fermat_from_stationary(sd)
    Rf = induced_fermat_of_graph(sd, ScalarField.constant(0.0, 2))
    x = np.random.default_rng(0).uniform(-1, 1, (100, 2))
    assert np.allclose(R0.fields(x)[0], Rf.fields(x)[0], atol=1e-15)
    assert np.allclose(R0.fields(x)[1], Rf.fields(x)[1], atol=1e-15)


def test_hyperbola_flat_section_is_complete_euclidean_splitting():
    sd = models.hyperbola_section(8.0, 161)
    R = sd.fermat().data
    sc = section_change(R, models.hyperbola_flat_section())
    x = np.linspace(-8, 8, 33)[:, None]
    h, w = sc.data.fields(x)
    # dt = 0 slice: the one-form vanishes and h is the pulled-back length element cosh^2
    assert np.abs(w).max() <= 1e-12
    assert np.allclose(h[:, 0, 0], np.cosh(x[:, 0]) ** 2, rtol=1e-12)
