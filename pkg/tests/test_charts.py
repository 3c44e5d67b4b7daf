import numpy as np
import pytest

from randers_src.charts import (Chart, DomainError, MetricField, SampledCurve, ScalarField, diff_scalar,
                                eval_metric, polyline_hausdorff)


def test_chart_rejects_degenerate_bounds():
    with pytest.raises(ValueError):
        Chart((0.0, 1.0), (0.0, 2.0))


def test_periodic_normalize_idempotent():
    chart = Chart((-6.0, -1.0), (6.0, 1.0), (True, False), (12, 5))
    x = np.array([[13.5, 0.2], [-6.0, 0.0], [6.0, 0.1], [-30.25, -0.5]])
    once = chart.normalize(x)
    assert np.array_equal(chart.normalize(once), once)
    assert np.allclose(once[:, 0], [1.5, -6.0, -6.0, 5.75])


def test_periodic_displacement_is_shortest():
    chart = Chart((-6.0, -1.0), (6.0, 1.0), (True, False), (12, 5))
    d = chart.displacement([5.5, 0.0], [-5.5, 0.5])
    assert np.allclose(d, [1.0, 0.5])


def test_out_of_domain_point_raises():
    chart = Chart((0.0, 0.0), (1.0, 1.0))
    with pytest.raises(DomainError):
        eval_metric(MetricField.euclidean(2), (1.5, 0.5), chart)


def test_eval_metric_euclidean_is_identity():
    chart = Chart((0.0, 0.0), (1.0, 1.0))
    assert np.array_equal(eval_metric(MetricField.euclidean(2), (0.3, 0.7), chart), np.eye(2))


def test_grid_sampled_field_is_exact_at_nodes():
    chart = Chart((0.0, 0.0), (1.0, 2.0), resolution=(5, 9))
    nodes = chart.nodes()
    vals = np.sin(3 * nodes[..., 0]) * np.cos(nodes[..., 1])
    f = ScalarField.from_samples(chart, vals)
    assert f.grid_sampled
    assert np.allclose(f(nodes), vals, rtol=0, atol=1e-15)


def test_diff_scalar_linear_and_constant():
    chart = Chart((-2.0, -2.0), (3.0, 3.0))
    lin = ScalarField(lambda x: np.asarray(x)[..., 0], chart=chart)
    const = ScalarField(lambda x: np.full(np.shape(x)[:-1], 4.0), chart=chart)
    assert np.allclose(diff_scalar(lin, (0.4, -1.2)), [1.0, 0.0], atol=1e-12)
    assert np.allclose(diff_scalar(const, (0.4, -1.2)), [0.0, 0.0], atol=1e-12)


def test_diff_scalar_quadratic():
    chart = Chart((-2.0, -2.0), (3.0, 3.0))
    f = ScalarField(lambda x: (np.asarray(x) ** 2).sum(-1), chart=chart)
    step = 1e-3
    assert np.allclose(diff_scalar(f, (1.0, 2.0), step), [2.0, 4.0], atol=step**2)


def test_diff_scalar_needs_margin():
    chart = Chart((0.0, 0.0), (1.0, 1.0))
    f = ScalarField(lambda x: np.asarray(x)[..., 0], chart=chart)
    with pytest.raises(DomainError):
        diff_scalar(f, (0.0, 0.5), 1e-2)


def test_diff_scalar_second_order_convergence():
    chart = Chart((-2.0, -2.0), (2.0, 2.0))
    f = ScalarField(lambda x: np.exp(np.asarray(x)[..., 0]) * np.sin(2 * np.asarray(x)[..., 1]), chart=chart)
    p = np.array([0.3, 0.4])
    exact = np.array([np.exp(0.3) * np.sin(0.8), 2 * np.exp(0.3) * np.cos(0.8)])
    steps = 0.1 / 2.0 ** np.arange(4)
    errs = [np.abs(diff_scalar(f, p, h) - exact).max() for h in steps]
    slopes = np.diff(np.log(errs)) / np.diff(np.log(steps))
    assert slopes.min() >= 1.9


def test_resample_equal_arclength():
    c = SampledCurve(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 3.0]]))
    r = c.resample(5)
    assert np.allclose(np.diff(r.points, axis=0).__abs__().sum(1), 1.0)
    assert np.allclose(r.points[-1], [1.0, 3.0])


def test_polyline_hausdorff_periodic():
    chart = Chart((-6.0, -1.0), (6.0, 1.0), (True, False), (12, 5))
    a = np.array([[5.9, 0.0]])
    b = np.array([[-5.9, 0.0]])
    assert polyline_hausdorff(a, b, chart) == pytest.approx(0.2)
    assert polyline_hausdorff(a, b) == pytest.approx(11.8)
