import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from randers_src import models
from randers_src.charts import Chart, MetricField, OneFormField, SampledCurve
from randers_src.finsler import (FinslerNorm, RandersData, UndefinedAtZero, curve_energy, curve_length,
                                 fundamental_tensor, randers_norm, validate)

# closed-form fundamental tensor of the constant form a = 0.5 at v = (1, 0),
# from the sympy Hessian below: diag((1+a)^2, 1+a)
TENSOR_CONSTANT_FORM = np.diag([2.25, 1.5])


def sympy_tensor(hmat, w, v):
    """Half the Hessian of (sqrt(y.h.y) + w.y)^2 at y = v."""
    y = sp.symbols("y0:2", real=True)
    H = sp.Matrix(hmat)
    Y = sp.Matrix(y)
    F = sp.sqrt((Y.T * H * Y)[0]) + sum(wi * yi for wi, yi in zip(w, y))
    g = sp.hessian(F**2 / 2, y)
    return np.array(g.subs(dict(zip(y, v))).evalf(30), dtype=float)


def test_randers_norm_riemannian_case():
    F = FinslerNorm(models.flat())
    assert randers_norm(F, (0.0, 0.0), (3.0, 4.0)) == 5.0


def test_randers_norm_constant_form_and_reverse():
    F = FinslerNorm(models.constant_form(0.5))
    assert randers_norm(F, (0.0, 0.0), (1.0, 0.0)) == 1.5
    assert randers_norm(F.reversed(), (0.0, 0.0), (1.0, 0.0)) == 0.5
    assert randers_norm(F, (0.2, 0.1), (0.0, 0.0)) == 0.0


@pytest.mark.parametrize("theta", [-0.5, -1.0, -3.0, -8.0])
def test_hyperbola_fermat_norm_negative_branch(theta):
    F = models.hyperbola_section(10.0, 201).fermat()
    want = np.cosh(theta) + np.sinh(theta)
    assert float(F([theta], [1.0])) == pytest.approx(want, rel=1e-13)


def test_tensor_matches_sympy_oracle_constant_form():
    oracle = sympy_tensor([[1, 0], [0, 1]], [sp.Rational(1, 2), 0], (1, 0))
    assert np.allclose(oracle, TENSOR_CONSTANT_FORM, atol=1e-15)
    F = FinslerNorm(models.constant_form(0.5))
    g_fd = fundamental_tensor(F, (0.0, 0.0), (1.0, 0.0))
    assert np.abs(g_fd - g_fd.T).max() < 1e-8
    assert np.linalg.eigvalsh(g_fd).min() > 0
    assert np.allclose(g_fd, TENSOR_CONSTANT_FORM, atol=1e-5)
    assert np.allclose(F.tensor((0.0, 0.0), (1.0, 0.0)), TENSOR_CONSTANT_FORM, atol=1e-14)


def test_tensor_matches_sympy_oracle_general():
    h = [[2, sp.Rational(1, 3)], [sp.Rational(1, 3), 1]]
    w = [sp.Rational(1, 5), -sp.Rational(3, 10)]
    v = (sp.Rational(-2, 3), sp.Rational(7, 5))
    oracle = sympy_tensor(h, w, v)
    chart = Chart((-1.0, -1.0), (1.0, 1.0))
    R = RandersData(MetricField.constant(np.array(h, dtype=float)),
                    OneFormField.constant(np.array(w, dtype=float)), chart)
    F = FinslerNorm(R)
    vv = np.array(v, dtype=float)
    assert np.allclose(F.tensor((0.0, 0.0), vv), oracle, atol=1e-13)
    assert np.allclose(fundamental_tensor(F, (0.0, 0.0), vv), oracle, atol=1e-5)


def test_tensor_euclidean_identity_and_zero_homogeneous():
    F = FinslerNorm(models.flat())
    assert np.allclose(fundamental_tensor(F, (0.0, 0.0), (0.3, -0.8)), np.eye(2), atol=1e-6)
    G = FinslerNorm(models.constant_form(0.5))
    v = np.array([0.4, 0.9])
    assert np.allclose(fundamental_tensor(G, (0.0, 0.0), v), fundamental_tensor(G, (0.0, 0.0), 7.5 * v), atol=1e-6)


def test_tensor_undefined_at_zero():
    F = FinslerNorm(models.flat())
    with pytest.raises(UndefinedAtZero):
        fundamental_tensor(F, (0.0, 0.0), (0.0, 0.0))


def test_curve_length_and_energy():
    E = FinslerNorm(models.flat())
    seg = SampledCurve(np.array([[0.0, 0.0], [1.0, 0.0]]))
    assert curve_length(E, seg) == pytest.approx(1.0, abs=1e-15)
    s = np.linspace(0.0, 1.0, 201)
    line = SampledCurve(np.column_stack([s, 0 * s]), s)
    assert curve_energy(E, line) == pytest.approx(1.0, abs=1e-12)
    bent = SampledCurve(np.column_stack([s**2, 0 * s]), s)
    assert curve_energy(E, bent) > 1.0 + 1e-3
    C = FinslerNorm(models.constant_form(0.5))
    assert curve_energy(C, line) == pytest.approx(2.25, abs=1e-12)


def test_length_plus_reversed_is_twice_h_length():
    F = FinslerNorm(models.strip_cylinder())
    t = np.linspace(0.0, 1.0, 300)
    c = SampledCurve(np.column_stack([2.0 + 1.5 * t, -2 + 3 * np.sin(2 * t)]))
    H = FinslerNorm(F.data.riemannian())
    both = curve_length(F, c) + curve_length(F, c.reversed())
    assert both == pytest.approx(2 * curve_length(H, c), rel=1e-13)
    assert curve_length(F, c.reversed()) == pytest.approx(curve_length(F.reversed(), c), rel=1e-13)


def test_strip_downward_line_has_length_pi():
    F = FinslerNorm(models.strip_cylinder())
    T = 1e6
    y = np.sinh(np.linspace(np.arcsinh(T), -np.arcsinh(T), 8001))
    L = curve_length(F, SampledCurve(np.column_stack([np.full_like(y, 3.0), y])))
    tail = 2 * (np.pi / 2 - np.arctan(T))
    assert abs(L + tail - np.pi) < 1e-3


def test_validate_reports():
    assert validate(models.flat()).max_omega_norm == 0.0
    rep = validate(models.constant_form(0.5))
    assert rep.valid and rep.max_omega_norm == pytest.approx(0.5)
    chart = Chart((-1.0, -1.0), (1.0, 1.0))
    assert not validate(models.euclidean_data(chart, [1.0, 0.0])).valid


_vec = st.tuples(st.floats(-5, 5), st.floats(-5, 5)).filter(lambda v: np.hypot(*v) > 1e-3)
_pt = st.tuples(st.floats(-5.9, 5.9), st.floats(-7.9, 7.9))


@settings(max_examples=200, deadline=None)
@given(_pt, _vec, _vec)
def test_triangle_inequality_strip(x, v1, v2):
    F = FinslerNorm(models.strip_cylinder())
    v1, v2 = np.array(v1), np.array(v2)
    lhs = float(F(x, v1 + v2))
    rhs = float(F(x, v1)) + float(F(x, v2))
    assert lhs <= rhs * (1 + 1e-12)


@settings(max_examples=200, deadline=None)
@given(_pt, _vec, st.floats(1e-3, 1e3))
def test_homogeneity_and_reverse_strip(x, v, lam):
    F = FinslerNorm(models.strip_cylinder())
    v = np.array(v)
    f = float(F(x, v))
    assert float(F(x, lam * v)) == pytest.approx(lam * f, rel=1e-12)
    assert float(F.reversed()(x, v)) == float(F(x, -v))
    assert f > 0
