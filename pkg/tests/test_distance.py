import csv

import numpy as np
import pytest

from randers_src import models
from randers_src.charts import SampledCurve
from randers_src.distance import (backward_distance, ball, distance_field, forward_distance,
                                  heine_borel_diagnostic, length_metric_ds, local_distance,
                                  local_distances, stencil_offsets, symmetrized_distance)
from randers_src.finsler import FinslerNorm


@pytest.fixture(scope="module")
def constant():
    return FinslerNorm(models.constant_form(0.5))


def test_stencil_radius_two_has_sixteen_directions():
    offs = stencil_offsets(2, 2)
    assert len(offs) == 16
    assert np.abs(offs).max() == 2


def test_euclidean_unit_distance():
    F = FinslerNorm(models.flat())
    assert forward_distance(F, (0.0, 0.0), (1.0, 0.0)).value == pytest.approx(1.0, abs=1e-6)
    assert symmetrized_distance(F, (0.3, 0.2), (0.3, 0.2)).value == 0.0


def test_constant_form_distances(constant):
    p, q = (0.0, 0.0), (1.0, 0.0)
    assert forward_distance(constant, p, q).value == pytest.approx(1.5, abs=1e-3)
    assert backward_distance(constant, p, q).value == pytest.approx(0.5, abs=1e-3)
    assert forward_distance(constant, q, p).value == pytest.approx(0.5, abs=1e-3)
    assert symmetrized_distance(constant, p, q).value == pytest.approx(1.0, abs=1e-3)


def test_coarse_converges_to_refined_first_order():
    errs = []
    for res in (21, 41, 81):
        F = FinslerNorm(models.constant_form(0.5, res))
        r = forward_distance(F, (-1.0, -0.6), (1.0, 0.8))
        errs.append(abs(r.coarse - r.value))
        assert r.value == pytest.approx(1.5 * 2.0 + np.hypot(2.0, 1.4) - 2.0, abs=1e-3)
    assert errs[-1] <= errs[0]


def test_refined_distance_stable_under_doubling_on_strip():
    a = FinslerNorm(models.strip_cylinder(res_x=48))
    b = FinslerNorm(models.strip_cylinder(res_x=96))
    p, q = (2.0, -1.0), (3.5, 1.0)
    da, db = forward_distance(a, p, q).value, forward_distance(b, p, q).value
    assert abs(da - db) / db < 1e-3


def test_grid_triangle_inequality_on_random_triples():
    F = FinslerNorm(models.strip_cylinder())
    rng = np.random.default_rng(3)
    chart = F.chart
    nodes = chart.nodes().reshape(-1, 2)
    src = rng.choice(len(nodes), size=10, replace=False)
    fields = {int(k): distance_field(F, nodes[k]).values.reshape(-1) for k in src}
    worst = -np.inf
    for _ in range(1000):
        i, j = rng.choice(src, 2, replace=False)
        k = rng.integers(len(nodes))
        worst = max(worst, fields[int(i)][k] - fields[int(i)][j] - fields[int(j)][k])
    assert worst <= 1e-12


def test_refined_triangle_inequality_strip():
    F = FinslerNorm(models.strip_cylinder())
    cell = float(F.chart.spacing.max())
    rng = np.random.default_rng(5)
    lo, hi = np.array([-5.0, -4.0]), np.array([5.0, 4.0])
    for _ in range(6):
        p, q, r = lo + (hi - lo) * rng.random((3, 2))
        d = lambda a, b: forward_distance(F, a, b).value
        assert d(p, r) <= d(p, q) + d(q, r) + 2 * cell


def test_strip_downward_distance_bounded_upward_not():
    F = FinslerNorm(models.strip_cylinder())
    down = forward_distance(F, (3.0, 0.0), (3.0, -7.0)).value
    up = forward_distance(F, (3.0, 0.0), (3.0, 7.0)).value
    assert down < np.pi / 2
    assert up > 7.0


def test_unreached_target_gives_lower_bound():
    F = FinslerNorm(models.flat(41))
    r = forward_distance(F, (0.0, 0.0), (5.0, 0.0))
    assert not r.reached and r.lower_bound
    assert r.value == pytest.approx(2.0, abs=1e-9)


def test_euclidean_ball_is_disk():
    F = FinslerNorm(models.flat())
    b = ball(F, (0.0, 0.0), 1.0)
    r = np.linalg.norm(F.chart.nodes(), axis=-1)
    cell = F.chart.spacing[0]
    assert np.all(b.mask[r < 1 - cell])
    assert not np.any(b.mask[r > 1 + cell])


def test_constant_form_ball_edge(constant):
    b = ball(constant, (0.0, 0.0), 1.0)
    assert b.contains((0.66, 0.0))
    assert not b.contains((0.67, 0.0))


def test_symmetrized_ball_inclusion(constant):
    r = 0.6
    bs = ball(constant, (0.2, 0.1), r, "symmetrized").mask
    big = ball(constant, (0.2, 0.1), 2 * r, "forward").mask & ball(constant, (0.2, 0.1), 2 * r, "backward").mask
    assert np.all(~bs | big)


def test_heine_borel_euclidean():
    F = FinslerNorm(models.flat(41))
    rep = heine_borel_diagnostic(F, (0.0, 0.0), radii=(0.5, 1.0))
    assert all(rep.inclusions_hold.values())
    assert not rep.noncompactness_evidence


def test_heine_borel_hyperbola_balls_compact():
    F = models.hyperbola_section(8.0, 161).fermat()
    rep = heine_borel_diagnostic(F, (0.0,), radii=(0.9,), truncations=(0.5, 1.0))
    assert all(rep.inclusions_hold.values())
    assert not rep.escape[0.9]


def test_length_metric_constant_form(constant):
    lm = length_metric_ds(constant, (0.0, 0.0), (1.0, 0.0))
    assert lm.value == pytest.approx(1.0, abs=1e-6)
    assert lm.d_h == pytest.approx(1.0, abs=1e-6)


def test_length_metric_strip_gap():
    F = FinslerNorm(models.strip_cylinder())
    p, q = (3.0, -7.0), (3.0, 7.0)
    coarse = length_metric_ds(F, p, q, refinement=1)
    lm = length_metric_ds(F, p, q, refinement=4)
    assert lm.ds < 0.6 * lm.d_h
    assert lm.ds < coarse.value <= lm.value * (1 + 1e-9)
    assert lm.value <= lm.d_h * (1 + 1e-5)
    assert abs(lm.value - lm.d_h) / lm.d_h < 0.02


def test_local_distances_batch_matches_single(constant):
    a = np.array([[0.0, 0.0], [0.1, -0.2], [0.5, 0.5]])
    b = a + np.array([[0.05, 0.0], [-0.03, 0.04], [0.0, 0.0]])
    batch = local_distances(constant, a, b)
    single = [local_distance(constant, x, y) for x, y in zip(a, b)]
    assert np.allclose(batch, single, atol=1e-14)
    assert batch[2] == 0.0
    assert batch[0] == pytest.approx(0.075, abs=1e-12)


def test_distance_field_csv(tmp_path, constant):
    fld = distance_field(constant, (0.0, 0.0))
    path = tmp_path / "d.csv"
    fld.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["x0", "x1", "value", "reached"]
    assert len(rows) == 1 + fld.values.size
    assert fld.values[constant.chart.nearest_index((0.0, 0.0))] == 0.0
