"""The eleven acceptance criteria, evaluated on cached scenario runs."""

import numpy as np

from randers_src.scenarios import REGISTRY

CHAIN_PAIRS = 200


def _m(run, key):
    return run.metrics[key]


def test_criterion_01_hyperbola_length(scenarios, record):
    run = scenarios("hyperbola-section")
    total = _m(run, "total_fermat_length")
    record(1, [("|L-2|", abs(total - 2) < 1e-3, abs(total - 2)),
               ("tail", _m(run, "total_fermat_length_tail_bound") < 1e-8, _m(run, "total_fermat_length_tail_bound")),
               ("seconds", _m(run, "total_fermat_length_seconds") < 1.0, _m(run, "total_fermat_length_seconds"))])


def test_criterion_02_strip(scenarios, record):
    run = scenarios("strip-cylinder")
    L = _m(run, "downward_line_length")
    record(2, [("|L-pi|", abs(L - np.pi) < 1e-3, abs(L - np.pi)),
               ("max ds upper bound (50 pairs)", _m(run, "ds_upper_max_random_pairs") <= 12 + np.pi,
                _m(run, "ds_upper_max_random_pairs")),
               ("escape", _m(run, "heine_borel_escape") is True, _m(run, "heine_borel_escape"))])


def test_criterion_03_ds_cauchy(scenarios, record):
    run = scenarios("ds-cauchy-sequence")
    parts = []
    for n in range(1, 7):
        bound = 2.0 ** -n
        f, b = _m(run, f"d_forward_{n}"), _m(run, f"d_backward_{n}")
        parts.append((f"n={n} max(d)/2^-n", f < bound and b < bound, max(f, b) / bound))
    record(3, parts)


def test_criterion_04_projection(scenarios, record):
    parts = []
    seconds = 0.0
    for name, params in (("flat", {"chain_pairs": CHAIN_PAIRS}), ("constant-form", {"chain_pairs": CHAIN_PAIRS}),
                         ("strip-cylinder", {})):
        run = scenarios(name, **params)
        for ori in ("future", "past"):
            dev = _m(run, f"projection_{ori}_deviation_per_length")
            mis = _m(run, f"projection_{ori}_time_mismatch")
            parts.append((f"{name} {ori} dev", dev < 1e-3, dev))
            parts.append((f"{name} {ori} dt", mis < 1e-4, mis))
        seconds += _m(run, "projection_seconds")
    parts.append(("seconds", seconds < 30.0, seconds))
    record(4, parts)


def test_criterion_05_roundtrip_and_routes(scenarios, record):
    parts = []
    for name, params in (("flat", {"chain_pairs": CHAIN_PAIRS}), ("constant-form", {"chain_pairs": CHAIN_PAIRS}),
                         ("strip-cylinder", {}), ("hyperbola-section", {})):
        err = _m(scenarios(name, **params), "roundtrip_error")
        parts.append((f"{name} roundtrip", err <= 1e-12, err))
    for name, params in (("constant-form", {"chain_pairs": CHAIN_PAIRS}), ("hyperbola-section", {})):
        d = _m(scenarios(name, **params), "section_change_route_difference")
        parts.append((f"{name} routes", d <= 1e-12, d))
    record(5, parts)


def test_criterion_06_section_change(scenarios, record):
    parts = []
    for name, params in (("constant-form", {"chain_pairs": CHAIN_PAIRS}), ("hyperbola-section", {})):
        run = scenarios(name, **params)
        shift = _m(run, "section_change_length_shift_error")
        ds = _m(run, "section_change_ds_difference")
        haus = _m(run, "section_change_pregeodesic_hausdorff")
        parts += [(f"{name} shift", shift <= 1e-9, shift),
                  (f"{name} ds", ds <= run.tolerances["section_change_ds_difference"], ds),
                  (f"{name} hausdorff", haus < 1e-3, haus)]
    record(6, parts)


def test_criterion_07_distance_chain(scenarios, record):
    parts = []
    for name in ("flat", "constant-form"):
        run = scenarios(name, chain_pairs=CHAIN_PAIRS)
        slack = run.tolerances["chain_max_ds_excess"]
        parts += [(f"{name} pairs", _m(run, "chain_pairs") == CHAIN_PAIRS, _m(run, "chain_pairs")),
                  (f"{name} ds-dsl", _m(run, "chain_max_ds_excess") <= slack, _m(run, "chain_max_ds_excess")),
                  (f"{name} dsl-dh", _m(run, "chain_max_dsl_excess") <= slack, _m(run, "chain_max_dsl_excess")),
                  (f"{name} |dsl-dh|/dh", _m(run, "chain_max_dsl_vs_dh") < 0.02, _m(run, "chain_max_dsl_vs_dh"))]
    record(7, parts)


def test_criterion_08_constant_form(scenarios, record):
    run = scenarios("constant-form", chain_pairs=CHAIN_PAIRS)
    a = _m(run, "a")
    cell = run.tolerances["forward_ball_edge"]
    edge = _m(run, "forward_ball_edge")
    fwd, bwd, ds = (_m(run, k) for k in ("distance_forward", "distance_backward", "distance_symmetrized"))
    record(8, [("|d-(1+a)|", abs(fwd - (1 + a)) < 1e-3, abs(fwd - (1 + a))),
               ("|rev-(1-a)|", abs(bwd - (1 - a)) < 1e-3, abs(bwd - (1 - a))),
               ("|ds-1|", abs(ds - 1) < 1e-3, abs(ds - 1)),
               ("|edge-2/3|/cell", abs(edge - 2 / 3) <= cell, abs(edge - 2 / 3) / cell)])


def test_criterion_09_minkowski(scenarios, record):
    run = scenarios("minkowski-development")
    apex = next(c for c in run.checks if c.name == "apex crease detected")
    record(9, [("D+ cells", _m(run, "development_hausdorff_cells") <= 2, _m(run, "development_hausdorff_cells")),
               ("H+ cells", _m(run, "horizon_hausdorff_cells") <= 2, _m(run, "horizon_hausdorff_cells")),
               ("apex", apex.passed, apex.value),
               ("seconds", _m(run, "seconds") < 60, _m(run, "seconds"))])


def test_criterion_10_cut_locus(scenarios, record):
    disk = scenarios("disk-cut-locus")
    two = scenarios("two-disk-horizon")
    ratio = _m(two, "crease_count_ratio")
    record(10, [("disk cells", _m(disk, "cut_max_distance_cells") <= 2, _m(disk, "cut_max_distance_cells")),
                ("rho err", _m(disk, "rho_error") < 1e-3, _m(disk, "rho_error")),
                ("crease ratio", abs(ratio - 2) <= two.tolerances["crease_count_ratio"], ratio),
                ("disk agreement", _m(disk, "cut_agreement") > 0.99, _m(disk, "cut_agreement")),
                ("two-disk agreement", min(_m(two, "cut_agreement"), _m(two, "cut_agreement_refined")) > 0.99,
                 min(_m(two, "cut_agreement"), _m(two, "cut_agreement_refined")))])


INVARIANTS = ("triangle inequality", "positive homogeneity", "fundamental tensor symmetric",
              "fundamental tensor positive definite", "geodesic speed constancy", "Killing conservation",
              "tdot >= F(xdot) > 0")


def test_criterion_11_invariants(scenarios, record):
    parts = []
    for name in REGISTRY:
        params = {"chain_pairs": CHAIN_PAIRS} if name in ("flat", "constant-form") else {}
        run = scenarios(name, **params)
        checks = {c.name: c for c in run.checks}
        missing = [k for k in INVARIANTS if k not in checks]
        failed = [k for k in INVARIANTS if k in checks and not checks[k].passed]
        parts.append((name, not missing and not failed, "ok" if not (missing or failed) else missing + failed))
    total = sum(scenarios.seconds.values())
    parts.append(("scenario seconds", total < 300, total))
    record(11, parts)


def test_every_scenario_passes_its_own_checks(scenarios):
    for name in REGISTRY:
        params = {"chain_pairs": CHAIN_PAIRS} if name in ("flat", "constant-form") else {}
        run = scenarios(name, **params)
        assert run.passed, [c.line() for c in run.failures()]
