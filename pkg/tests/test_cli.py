import json

import pytest

from randers_src import cli, scenarios
from randers_src.scenarios import Scenario, ScenarioResult


@pytest.fixture(scope="module")
def mink_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("runs")
    outs = {}
    for tag, extra in (("a", []), ("b", []), ("seed", ["--seed", "7"]), ("coarse", ["--res", "101"])):
        out = base / tag
        assert cli.main(["run", "minkowski-development", "--out", str(out), *extra]) == cli.EXIT_OK
        outs[tag] = out
    return outs


def test_list(capsys):
    assert cli.main(["list"]) == 0
    text = capsys.readouterr().out
    for name in scenarios.REGISTRY:
        assert name in text


def test_run_writes_manifest_and_artifacts(mink_runs):
    out = mink_runs["a"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["schema_version"] == cli.SCHEMA_VERSION
    assert manifest["scenario"] == "minkowski-development"
    assert manifest["passed"] is True
    assert manifest["inputs"]["resolution"] == 201
    assert {"numpy", "scipy", "python"} <= set(manifest["versions"])
    for name in manifest["artifacts"]:
        assert (out / name).is_file()
    assert any(n.endswith(".csv") for n in manifest["artifacts"])
    assert any(n.endswith(".svg") for n in manifest["artifacts"])


def test_runs_are_deterministic(mink_runs):
    a, b = mink_runs["a"], mink_runs["b"]
    for path in a.glob("*.csv"):
        assert path.read_bytes() == (b / path.name).read_bytes()


def test_compare_identical_and_across_seed_and_resolution(mink_runs, capsys):
    assert cli.main(["compare", str(mink_runs["a"]), str(mink_runs["b"])]) == 0
    assert cli.main(["compare", str(mink_runs["a"]), str(mink_runs["seed"])]) == 0
    assert cli.main(["compare", str(mink_runs["a"]), str(mink_runs["coarse"])]) == 0
    assert "0 difference(s)" in capsys.readouterr().out


def test_compare_schema_mismatch(mink_runs, tmp_path):
    manifest = json.loads((mink_runs["a"] / "manifest.json").read_text())
    manifest["schema_version"] = 99
    other = tmp_path / "m.json"
    other.write_text(json.dumps(manifest))
    assert cli.main(["compare", str(mink_runs["a"]), str(other)]) == cli.EXIT_USAGE
    manifest["schema_version"] = cli.SCHEMA_VERSION
    del manifest["metrics"]["seconds"]
    other.write_text(json.dumps(manifest))
    assert cli.main(["compare", str(mink_runs["a"]), str(other)]) == cli.EXIT_USAGE


def test_compare_flags_metric_beyond_tolerance(mink_runs):
    a = json.loads((mink_runs["a"] / "manifest.json").read_text())
    b = json.loads(json.dumps(a))
    key = next(k for k, t in a["tolerances"].items() if t is not None and not isinstance(a["metrics"][k], bool))
    b["metrics"][key] = a["metrics"][key] + 10 * a["tolerances"][key] + 1.0
    diffs = cli.compare_manifests(a, b)
    assert [d.key for d in diffs] == [key]


@pytest.mark.parametrize("argv", [
    ["run", "no-such-scenario"],
    ["run", "minkowski-development", "--res", "10"],
    ["run", "minkowski-development", "--A=1,-1"],
    ["run", "constant-form", "--a", "1.5"],
    ["run", "flat", "--param", "novalue"],
])
def test_usage_errors_exit_2(argv, tmp_path):
    assert cli.main([*argv, "--out", str(tmp_path)]) == cli.EXIT_USAGE


def test_yaml_config(tmp_path):
    cfg = tmp_path / "c.yaml"
    out = tmp_path / "out"
    cfg.write_text(f"scenario: minkowski-development\nresolution: 65\nseed: 3\nout: {out}\n"
                   "params:\n  A: [-0.5, 0.5]\n  a: 0.2\n")
    assert cli.main(["run", "--config", str(cfg)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["inputs"]["resolution"] == 65
    assert manifest["seed"] == 3
    assert manifest["inputs"]["params"] == {"A": [-0.5, 0.5], "a": 0.2}


def test_failing_check_exits_1(monkeypatch, tmp_path):
    def broken(cfg):
        res = ScenarioResult("broken")
        res.metric("x", 1.0, 0.0)
        res.check("always fails", False, 1.0, 0.0)
        return res
    monkeypatch.setitem(scenarios.REGISTRY, "broken", Scenario("broken", "test", broken, 32))
    assert cli.main(["run", "broken", "--out", str(tmp_path)]) == cli.EXIT_FAIL
    assert json.loads((tmp_path / "manifest.json").read_text())["passed"] is False
