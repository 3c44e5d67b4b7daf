"""Command-line front end: ``randers-src run | compare | list``."""

from __future__ import annotations

import argparse
import json
import platform
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy
import skimage
import yaml

from . import __version__
from .scenarios import REGISTRY, ConfigError, ScenarioConfig, ScenarioResult, run_scenario

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class SchemaMismatch(ValueError):
    """Two manifests that cannot be compared."""


# ----------------------------------------------------------------------------
# configuration

def load_config(args: argparse.Namespace) -> ScenarioConfig:
    """Merge the optional YAML config file with command-line overrides."""
    data: dict = {}
    if args.config:
        with open(args.config) as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a mapping")
    params = dict(data.get("params") or {})
    for item in args.param or []:
        if "=" not in item:
            raise ConfigError(f"--param expects key=value, got {item!r}")
        key, text = item.split("=", 1)
        params[key] = yaml.safe_load(text)
    if args.A is not None:
        try:
            lo, hi = (float(v) for v in args.A.split(","))
        except ValueError:
            raise ConfigError("--A expects lo,hi") from None
        params["A"] = [lo, hi]
    if args.a is not None:
        params["a"] = args.a
    scenario = args.scenario or data.get("scenario")
    if not scenario:
        raise ConfigError("no scenario given")
    if scenario not in REGISTRY:
        raise ConfigError(f"unknown scenario {scenario!r}; known: {', '.join(REGISTRY)}")
    resolution = args.res if args.res is not None else data.get("resolution")
    return ScenarioConfig(
        scenario=scenario,
        resolution=int(resolution) if resolution is not None else None,
        tol=float(args.tol if args.tol is not None else data.get("tol", 1e-9)),
        out=str(args.out or data.get("out") or Path("out") / scenario),
        seed=int(args.seed if args.seed is not None else data.get("seed", 0)),
        params=params,
    )


# ----------------------------------------------------------------------------
# run

def _versions() -> dict:
    return {"randers_src": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "scikit-image": skimage.__version__}


def build_manifest(cfg: ScenarioConfig, result: ScenarioResult) -> dict:
    default = REGISTRY[cfg.scenario].default_resolution
    return {
        "schema_version": SCHEMA_VERSION,
        "scenario": cfg.scenario,
        "inputs": {"resolution": cfg.res(default), "tol": cfg.tol, "seed": cfg.seed,
                   "params": cfg.params},
        "versions": _versions(),
        "seed": cfg.seed,
        "passed": result.passed,
        "metrics": result.metrics,
        "tolerances": result.tolerances,
        "checks": [{"name": c.name, "passed": c.passed, "value": c.value, "limit": c.limit,
                    "detail": c.detail} for c in result.checks],
        "artifacts": sorted(result.artifacts),
    }


def write_outputs(cfg: ScenarioConfig, result: ScenarioResult) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, content in sorted(result.artifacts.items()):
        path = out / name
        if callable(content):
            content(path)
        else:
            path.write_text(content)
    with open(out / "manifest.json", "w") as fh:
        json.dump(build_manifest(cfg, result), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out


def cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    result = run_scenario(cfg)
    out = write_outputs(cfg, result)
    for c in result.checks:
        print(c.line())
    failed = result.failures()
    if failed:
        print(f"\n{cfg.scenario}: {len(failed)} of {len(result.checks)} checks FAILED", file=sys.stderr)
        for c in failed:
            print("  " + c.line(), file=sys.stderr)
        return EXIT_FAIL
    print(f"\n{cfg.scenario}: all {len(result.checks)} checks passed; outputs in {out}")
    return EXIT_OK


# ----------------------------------------------------------------------------
# compare

@dataclass(frozen=True)
class Difference:
    key: str
    a: object
    b: object
    tol: float | None

    def line(self) -> str:
        return f"{self.key}: {self.a!r} vs {self.b!r} (tol {self.tol})"


def _load_manifest(path) -> dict:
    p = Path(path)
    if p.is_dir():
        p = p / "manifest.json"
    with open(p) as fh:
        return json.load(fh)


def compare_manifests(a: dict, b: dict) -> list[Difference]:
    """Metric differences beyond the per-key tolerance recorded in ``a``.

    Metrics with no tolerance are informational (timings, counts that
    depend on resolution) and are skipped.
    """
    if a.get("schema_version") != b.get("schema_version"):
        raise SchemaMismatch(f"schema versions differ: {a.get('schema_version')} vs {b.get('schema_version')}")
    if a.get("scenario") != b.get("scenario"):
        raise SchemaMismatch(f"scenarios differ: {a.get('scenario')} vs {b.get('scenario')}")
    ka, kb = set(a["metrics"]), set(b["metrics"])
    if ka != kb:
        raise SchemaMismatch(f"metric keys differ: {sorted(ka ^ kb)}")
    diffs = []
    for key in sorted(ka):
        tol = a["tolerances"].get(key)
        if tol is None:
            continue
        va, vb = a["metrics"][key], b["metrics"][key]
        if isinstance(va, bool) or isinstance(vb, bool):
            if va != vb:
                diffs.append(Difference(key, va, vb, tol))
        elif not (abs(float(va) - float(vb)) <= tol or va == vb):
            diffs.append(Difference(key, va, vb, tol))
    ca = {c["name"]: c["passed"] for c in a["checks"]}
    cb = {c["name"]: c["passed"] for c in b["checks"]}
    for name in sorted(set(ca) | set(cb)):
        if ca.get(name) != cb.get(name):
            diffs.append(Difference(f"check: {name}", ca.get(name), cb.get(name), None))
    return diffs


def cmd_compare(args: argparse.Namespace) -> int:
    try:
        diffs = compare_manifests(_load_manifest(args.a), _load_manifest(args.b))
    except SchemaMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for d in diffs:
        print(d.line())
    print(f"{len(diffs)} difference(s)")
    return EXIT_OK if not diffs else EXIT_FAIL


def cmd_list(args: argparse.Namespace) -> int:
    for sc in REGISTRY.values():
        print(f"{sc.name:24s} (default resolution {sc.default_resolution}) {sc.description}")
    return EXIT_OK


# ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="randers-src", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a registered scenario")
    run.add_argument("scenario", nargs="?", help="scenario name (or from --config)")
    run.add_argument("--res", type=int, help="grid resolution (nodes per axis, at least 32)")
    run.add_argument("--tol", type=float, help="integration tolerance")
    run.add_argument("--out", help="output directory (default out/<scenario>)")
    run.add_argument("--seed", type=int, help="random seed")
    run.add_argument("--config", help="YAML config file")
    run.add_argument("--param", action="append", metavar="KEY=VALUE", help="scenario parameter")
    run.add_argument("--A", help="interval lo,hi for minkowski-development (write --A=-1,1)")
    run.add_argument("--a", type=float, help="one-form coefficient for constant-form / minkowski-development")
    run.set_defaults(func=cmd_run)
    cmp_ = sub.add_parser("compare", help="compare two manifests (files or run directories)")
    cmp_.add_argument("a")
    cmp_.add_argument("b")
    cmp_.set_defaults(func=cmd_compare)
    lst = sub.add_parser("list", help="list registered scenarios")
    lst.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OSError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
