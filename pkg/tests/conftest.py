import time

import pytest

from randers_src.scenarios import ScenarioConfig, run_scenario

CRITERIA = {
    1: "hyperbola-section total Fermat length = 2",
    2: "strip-cylinder: length pi, ds <= 12+pi, escape flag",
    3: "ds-Cauchy sequence steps below 2^-n",
    4: "projection of null geodesics onto Fermat geodesics",
    5: "SRC round trip and section-change routes",
    6: "section-change invariants",
    7: "distance chain ds <= ds_l <= d_h",
    8: "constant-form distances and ball edge",
    9: "Minkowski development vs grid reachability",
    10: "cut locus and crease scaling",
    11: "invariant suites on every scenario",
}
RESULTS: dict[int, tuple[bool, str]] = {}


class ScenarioCache:
    """Runs each scenario configuration once per session."""

    def __init__(self):
        self._runs = {}
        self.seconds = {}

    def __call__(self, name: str, **params):
        key = (name, tuple(sorted(params.items())))
        if key not in self._runs:
            start = time.perf_counter()
            self._runs[key] = run_scenario(ScenarioConfig(name, params=params))
            self.seconds[key] = time.perf_counter() - start
        return self._runs[key]


@pytest.fixture(scope="session")
def scenarios():
    return ScenarioCache()


@pytest.fixture
def record():
    """Store a criterion outcome for the terminal summary, then assert it."""
    def _record(number: int, parts: list[tuple[str, bool, object]]):
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{label}={value:.3g}" if isinstance(value, float) else f"{label}={value}"
                           for label, _, value in parts)
        RESULTS[number] = (ok, detail)
        failed = [label for label, passed, _ in parts if not passed]
        assert ok, f"criterion {number} failed: {failed}"
    return _record


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in CRITERIA.items():
        if n in RESULTS:
            ok, detail = RESULTS[n]
            terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:2d}. {title}: {detail}")
        else:
            terminalreporter.write_line(f"[FAIL] {n:2d}. {title}: not evaluated")
