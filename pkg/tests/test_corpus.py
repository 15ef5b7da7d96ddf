"""The shipped scenarios pass and together exercise every operation."""

import json

import pytest

from modindex.cli import exit_code, run
from modindex.ops import OPS
from modindex.report import emit
from modindex.scenario import load

from conftest import SCENARIOS

FILES = sorted(SCENARIOS.glob("*.json"))


@pytest.mark.parametrize("path", FILES, ids=[p.stem for p in FILES])
def test_scenario_passes(path):
    rep = run(load(path))
    bad = [(c["id"], c["status"], c["max_residual"], c["error"]) for c in rep["checks"] if c["status"] != "pass"]
    assert not bad
    assert exit_code(rep) == 0
    for fmt in ("json", "md", "csv"):
        assert emit(rep, fmt)


def test_every_operation_is_exercised():
    used = set()
    for path in FILES:
        used |= {c["op"] for c in json.loads(path.read_text())["checks"]}
    assert set(OPS) - used == set()


def test_every_module_has_operations():
    modules = {name.split(".")[0] for name in OPS}
    assert modules == {"qsys", "cocycle", "charge", "category", "double", "susy"}


def test_controls_are_declared():
    # each negative control must be expected to fail, so the suite cannot go green by accident
    controls = [c for p in FILES for c in json.loads(p.read_text())["checks"] if "control" in c["id"]]
    assert controls and all(c.get("expect") == "fail" for c in controls)
