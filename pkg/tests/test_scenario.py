import json

import pytest

from modindex.errors import ScenarioError
from modindex.scenario import Context, parse


def _doc(**kw):
    doc = {"scenario_version": 1, "name": "t", "seed": 1, "systems": {}, "checks": []}
    doc.update(kw)
    return json.dumps(doc).encode()


def test_malformed_json_reports_byte_offset():
    data = b'{"scenario_version": 1, "name": "\xc3\xa9", oops}'
    with pytest.raises(ScenarioError) as exc:
        parse(data)
    # the é is two bytes, so the byte offset is one past the character offset
    assert exc.value.location == f"byte {data.index(b'oops')}"


def test_invalid_utf8():
    with pytest.raises(ScenarioError) as exc:
        parse(b'{"name": "\xff"}')
    assert exc.value.location == "byte 10"


@pytest.mark.parametrize("patch,location", [
    ({"scenario_version": 2}, "scenario_version"),
    ({"seed": -1}, "seed"),
    ({"tolerance": 0}, "tolerance"),
    ({"systems": {"x": {"type": "nonsense"}}}, "systems.x"),
    ({"checks": [{"id": "a", "op": "qsys.nope"}]}, "checks[0].op"),
    ({"checks": [{"id": "a", "op": "qsys.kms_check", "args": {"state": "ghost"}}]}, "checks[0].args.state"),
    ({"checks": [{"id": "a", "op": "qsys.gns"}, {"id": "a", "op": "qsys.gns"}]}, "checks[1].id"),
    ({"checks": [{"id": "a", "op": "qsys.gns", "expect": "maybe"}]}, "checks[0].expect"),
    ({"checks": [{"id": "a", "op": "qsys.gns", "tolerance": -1}]}, "checks[0].tolerance"),
])
def test_validation_locations(patch, location):
    with pytest.raises(ScenarioError) as exc:
        parse(_doc(**patch))
    assert exc.value.location == location


def test_reference_kind_is_checked():
    systems = {"A": {"type": "algebra", "blocks": [2]}}
    checks = [{"id": "c", "op": "qsys.gns", "args": {"state": "A"}}]
    with pytest.raises(ScenarioError, match="expected state"):
        parse(_doc(systems=systems, checks=checks))


def test_systems_are_seeded_per_id():
    systems = {"A": {"type": "algebra", "blocks": [3]},
               "x": {"type": "element", "algebra": "A", "random": "hermitian"}}
    one = Context(parse(_doc(systems=systems))).get("x")
    more = dict(systems, y={"type": "element", "algebra": "A", "random": "unitary"})
    two = Context(parse(_doc(systems=more))).get("x")
    assert (one - two).norm() == 0


def test_reference_cycle_detected():
    systems = {"s": {"type": "state", "scaled": "t", "factor": 2},
               "t": {"type": "state", "scaled": "s", "factor": 2}}
    with pytest.raises(ScenarioError, match="cycle"):
        Context(parse(_doc(systems=systems))).build_all()


def test_builder_errors_carry_location():
    systems = {"A": {"type": "algebra", "blocks": [3]},
               "x": {"type": "element", "algebra": "A", "pauli": "x"}}
    with pytest.raises(ScenarioError) as exc:
        Context(parse(_doc(systems=systems))).build_all()
    assert exc.value.location == "systems.x"


def test_inline_systems():
    inline = {"type": "state", "algebra": {"type": "algebra", "blocks": [2]}, "tracial": True}
    sc = parse(_doc())
    phi = Context(sc).get(inline, "state")
    assert phi.weight == pytest.approx(1)
