"""Scenario files: parsing, validation and the system builders.

A scenario is a JSON document

    {"scenario_version": 1, "name": ..., "seed": ..., "tolerance": ...,
     "systems": {id: {"type": ..., ...}}, "checks": [{"id", "op", "args", ...}]}

Systems are built once, in declaration order, each from its own random
stream, so a check sees the same objects whatever else the scenario holds.
Arguments of a check refer to systems by id or declare them inline.
"""

from __future__ import annotations

import hashlib
import json
import math
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import category as cat
from . import charge as ch
from . import cocycle as cc
from . import double as dbl
from . import susy
from .errors import DomainError, ScenarioError
from .jsonio import parse_matrix, parse_scalar
from .qsys import Dynamics, Element, MatrixAlgebra, State, gibbs_state

SCENARIO_VERSION = 1
DEFAULT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Check:
    id: str
    op: str
    args: dict
    tolerance: float | None
    expect: str
    index: int


@dataclass
class Scenario:
    name: str
    seed: int
    tolerance: float
    systems: dict[str, dict]
    checks: list[Check]
    source: str = ""
    digest: str = ""
    base_dir: Path = field(default_factory=Path.cwd)


def stream(seed: int, key: str) -> np.random.Generator:
    """An independent random stream for one named consumer."""
    return np.random.default_rng([int(seed) & 0xFFFFFFFF, zlib.crc32(key.encode())])


# parsing

def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


def parse(data: bytes, source: str = "<memory>", base_dir: Path | None = None) -> Scenario:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ScenarioError(f"invalid UTF-8 ({exc.reason})", f"byte {exc.start}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        off = _byte_offset(text, exc.pos)
        raise ScenarioError(f"malformed JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})",
                            f"byte {off}") from None
    sc = validate(doc)
    sc.source = source
    sc.digest = hashlib.sha256(data).hexdigest()
    if base_dir is not None:
        sc.base_dir = base_dir
    return sc


def load(path: str | Path) -> Scenario:
    p = Path(path)
    try:
        data = p.read_bytes()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc.strerror}", str(path)) from None
    return parse(data, p.name, p.resolve().parent)


def _positive(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x) or x <= 0:
        raise ScenarioError(f"tolerance must be a positive number, got {x!r}", where)
    return float(x)


def validate(doc: Any) -> Scenario:
    from .ops import OPS  # the registry imports this module

    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a JSON object", "$")
    version = doc.get("scenario_version")
    if version != SCENARIO_VERSION:
        raise ScenarioError(f"unsupported scenario_version {version!r} (expected {SCENARIO_VERSION})",
                            "scenario_version")
    name = doc.get("name", "")
    if not isinstance(name, str):
        raise ScenarioError("name must be a string", "name")
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ScenarioError("seed must be a nonnegative integer", "seed")
    tol = _positive(doc.get("tolerance", DEFAULT_TOLERANCE), "tolerance")
    systems = doc.get("systems", {})
    if not isinstance(systems, dict):
        raise ScenarioError("systems must be an object keyed by id", "systems")
    for sid, spec in systems.items():
        if not isinstance(spec, dict) or spec.get("type") not in BUILDERS:
            raise ScenarioError(f"unknown or missing system type {spec.get('type') if isinstance(spec, dict) else spec!r}",
                                f"systems.{sid}")
    raw_checks = doc.get("checks", [])
    if not isinstance(raw_checks, list):
        raise ScenarioError("checks must be a list", "checks")
    checks, seen = [], set()
    for k, c in enumerate(raw_checks):
        where = f"checks[{k}]"
        if not isinstance(c, dict):
            raise ScenarioError("check must be an object", where)
        cid, op = c.get("id"), c.get("op")
        if not isinstance(cid, str) or not cid:
            raise ScenarioError("check id must be a non-empty string", f"{where}.id")
        if cid in seen:
            raise ScenarioError(f"duplicate check id {cid!r}", f"{where}.id")
        seen.add(cid)
        if op not in OPS:
            raise ScenarioError(f"unknown operation {op!r}", f"{where}.op")
        args = c.get("args", {})
        if not isinstance(args, dict):
            raise ScenarioError("args must be an object", f"{where}.args")
        ctol = c.get("tolerance")
        if ctol is not None:
            ctol = _positive(ctol, f"{where}.tolerance")
        expect = c.get("expect", "pass")
        if expect not in ("pass", "fail"):
            raise ScenarioError("expect must be 'pass' or 'fail'", f"{where}.expect")
        for key, kind in OPS[op].refs.items():
            if key in args:
                _check_ref(args[key], kind, systems, f"{where}.args.{key}")
        checks.append(Check(cid, op, args, ctol, expect, k))
    for sid, spec in systems.items():
        for key, kind in REF_FIELDS.get(spec["type"], {}).items():
            if key in spec:
                _check_ref(spec[key], kind, systems, f"systems.{sid}.{key}")
    return Scenario(name, seed, tol, systems, checks)


def _check_ref(value, kind, systems, where):
    kinds = kind if isinstance(kind, tuple) else (kind,)
    if isinstance(value, list) and "list" in kinds:
        for i, v in enumerate(value):
            _check_ref(v, tuple(k for k in kinds if k != "list"), systems, f"{where}[{i}]")
        return
    if isinstance(value, str):
        if value not in systems:
            raise ScenarioError(f"unresolved reference {value!r}", where)
        got = systems[value]["type"]
        if got not in kinds:
            raise ScenarioError(f"reference {value!r} is a {got}, expected {' or '.join(kinds)}", where)
    elif isinstance(value, dict) and "type" in value:
        if value["type"] not in kinds:
            raise ScenarioError(f"inline system of type {value['type']!r}, expected {' or '.join(kinds)}",
                                where)


# system construction

class Context:
    """Builds and caches the systems of a scenario."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self._cache: dict[str, Any] = {}
        self._building: set[str] = set()

    def build_all(self) -> None:
        for sid in self.scenario.systems:
            self.get(sid)

    def get(self, ref, kind: str | tuple[str, ...] | None = None, where: str = "") -> Any:
        if isinstance(ref, str):
            if ref not in self.scenario.systems:
                raise ScenarioError(f"unresolved reference {ref!r}", where or None)
            spec = self.scenario.systems[ref]
            self._expect(spec, kind, ref)
            if ref not in self._cache:
                if ref in self._building:
                    raise ScenarioError("reference cycle", f"systems.{ref}")
                self._building.add(ref)
                try:
                    self._cache[ref] = self._make(spec, stream(self.scenario.seed, "system:" + ref),
                                                  f"systems.{ref}")
                finally:
                    self._building.discard(ref)
            return self._cache[ref]
        if isinstance(ref, dict) and "type" in ref:
            self._expect(ref, kind, "inline")
            key = json.dumps(ref, sort_keys=True)
            return self._make(ref, stream(self.scenario.seed, "inline:" + key), where or "inline")
        raise ScenarioError(f"expected a system reference, got {ref!r}", where or None)

    @staticmethod
    def _expect(spec, kind, name):
        if kind is None:
            return
        kinds = kind if isinstance(kind, tuple) else (kind,)
        if spec.get("type") not in kinds:
            raise ScenarioError(f"{name} is a {spec.get('type')}, expected {' or '.join(kinds)}")

    def _make(self, spec: dict, rng: np.random.Generator, where: str):
        builder = BUILDERS.get(spec.get("type"))
        if builder is None:
            raise ScenarioError(f"unknown system type {spec.get('type')!r}", where)
        try:
            return builder(self, spec, rng)
        except ScenarioError:
            raise
        except (DomainError, KeyError, TypeError, ValueError, IndexError) as exc:
            msg = f"missing field {exc}" if isinstance(exc, KeyError) else str(exc)
            raise ScenarioError(msg, where) from None

    def path(self, rel: str) -> Path:
        return (self.scenario.base_dir / rel).resolve()


def _algebra(ctx: Context, spec: dict, rng) -> MatrixAlgebra:
    return MatrixAlgebra(tuple(int(n) for n in spec["blocks"]))


def _blocks_of(alg: MatrixAlgebra, blocks) -> Element:
    return alg.element(parse_matrix(b) for b in blocks)


def _diag(alg: MatrixAlgebra, diag) -> Element:
    if len(alg.blocks) == 1 and diag and not isinstance(diag[0], list):
        diag = [diag]
    return alg.element(np.diag([parse_scalar(x) for x in d]) for d in diag)


PAULI = {"x": [[0, 1], [1, 0]], "y": [[0, -1j], [1j, 0]], "z": [[1, 0], [0, -1]]}


def _element(ctx: Context, spec: dict, rng) -> Element:
    alg = ctx.get(spec["algebra"], "algebra")
    if "blocks" in spec:
        return _blocks_of(alg, spec["blocks"])
    if "diag" in spec:
        return _diag(alg, spec["diag"])
    if "pauli" in spec:
        if alg.blocks != (2,):
            raise DomainError("Pauli matrices live in M_2")
        return alg.element([np.array(PAULI[spec["pauli"]], dtype=complex)])
    kind = spec.get("random")
    scale = float(spec.get("scale", 1.0))
    if kind == "element":
        return alg.random_element(rng) * scale
    if kind == "hermitian":
        return alg.random_hermitian(rng, scale)
    if kind == "unitary":
        return alg.random_unitary(rng)
    if kind == "real_hermitian":
        return alg.element(_real_sym(rng, n) * scale for n in alg.blocks)
    if kind == "symmetric_unitary":
        return alg.element(_sym_unitary(rng, n) for n in alg.blocks)
    if kind == "identity":
        return alg.identity()
    raise DomainError("element needs blocks, diag, pauli or a random kind")


def _real_sym(rng, n):
    a = rng.standard_normal((n, n))
    return ((a + a.T) / 2).astype(complex)


def _sym_unitary(rng, n):
    """e^{iA} with A real symmetric: a unitary equal to its transpose."""
    w, v = np.linalg.eigh(_real_sym(rng, n).real)
    return (v * np.exp(1j * w)) @ v.T


def _state(ctx: Context, spec: dict, rng) -> State:
    if "gibbs" in spec:
        dyn = ctx.get(spec["gibbs"], ("dynamics", "black_hole"))
        return dyn.state if isinstance(dyn, ch.BlackHoleScenario) else dyn.gibbs()
    if "scaled" in spec:
        return ctx.get(spec["scaled"], "state").scaled(float(spec["factor"]))
    alg = ctx.get(spec["algebra"], "algebra")
    if "densities" in spec:
        return State(alg, tuple(parse_matrix(d) for d in spec["densities"]))
    if "diag" in spec:
        return State(alg, _diag(alg, spec["diag"]).blocks)
    if spec.get("tracial"):
        w = float(spec.get("weight", 1.0))
        return State(alg, tuple(np.eye(n) * w / alg.hilbert_dim for n in alg.blocks))
    if spec.get("random"):
        return alg.random_state(rng, float(spec.get("weight", 1.0)))
    raise DomainError("state needs gibbs, scaled, densities, diag, tracial or random")


def _dynamics(ctx: Context, spec: dict, rng) -> Dynamics:
    return Dynamics(ctx.get(spec["H"], "element"), float(spec["beta"]))


def _charge(ctx: Context, spec: dict, rng) -> ch.Charge:
    kind = spec.get("kind", "abelian")
    c = float(spec.get("c", 0.0))
    if kind == "abelian":
        return ch.abelian(ctx.get(spec["v"], "element"), c)
    if kind == "identity":
        return ch.identity_charge(ctx.get(spec["algebra"], "algebra"), c)
    if kind == "multiplicity":
        d = int(spec["d"])
        sur = spec.get("surrogate", "exact")
        if sur == "exact":
            src = ctx.get(spec["dynamics"], ("dynamics", "black_hole"))
            phi = src.state if isinstance(src, ch.BlackHoleScenario) else src.gibbs()
            return ch.multiplicity(d, phi.scaled(d), c)
        return ch.multiplicity(d, ctx.get(sur, "state"), c)
    raise DomainError(f"unknown charge kind {kind!r}")


def _dyn_of(ctx, ref) -> Dynamics:
    obj = ctx.get(ref, ("dynamics", "black_hole"))
    return obj.dynamics if isinstance(obj, ch.BlackHoleScenario) else obj


def _cocycle(ctx: Context, spec: dict, rng) -> cc.UnitaryCocycle:
    kind = spec["kind"]
    if kind == "connes":
        psi, phi = ctx.get(spec["psi"], "state"), ctx.get(spec["phi"], "state")
        if spec.get("parameterization", "modular") == "modular":
            return cc.connes_cocycle(psi, phi)
        if "dynamics" in spec:
            return cc.connes_cocycle(psi, phi, dynamics=_dyn_of(ctx, spec["dynamics"]))
        return cc.connes_cocycle(psi, phi, beta=float(spec["beta"]))
    if kind == "phase":
        return cc.phase(float(spec["c"]), _dyn_of(ctx, spec["dynamics"]))
    if kind == "conjugation":
        return cc.conjugation(ctx.get(spec["v"], "element"), _dyn_of(ctx, spec["dynamics"]))
    if kind == "perturbation":
        return cc.perturbation(_dyn_of(ctx, spec["dynamics"]), ctx.get(spec["H1"], "element"))
    if kind == "covariance":
        c = spec.get("c")
        return ch.covariance_cocycle(ctx.get(spec["charge"], "charge"), _dyn_of(ctx, spec["dynamics"]),
                                     None if c is None else float(c))
    if kind == "frobenius_dual":
        return ch.frobenius_dual_cocycle(ctx.get(spec["charge"], "charge"),
                                         ctx.get(spec["cocycle"], "cocycle"))
    if kind == "composite":
        return cc.composite([ctx.get(f, "cocycle") for f in spec["factors"]])
    if kind == "product_family":
        # u(t) = e^{itA}e^{itB}: not a cocycle unless A, B fit the dynamics
        A, B = ctx.get(spec["A"], "element"), ctx.get(spec["B"], "element")
        from .qsys import exp_i
        return cc.sampled(lambda t: exp_i(A, t) @ exp_i(B, t), _dyn_of(ctx, spec["dynamics"]))
    raise DomainError(f"unknown cocycle kind {kind!r}")


def _graded(ctx: Context, spec: dict, rng) -> susy.GradedSystem:
    if "Q" in spec:
        return susy.GradedSystem.from_json(spec)
    if "Q_plus" in spec:
        return susy.GradedSystem.from_blocks(parse_matrix(spec["Q_plus"]))
    if "random" in spec:
        r = spec["random"]
        return susy.random_system(rng, int(r["p"]), int(r["q"]), float(r.get("scale", 1.0)),
                                  r.get("rank"))
    if "zero" in spec:
        p, q = spec["zero"]
        return susy.GradedSystem(np.r_[np.ones(p), -np.ones(q)], np.zeros((p + q, p + q)))
    raise DomainError("graded system needs Q, Q_plus, random or zero")


def _json_file(ctx, rel):
    try:
        return json.loads(ctx.path(rel).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DomainError(f"cannot read {rel}: {exc}") from None


def _fusion_ring(ctx: Context, spec: dict, rng) -> cat.FusionRing:
    if "builtin" in spec:
        return cat.builtin_ring(spec["builtin"])
    if "group" in spec:
        return cat.rep_fusion_ring(ctx.get(spec["group"], "group"))
    doc = _json_file(ctx, spec["file"]) if "file" in spec else spec
    return cat.FusionRing.from_json(doc, spec.get("name", ""))


def _group(ctx: Context, spec: dict, rng) -> cat.Group:
    if "builtin" in spec:
        return cat.builtin_group(spec["builtin"])
    doc = _json_file(ctx, spec["file"]) if "file" in spec else spec
    return cat.Group.from_json(doc, spec.get("name", ""))


def _rep(ctx: Context, spec: dict, rng) -> cat.RepObject:
    return cat.builtin_rep(spec["builtin"])


def _double(ctx: Context, spec: dict, rng) -> dbl.DoubleSpec:
    kind = spec.get("kind", "pointed")
    if kind == "trivial":
        return dbl.trivial_double(ctx.get(spec["algebra"], "algebra"))
    if kind != "pointed":
        raise DomainError(f"unknown double kind {kind!r}")
    signs = {(int(i), int(j)): parse_scalar(s) for i, j, s in spec.get("signs", [])}
    make = {"inner": dbl.pointed_inner, "outer": dbl.pointed_outer}[spec.get("variant", "inner")]
    return make(int(spec["n"]), signs or None)


def _black_hole(ctx: Context, spec: dict, rng) -> ch.BlackHoleScenario:
    return ch.BlackHoleScenario(float(spec["kappa"]), ctx.get(spec["H"], "element"))


BUILDERS: dict[str, Callable[[Context, dict, np.random.Generator], Any]] = {
    "algebra": _algebra, "element": _element, "state": _state, "dynamics": _dynamics,
    "charge": _charge, "cocycle": _cocycle, "graded": _graded, "fusion_ring": _fusion_ring,
    "group": _group, "rep": _rep, "double": _double, "black_hole": _black_hole,
}

# fields of system declarations that name other systems (checked at load time)
REF_FIELDS: dict[str, dict[str, Any]] = {
    "element": {"algebra": "algebra"},
    "state": {"algebra": "algebra", "gibbs": ("dynamics", "black_hole"), "scaled": "state"},
    "dynamics": {"H": "element"},
    "charge": {"v": "element", "algebra": "algebra", "dynamics": ("dynamics", "black_hole")},
    "cocycle": {"psi": "state", "phi": "state", "dynamics": ("dynamics", "black_hole"),
                "v": "element", "H1": "element", "charge": "charge", "cocycle": "cocycle",
                "factors": ("list", "cocycle"), "A": "element", "B": "element"},
    "fusion_ring": {"group": "group"},
    "double": {"algebra": "algebra"},
    "black_hole": {"H": "element"},
}
