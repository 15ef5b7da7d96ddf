"""Scenario operations: one handler per library operation.

A handler receives the scenario context, the check's arguments and a
random stream, and returns the residuals of every identity it asserts
together with the computed values.  Randomized property checks draw their
instances from the stream, so a scenario replays exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from scipy import integrate
from scipy.linalg import null_space

from . import category as cat
from . import charge as ch
from . import cocycle as cc
from . import double as dbl
from . import qsys
from . import susy
from .errors import DomainError
from .jsonio import parse_matrix, parse_scalar
from .qsys import Dynamics, Element, MatrixAlgebra, State
from .scenario import stream

DEFAULT_TIMES = (-1.3, -0.4, 0.0, 0.7, 2.1)


@dataclass
class Outcome:
    residuals: dict[str, float]
    values: dict[str, Any] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    table: list[str] = field(default_factory=list)
    headline: str | None = None


@dataclass(frozen=True)
class Op:
    name: str
    fn: Callable[..., Outcome]
    identity: str
    refs: dict


OPS: dict[str, Op] = {}


def op(name: str, identity: str, refs: dict | None = None):
    def deco(fn):
        OPS[name] = Op(name, fn, identity, refs or {})
        return fn
    return deco


# argument helpers

def _times(args) -> list[float]:
    return [float(t) for t in args.get("times", DEFAULT_TIMES)]


def _pairs(args) -> list[tuple[float, float]]:
    if "pairs" in args:
        return [(float(t), float(s)) for t, s in args["pairs"]]
    ts = _times(args)
    return [(t, s) for t in ts for s in ts]


def _random_mode(args) -> dict | None:
    r = args.get("random")
    return r if isinstance(r, dict) else None


def _expected(args, key="expected") -> complex | None:
    return None if key not in args else parse_scalar(args[key])


def _max(xs, default=0.0) -> float:
    return float(max(xs, default=default))


def _instance_rng(ctx, r, rng):
    """Checks naming the same ``stream`` draw the same random instances."""
    return stream(ctx.scenario.seed, "instances:" + str(r["stream"])) if "stream" in r else rng


def _random_n(rng, r, lo=2, default=6) -> int:
    if "n" in r:
        return int(r["n"])
    return int(rng.integers(lo, int(r.get("n_max", default)) + 1))


def _random_abelian(rng, r):
    """A random abelian instance (H, β, v, c) on M_n."""
    n = _random_n(rng, r)
    alg = MatrixAlgebra((n,))
    H = alg.random_hermitian(rng)
    beta = float(rng.uniform(0.3, 2.0))
    v = alg.random_unitary(rng)
    c = float(rng.uniform(-2.0, 2.0)) if r.get("phase", True) else 0.0
    return Dynamics(H, beta), ch.abelian(v, c)


def _samples(alg: MatrixAlgebra, rng, k: int) -> list[Element]:
    return [alg.random_element(rng) for _ in range(k)]


def _cval(z) -> Any:
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


# qsys

def _two_level(eps: float, beta: float) -> np.ndarray:
    return np.diag([1.0, math.exp(-beta * eps)]) / (1 + math.exp(-beta * eps))


def _kms_max(phi, dyn, rng, pairs, times):
    """Worst KMS residual, relative to the scale ‖a‖‖α_{t+iβ}(b)‖ of the continued product."""
    alg = dyn.algebra
    worst = 0.0
    for _ in range(pairs):
        a, b = alg.random_element(rng), alg.random_element(rng)
        for t in times:
            scale = max(1.0, a.norm() * dyn.alpha(b, t + 1j * dyn.beta).norm())
            worst = max(worst, qsys.kms_check(phi, dyn, a, b, t) / scale)
    return worst


@op("qsys.gibbs_state", "Gibbs(H,β) is normalized, faithful and β-KMS for Ad e^{itH}",
    {"H": "element"})
def gibbs_state_op(ctx, args, rng):
    pairs, times = int(args.get("pairs", 20)), list(np.linspace(-2, 2, int(args.get("points", 10))))
    r = _random_mode(args)
    if r:
        worst = {"weight": 0.0, "faithful": 0.0, "kms": 0.0}
        for _ in range(int(r.get("instances", 100))):
            n = _random_n(rng, r)
            alg = MatrixAlgebra((n,))
            dyn = Dynamics(alg.random_hermitian(rng), float(rng.uniform(0.2, 3.0)))
            phi = qsys.gibbs_state(dyn.H, dyn.beta)
            worst["weight"] = max(worst["weight"], abs(phi.weight - 1))
            worst["faithful"] = max(worst["faithful"], 0.0 if phi.faithful else 1.0)
            worst["kms"] = max(worst["kms"], _kms_max(phi, dyn, rng, int(r.get("pairs", 2)), times[:3]))
        return Outcome(worst, {"instances": int(r.get("instances", 100))})
    H = ctx.get(args["H"], "element")
    beta = float(args["beta"])
    phi = qsys.gibbs_state(H, beta)
    dyn = Dynamics(H, beta)
    res = {"weight": abs(phi.weight - 1), "faithful": 0.0 if phi.faithful else 1.0,
           "kms": _kms_max(phi, dyn, rng, pairs, times)}
    if "expected_two_level" in args:
        target = _two_level(float(args["expected_two_level"]), beta)
        res["closed_form"] = float(np.abs(phi.densities[0] - target).max())
    if args.get("expect_maximally_mixed"):
        n = H.algebra.hilbert_dim
        res["closed_form"] = max(float(np.abs(d - np.eye(len(d)) / n).max()) for d in phi.densities)
    return Outcome(res, {"density_diagonal": [float(x) for x in np.real(np.diag(phi.densities[0]))]})


@op("qsys.kms_check", "F_{a,b}(t+iβ) = φ(b α_t(a)) on sampled a, b, t",
    {"state": "state", "dynamics": ("dynamics", "black_hole")})
def kms_check_op(ctx, args, rng):
    phi = ctx.get(args["state"], "state")
    dyn = _dyn(ctx, args["dynamics"])
    worst = _kms_max(phi, dyn, rng, int(args.get("pairs", 20)), _times(args))
    return Outcome({"kms": worst}, {"max_residual": worst}, headline="max_residual")


def _dyn(ctx, ref) -> Dynamics:
    obj = ctx.get(ref, ("dynamics", "black_hole"))
    return obj.dynamics if isinstance(obj, ch.BlackHoleScenario) else obj


@op("qsys.gns", "Δ = L(D)R(D⁻¹) > 0, Jξ = Δξ = ξ, ξ cyclic and separating, Δ^{it} implements σ^φ",
    {"state": "state", "dynamics": ("dynamics", "black_hole")})
def gns_op(ctx, args, rng):
    phi = ctx.get(args["state"], "state")
    space = qsys.gns(phi)
    samples = _samples(phi.algebra, rng, int(args.get("samples", 5)))
    res = dict(space.invariants(samples))
    res["modular"] = _max(
        np.linalg.norm(space.delta_it(t) @ space.left(a) @ space.xi
                       - space.left(qsys.modular_group(phi, a, t)) @ space.xi)
        for a in samples for t in _times(args))
    if args.get("expect_tracial"):
        res["delta_identity"] = float(np.abs(space.delta - np.eye(space.dim)).max())
    values = {"carrier_dim": space.dim}
    if "dynamics" in args:
        dyn = _dyn(ctx, args["dynamics"])
        got = np.sort(np.linalg.eigvalsh(space.log_delta()) / dyn.beta)
        lam = [np.linalg.eigvalsh(b) for b in dyn.H.blocks]
        want = np.sort(np.concatenate([(w[:, None] - w[None, :]).ravel() for w in lam]))
        res["spectrum"] = float(np.abs(got - want).max())
    return Outcome(res, values)


def _quadrature_entropy(phi: State, psi: State) -> float:
    """∫₀^∞ Tr D_φ((D_ψ+s)⁻¹ − (D_φ+s)⁻¹) ds, block by block."""
    total = 0.0
    for a, b in zip(phi.densities, psi.densities):
        wa, va = np.linalg.eigh(a)
        wb, vb = np.linalg.eigh(b)
        overlap = np.abs(va.conj().T @ vb) ** 2  # |<a_i|b_j>|²

        def f(s):
            return float(np.sum(wa[:, None] * overlap / (wb[None, :] + s)) - np.sum(wa / (wa + s)))

        val, _ = integrate.quad(f, 0, 1, epsabs=1e-13, epsrel=1e-12, limit=400)
        tail, _ = integrate.quad(f, 1, np.inf, epsabs=1e-13, epsrel=1e-12, limit=400)
        total += val + tail
    return total


def _entropy_residuals(phi, psi, rng) -> dict[str, float]:
    s = qsys.relative_entropy(phi, psi).value
    res = {"self": abs(qsys.relative_entropy(phi, phi).value)}
    if abs(phi.weight - 1) < 1e-12 and abs(psi.weight - 1) < 1e-12:
        res["pinsker"] = max(0.0, 0.5 * phi.distance(psi) ** 2 - s)
    u = phi.algebra.random_unitary(rng)
    res["unitary_invariance"] = abs(qsys.relative_entropy(phi.transformed(u), psi.transformed(u)).value - s)
    return res


@op("qsys.relative_entropy", "S(φ|ψ) = Σ Tr D_φ(log D_φ − log D_ψ) ≥ ½‖φ−ψ‖₁², unitarily invariant",
    {"phi": "state", "psi": "state"})
def relative_entropy_op(ctx, args, rng):
    r = _random_mode(args)
    if r:
        worst: dict[str, float] = {}
        for _ in range(int(r.get("instances", 20))):
            alg = MatrixAlgebra((_random_n(rng, r),))
            phi, psi = alg.random_state(rng), alg.random_state(rng)
            res = _entropy_residuals(phi, psi, rng)
            if r.get("quadrature", True):
                res["quadrature"] = abs(_quadrature_entropy(phi, psi) - qsys.relative_entropy(phi, psi).value)
            for k, v in res.items():
                worst[k] = max(worst.get(k, 0.0), v)
        return Outcome(worst, {"instances": int(r.get("instances", 20))})
    phi, psi = ctx.get(args["phi"], "state"), ctx.get(args["psi"], "state")
    rel = qsys.relative_entropy(phi, psi)
    res = {} if rel.support_violation else _entropy_residuals(phi, psi, rng)
    exp = args.get("expected")
    if exp == "inf":
        res["expected"] = 0.0 if math.isinf(rel.value) else 1.0
    elif exp is not None:
        res["expected"] = abs(rel.value - float(exp))
    if args.get("quadrature") and not rel.support_violation:
        res["quadrature"] = abs(_quadrature_entropy(phi, psi) - rel.value)
    warnings = ["support of φ not contained in support of ψ"] if rel.support_violation else []
    return Outcome(res, {"S": rel.value if math.isfinite(rel.value) else "inf",
                         "support_violation": rel.support_violation}, warnings, headline="S")


def _rep_desc(ctx, desc, alg):
    if "state" in desc:
        return qsys.Representation.of_state(ctx.get(desc["state"], "state"))
    if "sum" in desc:
        parts = [_rep_desc(ctx, d, alg) for d in desc["sum"]]
        out = parts[0]
        for p in parts[1:]:
            out = out + p
        return out
    return qsys.Representation(alg, tuple(desc["multiplicities"]))


@op("qsys.quasi_equivalent", "π₁ ≈ π₂ ⟺ equal central supports", {"algebra": "algebra"})
def quasi_equivalent_op(ctx, args, rng):
    alg = ctx.get(args["algebra"], "algebra") if "algebra" in args else None
    p1, p2 = _rep_desc(ctx, args["pi1"], alg), _rep_desc(ctx, args["pi2"], alg)
    got = qsys.quasi_equivalent(p1, p2)
    res = {"expected": 0.0 if got == bool(args["expected"]) else 1.0}
    return Outcome(res, {"quasi_equivalent": got}, headline="quasi_equivalent")


# cocycle

def _cocycle_residuals(u, args) -> dict[str, float]:
    return {
        "cocycle_identity": _max(cc.cocycle_identity_residual(u, t, s) for t, s in _pairs(args)),
        "unitarity": _max(cc.unitarity_residual(u, t) for t in _times(args)),
        "u0": (u(0) - u.algebra.identity()).norm(),
    }


def _diag_closed_form(psi: State, phi: State, t: float) -> np.ndarray | None:
    ds = [np.diag(d) for d in (psi.densities[0], phi.densities[0])]
    if len(psi.densities) != 1 or any(np.abs(m - np.diag(np.diag(m))).max() > 0
                                      for m in (psi.densities[0], phi.densities[0])):
        return None
    return np.diag((ds[0].real / ds[1].real) ** (1j * t))


@op("cocycle.connes_cocycle", "(Dψ:Dφ)_t = D_ψ^{it}D_φ^{-it} is a σ^φ-cocycle; chain rule",
    {"psi": "state", "phi": "state", "omega": "state", "dynamics": ("dynamics", "black_hole")})
def connes_cocycle_op(ctx, args, rng):
    psi, phi = ctx.get(args["psi"], "state"), ctx.get(args["phi"], "state")
    param = args.get("parameterization", "modular")
    if param == "modular":
        u = cc.connes_cocycle(psi, phi)
    elif "dynamics" in args:
        u = cc.connes_cocycle(psi, phi, dynamics=_dyn(ctx, args["dynamics"]))
    else:
        u = cc.connes_cocycle(psi, phi, beta=float(args["beta"]))
    res = _cocycle_residuals(u, args)
    if param == "modular":
        cf = [(_diag_closed_form(psi, phi, t), t) for t in _times(args)]
        if all(m is not None for m, _ in cf):
            res["diagonal_closed_form"] = _max(float(np.abs(u(t).blocks[0] - m).max()) for m, t in cf)
        if "scale" in args:
            lam = float(args["scale"])
            res["scalar_form"] = _max((u(t) - u.algebra.scalar(lam ** (1j * t))).norm() for t in _times(args))
        if "omega" in args:
            om = ctx.get(args["omega"], "state")
            a, b, c = cc.connes_cocycle(om, phi), cc.connes_cocycle(om, psi), cc.connes_cocycle(psi, phi)
            res["chain_rule"] = _max((a(t) - b(t) @ c(t)).norm() for t in np.linspace(-2, 2, 10))
    return Outcome(res, {"point": _cval(u.point), "parameterization": param})


def _connes_oracle(psi: State, phi: State) -> complex:
    """Tr(D_φ D_ψ D_φ⁻¹)/Tr D_φ from plain matrix products."""
    num = sum(np.trace(a @ b @ np.linalg.inv(a)) for a, b in zip(phi.densities, psi.densities))
    return complex(num / phi.weight)


@op("cocycle.eval_complex", "φ(u(z))/φ(1) continues φ(u(t)); (Dψ:Dφ) at −i gives ψ(1)/φ(1)",
    {"cocycle": "cocycle", "state": "state", "psi": "state"})
def eval_complex_op(ctx, args, rng):
    r = _random_mode(args)
    if r:
        worst, worst0 = 0.0, 0.0
        for _ in range(int(r.get("instances", 100))):
            n = _random_n(rng, r)
            alg = MatrixAlgebra((n,))
            phi = alg.random_state(rng, float(rng.uniform(0.5, 2.0)))
            psi = alg.random_state(rng, float(rng.uniform(0.5, 2.0)))
            u = cc.connes_cocycle(psi, phi)
            worst = max(worst, abs(cc.eval_complex(u, phi, -1j) - _connes_oracle(psi, phi)))
            worst0 = max(worst0, abs(cc.eval_complex(u, phi, 0) - 1))
        return Outcome({"continuation": worst, "origin": worst0},
                       {"instances": int(r.get("instances", 100)), "max_error": worst}, headline="max_error")
    u = ctx.get(args["cocycle"], "cocycle")
    phi = ctx.get(args["state"], "state")
    z = parse_scalar(args["z"])
    val = cc.eval_complex(u, phi, z)
    res = {}
    if args.get("expected") == "connes_oracle":
        psi = ctx.get(args["psi"], "state")
        res["expected"] = abs(val - _connes_oracle(psi, phi))
    elif "expected" in args:
        res["expected"] = abs(val - _expected(args))
    if z.imag == 0:
        res["contraction"] = max(0.0, abs(val) - 1 - 1e-15)
    return Outcome(res, {"value": _cval(val)}, headline="value")


@op("cocycle.holomorphic_dimension", "d_φ(u) = anal.cont._{t→iβ} φ(u(t)); d_φ((Dλφ:Dφ)) = λ",
    {"cocycle": "cocycle", "state": "state", "psi": "state"})
def holomorphic_dimension_op(ctx, args, rng):
    if "scaling" in args:
        phi = ctx.get(args["state"], "state")
        worst, imag = 0.0, 0.0
        for lam in args["scaling"]:
            lam = float(lam)
            cands = [cc.connes_cocycle(phi.scaled(lam), phi)]
            cands += [cc.connes_cocycle(phi.scaled(lam), phi, beta=float(b)) for b in args.get("betas", [])]
            for u in cands:
                v = cc.holomorphic_dimension(u, phi).value
                worst = max(worst, abs(v - lam))
                imag = max(imag, abs(v.imag))
        return Outcome({"scaling": worst, "imaginary_part": imag}, {"lambdas": list(args["scaling"])})
    u = ctx.get(args["cocycle"], "cocycle")
    phi = ctx.get(args["state"], "state")
    beta = float(args["beta"]) if "beta" in args else None
    hd = cc.holomorphic_dimension(u, phi, beta)
    res = {}
    if args.get("expected") == "weight_ratio":
        psi = ctx.get(args["psi"], "state")
        res["expected"] = abs(hd.value - psi.weight / phi.weight)
    elif "expected" in args:
        res["expected"] = abs(hd.value - _expected(args))
    if args.get("positive_type"):
        res["imaginary_part"] = abs(hd.value.imag)
    if "phase_factor" in args:
        c = float(args["phase_factor"])
        b = (hd.point / 1j).real
        uc = cc.composite([u, cc.phase_cocycle(c, u.generator, hd.point)])
        res["multiplicativity"] = abs(cc.holomorphic_dimension(uc, phi, beta).value - math.exp(-c * b) * hd.value)
    warnings = [hd.warning] if hd.warning else []
    return Outcome(res, {"value": _cval(hd.value), "modulus": hd.modulus, "kms_residual": hd.kms_residual},
                   warnings, headline="value")


@op("cocycle.cocycle_identity_residual", "u(t+s) = u(t)α_t(u(s))", {"cocycle": "cocycle"})
def cocycle_identity_op(ctx, args, rng):
    u = ctx.get(args["cocycle"], "cocycle")
    pairs = _pairs(args)
    if "search" in args:  # witness search over random (t, s)
        pairs += [tuple(rng.uniform(-3, 3, 2)) for _ in range(int(args["search"]))]
    vals = [cc.cocycle_identity_residual(u, t, s) for t, s in pairs]
    k = int(np.argmax(vals))
    return Outcome({"cocycle_identity": vals[k]},
                   {"max_residual": vals[k], "witness": [float(pairs[k][0]), float(pairs[k][1])]},
                   headline="max_residual")


# charge

def _charge_dyn(ctx, args):
    rho = ctx.get(args["charge"], "charge")
    return rho, _dyn(ctx, args["dynamics"])


def _diag_phase_form(u, c, gens, times):
    return _max(float(np.abs(u(t).blocks[0] - np.exp(1j * c * t) * np.diag(np.exp(1j * t * np.asarray(gens))))
                      .max()) for t in times)


@op("charge.covariance_cocycle", "Ad u(t)∘α_t∘ρ∘α_{−t} = ρ; u(ρσ,t) = ρ(u(σ,t))u(ρ,t)",
    {"charge": "charge", "dynamics": ("dynamics", "black_hole"), "sigma": "charge"})
def covariance_cocycle_op(ctx, args, rng):
    rho, dyn = _charge_dyn(ctx, args)
    c = float(args["c"]) if "c" in args else None
    u = ch.covariance_cocycle(rho, dyn, c)
    samples = _samples(rho.algebra, rng, int(args.get("samples", 10)))
    res = {"covariance": _max(ch.covariance_residual(rho, u, dyn, t, samples) for t in _times(args))}
    res.update(_cocycle_residuals(u, args))
    res["left_inverse"] = _max(rho.left_inverse_residual(x) for x in samples)
    cval = rho.c if c is None else c
    if "expected_diag" in args:
        res["closed_form"] = _diag_phase_form(u, cval, [float(g) for g in args["expected_diag"]], _times(args))
    if args.get("expected_scalar"):
        res["closed_form"] = _max((u(t) - u.algebra.scalar(np.exp(1j * cval * t))).norm() for t in _times(args))
    if "sigma" in args:
        sigma = ctx.get(args["sigma"], "charge")
        r0, s0 = ch.abelian(rho.v, 0.0), ch.abelian(sigma.v, 0.0)
        res["two_variable"] = _max(ch.two_variable_residual(r0, s0, dyn, t) for t in _times(args))
        phi = dyn.gibbs()
        d = lambda q: cc.holomorphic_dimension(ch.covariance_cocycle(q, dyn), phi).value  # noqa: E731
        res["multiplicativity"] = abs(d(rho.compose(sigma)) - d(rho) * d(sigma))
    return Outcome(res, {"c": cval, "kind": rho.kind})


@op("charge.frobenius_dual_cocycle", "u• = ρ̄(σ_t(R̄*)u*)R is a covariance cocycle for ρ̄, gauge independent",
    {"charge": "charge", "dynamics": ("dynamics", "black_hole")})
def frobenius_dual_op(ctx, args, rng):
    rho, dyn = _charge_dyn(ctx, args)
    c = float(args.get("c", rho.c))
    u = ch.covariance_cocycle(rho, dyn, c)
    ud = ch.frobenius_dual_cocycle(rho, u)
    rb = rho.conjugate()
    samples = _samples(rho.algebra, rng, int(args.get("samples", 10)))
    times = _times(args)
    res = {"covariance": _max(ch.covariance_residual(rb, ud, dyn, t, samples) for t in times)}
    res.update(_cocycle_residuals(ud, args))
    ud0 = ch.frobenius_dual_cocycle(rho, ch.covariance_cocycle(rho, dyn, 0.0))
    res["phase_law"] = _max((ud(t) - ud0(t) * np.exp(-1j * c * t)).norm() for t in times)
    if rho.kind == "abelian":
        for lam in args.get("gauges", [0.3, 2.0, [0.5, 1.5]]):
            g = rho.with_gauge(parse_scalar(lam))
            ug = ch.frobenius_dual_cocycle(g, ch.covariance_cocycle(g, dyn, c))
            res["gauge"] = max(res.get("gauge", 0.0), _max((ug(t) - ud(t)).norm() for t in times))
    if "expected_diag" in args:
        res["closed_form"] = _diag_phase_form(ud, -c, [float(g) for g in args["expected_diag"]], times)
    return Outcome(res, {"c": c})


def _geo_residuals(rho, phi, dyn, sweep):
    vals = [ch.geometric_dimension(rho, phi, dyn, c) for c in sweep]
    pf = ch.product_form_dimension(rho, phi, dyn)
    return vals, {"sweep_spread": max(vals) - min(vals),
                  "product_form": abs(pf - rho.dimension ** 2),
                  "two_variable_inequality": max(0.0, rho.dimension - min(vals) - 1e-12)}


@op("charge.geometric_dimension", "d_geo(ρ) = √(d_φ(u_ρ)d_φ(u_ρ•)) = d(ρ), independent of the phase",
    {"charge": "charge", "dynamics": ("dynamics", "black_hole"), "state": "state"})
def geometric_dimension_op(ctx, args, rng):
    sweep = [float(c) for c in args.get("c_sweep", [-2.0, 0.0, 5.0])]
    r = _random_mode(args)
    if r:
        rng = _instance_rng(ctx, r, rng)
        worst: dict[str, float] = {}
        for _ in range(int(r.get("instances", 50))):
            dyn, rho = _random_abelian(rng, r)
            vals, res = _geo_residuals(rho, dyn.gibbs(), dyn, sweep)
            res["dimension"] = max(abs(v - 1) for v in vals)
            for k, v in res.items():
                worst[k] = max(worst.get(k, 0.0), v)
        return Outcome(worst, {"instances": int(r.get("instances", 50))})
    rho, dyn = _charge_dyn(ctx, args)
    phi = ctx.get(args["state"], "state") if "state" in args else dyn.gibbs()
    vals, res = _geo_residuals(rho, phi, dyn, sweep)
    exp = float(args.get("expected", rho.dimension))
    res["dimension"] = max(abs(v - exp) for v in vals)
    return Outcome(res, {"d_geo": vals[0]}, headline="d_geo")


def _mu_pair(rho, phi, dyn, c=None):
    u = ch.covariance_cocycle(rho, dyn, c)
    ud = ch.frobenius_dual_cocycle(rho, u)
    a = ch.chemical_potential(rho, phi, dyn, u)
    b = ch.chemical_potential(rho.conjugate(), phi, dyn, ud)
    return a, b


@op("charge.chemical_potential", "log d_φ(u) = log d(ρ) + βμ_ρ; μ_ρ̄ = −μ_ρ",
    {"charge": "charge", "dynamics": ("dynamics", "black_hole"), "state": "state"})
def chemical_potential_op(ctx, args, rng):
    r = _random_mode(args)
    if r:
        rng = _instance_rng(ctx, r, rng)
        worst: dict[str, float] = {}
        reversal = bool(r.get("time_reversal"))
        for _ in range(int(r.get("instances", 50))):
            if reversal:
                n = _random_n(rng, r)
                alg = MatrixAlgebra((n,))
                H = alg.element([_real_sym(rng, n)])
                dyn = Dynamics(H, float(rng.uniform(0.3, 2.0)))
                rho = ch.abelian(alg.element([_sym_unitary(rng, n)]), 0.0)
            else:
                dyn, rho = _random_abelian(rng, r)
            a, b = _mu_pair(rho, dyn.gibbs(), dyn)
            res = {"asymmetry": abs(a.mu + b.mu), "splitting": max(a.splitting_residual, b.splitting_residual)}
            if reversal:
                res["mu"] = abs(a.mu)
                samples = _samples(dyn.algebra, rng, 4)
                res.update({f"pct_{k}": v for k, v in ch.pct_check(rho, dyn, samples).items()})
            for k, v in res.items():
                worst[k] = max(worst.get(k, 0.0), v)
        return Outcome(worst, {"instances": int(r.get("instances", 50))})
    rho, dyn = _charge_dyn(ctx, args)
    phi = ctx.get(args["state"], "state") if "state" in args else dyn.gibbs()
    c = float(args["c"]) if "c" in args else None
    a, b = _mu_pair(rho, phi, dyn, c)
    res = {"asymmetry": abs(a.mu + b.mu), "splitting": max(a.splitting_residual, b.splitting_residual)}
    if "expected_mu" in args:
        res["expected"] = abs(a.mu - float(args["expected_mu"]))
    warnings = [w for w in (a.flag, b.flag) if w]
    return Outcome(res, {"mu": a.mu, "mu_conjugate": b.mu, "log_d_phi": a.log_d_phi, "log_d": a.log_d},
                   warnings, headline="mu")


def _free_energy(rho, phi, dyn, c=None):
    return ch.free_energy(rho, phi, dyn, ch.covariance_cocycle(rho, dyn, c))


@op("charge.free_energy", "−β⁻¹log(e^{−βH_ρ}ξ,ξ) = −β⁻¹log d_φ(u) = φ_ρ(H_ρ) − β⁻¹S(φ|φ_ρ)",
    {"charge": "charge", "dynamics": ("dynamics", "black_hole")})
def free_energy_op(ctx, args, rng):
    r = _random_mode(args)
    if r:
        rng = _instance_rng(ctx, r, rng)
        spread = 0.0
        for _ in range(int(r.get("instances", 20))):
            dyn, rho = _random_abelian(rng, r)
            spread = max(spread, _free_energy(rho, dyn.gibbs(), dyn).spread)
        return Outcome({"route_spread": spread}, {"instances": int(r.get("instances", 20))})
    rho, dyn = _charge_dyn(ctx, args)
    F = _free_energy(rho, dyn.gibbs(), dyn, float(args["c"]) if "c" in args else None)
    res = {"route_spread": F.spread}
    if "expected" in args:
        res["expected"] = abs(F.gns - float(args["expected"]))
    return Outcome(res, {"gns": float(F.gns), "cocycle": F.cocycle, "entropy": F.entropy,
                         "variational": F.variational}, headline="gns")


@op("charge.conditional_entropy", "S_c(ρ) = 2 log d(ρ) = −β(F(φ|φ_ρ) + F(φ|φ_ρ̄))",
    {"charge": "charge", "dynamics": ("dynamics", "black_hole")})
def conditional_entropy_op(ctx, args, rng):
    rho = ctx.get(args["charge"], "charge")
    s = ch.conditional_entropy(rho)
    res = {}
    if "expected" in args:
        res["expected"] = abs(s - float(args["expected"]))
    values = {"S_c": s}
    if "dynamics" in args and rho.kind == "abelian":
        dyn = _dyn(ctx, args["dynamics"])
        phi = dyn.gibbs()
        u = ch.covariance_cocycle(rho, dyn)
        f1 = ch.free_energy(rho, phi, dyn, u).gns
        f2 = ch.free_energy(rho.conjugate(), phi, dyn, ch.frobenius_dual_cocycle(rho, u)).gns
        res["free_energy_identity"] = abs(-dyn.beta * (f1 + f2) - s)
        values["free_energy_sum"] = float(f1 + f2)
    return Outcome(res, values, headline="S_c")


@op("charge.black_hole_identity",
    "log d(ρ) − log d(σ) = (π/κ)(F(φ_ρ|φ_σ) + F(φ_ρ̄|φ_σ̄)); F(φ_σ|φ_ρ) = ½β⁻¹(S_c(σ)−S_c(ρ)) + μ",
    {"scenario": "black_hole", "rho": "charge", "sigma": "charge"})
def black_hole_op(ctx, args, rng):
    sc = ctx.get(args["scenario"], "black_hole")
    rho, sigma = ctx.get(args["rho"], "charge"), ctx.get(args["sigma"], "charge")
    rep = ch.black_hole_identity(sc, rho, sigma)
    res = {"identity": rep.residual, "ife": rep.ife_residual, "route_spread": rep.route_spread,
           "beta_kappa": abs(rep.beta_kappa - 2 * math.pi)}
    if "expected_lhs" in args:
        exp = args["expected_lhs"]
        exp = math.log(2) if exp == "log2" else float(exp)
        res["expected_lhs"] = abs(rep.lhs - exp)
    return Outcome(res, {"lhs": rep.lhs, "rhs": rep.rhs, "beta": sc.beta, "ife_lhs": rep.ife_lhs,
                         "ife_rhs": rep.ife_rhs}, headline="lhs")


# category

def _label(fr, lab):
    return fr.index(lab) if not isinstance(lab, int) else lab


@op("category.pf_dimension", "d(σ) = ‖m^σ‖ (Perron–Frobenius); d is a ring homomorphism",
    {"ring": "fusion_ring", "group": "group"})
def pf_dimension_op(ctx, args, rng):
    fr = ctx.get(args["ring"], "fusion_ring")
    dims = fr.dimensions()
    res = {"homomorphism": cat.homomorphism_residual(fr, dims)}
    values: dict[str, Any] = {"dims": [float(d) for d in dims]}
    if "label" in args:
        d = cat.pf_dimension(fr, _label(fr, args["label"]))
        values["d"] = d
        exp = args.get("expected")
        if exp is not None:
            exp = (1 + math.sqrt(5)) / 2 if exp == "golden" else math.sqrt(2) if exp == "sqrt2" else float(exp)
            res["expected"] = abs(d - exp)
    if "expected_dims" in args:
        res["expected_dims"] = float(np.abs(dims - np.asarray(args["expected_dims"], dtype=float)).max())
    if "group" in args:
        degrees = cat.character_table(ctx.get(args["group"], "group")).degrees
        res["norm_vs_degree"] = max(abs(float(np.linalg.norm(fr.fusion_matrix(i), 2)) - degrees[i])
                                    for i in range(fr.rank))
    for k, alt in enumerate(args.get("alternatives", [])):
        verdict = cat.positive_character_check(fr, alt)
        # only the PF vector itself may be accepted
        res[f"alternative_{k}"] = 1.0 if verdict.accepted and verdict.distance_to_pf > 1e-9 else 0.0
        values[f"alternative_{k}_accepted"] = verdict.accepted
    return Outcome(res, values, headline="d" if "label" in args else None)


@op("category.amenability_check", "‖m^σ‖ = d(σ) for every label (amenability)", {"ring": "fusion_ring"})
def amenability_op(ctx, args, rng):
    fr = ctx.get(args["ring"], "fusion_ring")
    labels = args.get("labels", "all")
    idx = range(fr.rank) if labels == "all" else [_label(fr, l) for l in labels]
    vals = {fr.labels[i]: cat.amenability_check(fr, i) for i in idx}
    res = {"amenability": max(vals.values())}
    if "expected_norm" in args:
        i = _label(fr, args["label"])
        res["expected_norm"] = abs(float(np.linalg.norm(fr.fusion_matrix(i), 2)) - float(args["expected_norm"]))
    return Outcome(res, {"residuals": vals})


@op("category.rep_fusion_ring", "N^k_ij = ⟨χ_iχ_j, χ_k⟩; Σ d² = |G|; N^k_ij = N^j_īk", {"group": "group"})
def rep_fusion_ring_op(ctx, args, rng):
    G = ctx.get(args["group"], "group")
    fr = cat.rep_fusion_ring(G)
    ct = cat.character_table(G)
    degrees = ct.degrees
    N, dual = fr.N, np.asarray(fr.dual)
    recip = int(np.abs(N - np.transpose(N[dual], (0, 2, 1))).max())
    res = {"sum_of_squares": float(abs(sum(d * d for d in degrees) - G.order)),
           "reciprocity": float(recip), "orthogonality": ct.orthogonality_residual(),
           "dimension_vector": float(np.abs(fr.dimensions() - np.asarray(degrees)).max())}
    if "expected_degrees" in args:
        res["expected_degrees"] = 0.0 if sorted(degrees) == sorted(args["expected_degrees"]) else 1.0
    if args.get("expect_pointed"):
        res["pointed"] = float(np.abs(N.sum(axis=2) - 1).max())
    return Outcome(res, {"degrees": degrees, "rank": fr.rank, "order": G.order})


def _invariant_dim(sol) -> int:
    n = sol.rep.dim
    rows = [np.kron(c, m) - np.eye(n * n) for m, c in zip(sol.rep.matrices, sol.conj.matrices)]
    return null_space(np.vstack(rows), rcond=1e-10).shape[1]


@op("category.solve_conjugate", "R*ρ̄(R̄) = 1, R̄*ρ(R) = 1, ‖R‖‖R̄‖ = dim ρ", {"rep": "rep"})
def solve_conjugate_op(ctx, args, rng):
    rho = ctx.get(args["rep"], "rep")
    sol = cat.solve_conjugate(rho)
    e1, e2 = sol.equation_residuals()
    i1, i2 = sol.intertwining_residuals()
    nr, nrb = sol.norms
    res = {"conjugate_equation_1": e1, "conjugate_equation_2": e2, "intertwining": max(i1, i2),
           "norm_balance": abs(nr - nrb), "unitarity": rho.homomorphism_residual()}
    if "expected_dim" in args:
        res["dimension"] = abs(nr * nrb - float(args["expected_dim"]))
    if cat.is_irreducible(rho):
        res["gauge_orbit"] = float(abs(_invariant_dim(sol) - 1))
    return Outcome(res, {"d": nr * nrb, "norm_R": nr, "norm_Rbar": nrb}, headline="d")


@op("category.intrinsic_dimension", "d(ρ) = min‖R‖‖R̄‖, gauge invariant and additive",
    {"rep": "rep", "decomposition": ("list", "rep")})
def intrinsic_dimension_op(ctx, args, rng):
    rho = ctx.get(args["rep"], "rep")
    sol = cat.solve_conjugate(rho)
    dec = [ctx.get(r, "rep") for r in args["decomposition"]] if "decomposition" in args else None
    base = cat.intrinsic_dimension(sol, dec)
    gauged = [cat.intrinsic_dimension(sol.gauged(parse_scalar(l)), dec).value
              for l in args.get("gauges", [0.3, 1.0, 4.0])]
    res = {"gauge_spread": max(abs(g - base.value) for g in gauged)}
    if "expected" in args:
        res["expected"] = abs(base.value - float(args["expected"]))
    warnings = ["reducible representation without decomposition: upper bound"] if base.flagged else []
    return Outcome(res, {"d": base.value, "irreducible": base.irreducible, "flagged": base.flagged,
                         "parts": list(base.parts)}, warnings, headline="d")


def _random_intertwiner(basis, rng):
    coeffs = rng.standard_normal(len(basis)) + 1j * rng.standard_normal(len(basis))
    return sum(c * b for c, b in zip(coeffs, basis))


@op("category.frobenius_map", "T• = ρ̄₂(R̄*₁T*)R₂ is anti-linear, intertwines and is gauge independent",
    {"rep1": "rep", "rep2": "rep"})
def frobenius_map_op(ctx, args, rng):
    r1 = ctx.get(args["rep1"], "rep")
    r2 = ctx.get(args.get("rep2", args["rep1"]), "rep")
    s1, s2 = cat.solve_conjugate(r1), cat.solve_conjugate(r2)
    basis = cat.intertwiners(r1, r2)
    if not basis:
        raise DomainError("the representations have no intertwiners")
    res = {"anti_linearity": 0.0, "intertwining": 0.0, "double_bullet": 0.0, "gauge": 0.0}
    c1, c2 = cat.solve_conjugate(s1.conj), cat.solve_conjugate(s2.conj)
    same = args.get("rep2", args["rep1"]) == args["rep1"]
    if same:
        res["unit"] = float(np.abs(cat.frobenius_map(np.eye(r1.dim), s1, s2) - np.eye(r1.dim)).max())
        comm = cat.intertwiners(r1, r1)
    for _ in range(int(args.get("samples", 10))):
        T, S = _random_intertwiner(basis, rng), _random_intertwiner(basis, rng)
        a = complex(rng.standard_normal(), rng.standard_normal())
        Tb, Sb = cat.frobenius_map(T, s1, s2), cat.frobenius_map(S, s1, s2)
        lhs = cat.frobenius_map(a * T + S, s1, s2)
        res["anti_linearity"] = max(res["anti_linearity"], float(np.abs(lhs - np.conj(a) * Tb - Sb).max()))
        res["intertwining"] = max(res["intertwining"], max(
            float(np.abs(Tb @ m1 - m2 @ Tb).max()) for m1, m2 in zip(s1.conj.matrices, s2.conj.matrices)))
        res["double_bullet"] = max(res["double_bullet"], float(np.abs(cat.frobenius_map(Tb, c1, c2) - T).max()))
        if same:
            v = _random_intertwiner(comm, rng)
            v = v / np.linalg.norm(v, 2)
            g1, g2 = s1.gauged_by(v), s2.gauged_by(v)
            res["gauge"] = max(res["gauge"], float(np.abs(cat.frobenius_map(T, g1, g2) - Tb).max()))
    return Outcome(res, {"intertwiner_space_dim": len(basis)})


@op("category.canonical_endo_check", "λ(S)S = S², S*λ(T), T*S ∈ ℂ∖{0}; E = S*λ(·)S a conditional expectation",
    {"algebra": "algebra", "u": "element", "rep": "rep"})
def canonical_endo_op(ctx, args, rng):
    mode = args.get("mode", "identity")
    if mode == "conjugate":
        rep = cat.conjugate_canonical_check(cat.solve_conjugate(ctx.get(args["rep"], "rep")))
    else:
        alg = ctx.get(args["algebra"], "algebra")
        samples = _samples(alg, rng, int(args.get("samples", 4)))
        if mode == "identity":
            one = alg.identity()
            rep = cat.canonical_endo_check(lambda x: x, one, one, samples)
        elif mode == "inner":
            u = ctx.get(args["u"], "element")
            rep = cat.canonical_endo_check(lambda x: u @ x @ u.adj(), u, u, samples)
        else:
            raise DomainError(f"unknown canonical-endomorphism mode {mode!r}")
    res = {"equation": rep.equation, "scalar_S_lambda_T": rep.scalar_residuals[0],
           "scalar_T_S": rep.scalar_residuals[1], "intertwining": max(rep.intertwining),
           "nonzero": 0.0 if rep.nonzero else 1.0}
    res.update({f"expectation_{k}": v for k, v in rep.expectation.items()})
    if "expected_scalars" in args:
        want = parse_scalar(args["expected_scalars"])
        res["expected_scalars"] = max(abs(rep.s_lambda_t - want), abs(rep.t_s - want))
    return Outcome(res, {"S_lambda_T": _cval(rep.s_lambda_t), "T_S": _cval(rep.t_s)})


# double

def _gen_index(spec, i):
    return int(i) % spec.ring.rank


@op("double.star_product", "X⋆Y(k) = Σ X(i)ρ̃_i(Y(j))C^k_ij: unital, associative, realized as matrices",
    {"double": "double"})
def star_product_op(ctx, args, rng):
    spec = ctx.get(args["double"], "double")
    one = dbl.unit(spec)
    res = {"unit": (one @ one - one).norm()}
    Xs = [dbl.random_element(spec, rng) for _ in range(int(args.get("samples", 20)))]
    res["unit_action"] = _max(max((one @ X - X).norm(), (X @ one - X).norm()) for X in Xs)
    trip = [(Xs[k], Xs[(k + 1) % len(Xs)], Xs[(k + 2) % len(Xs)]) for k in range(len(Xs))]
    res["associativity"] = _max(((X @ Y) @ Z - X @ (Y @ Z)).norm() for X, Y, Z in trip)
    a = complex(rng.standard_normal(), rng.standard_normal())
    res["bilinearity"] = _max(((X * a + Y) @ Z - ((X @ Z) * a + Y @ Z)).norm() for X, Y, Z in trip)
    if spec.realization is not None:
        res["realization"] = _max(float(np.abs(dbl.realize(X @ Y) - dbl.realize(X) @ dbl.realize(Y)).max())
                                  for X, Y, _ in trip)
    if "generator_products" in args:
        worst = 0.0
        for i, j, k in args["generator_products"]:
            lhs = dbl.generator(spec, i) @ dbl.generator(spec, j)
            worst = max(worst, (lhs - dbl.generator(spec, k)).norm())
        res["generator_products"] = worst
    return Outcome(res, {"rank": spec.ring.rank, "name": spec.name})


@op("double.star_involution", "X*(k) = C^{0*}_{kk̄}ρ̃_k(X(k̄)*): involutive and anti-multiplicative",
    {"double": "double"})
def star_involution_op(ctx, args, rng):
    spec = ctx.get(args["double"], "double")
    Xs = [dbl.random_element(spec, rng) for _ in range(int(args.get("samples", 20)))]
    one = dbl.unit(spec)
    res = {"unit": (one.adj() - one).norm(),
           "involutive": _max((X.adj().adj() - X).norm() for X in Xs),
           "anti_multiplicative": _max(((X @ Y).adj() - Y.adj() @ X.adj()).norm()
                                       for X, Y in zip(Xs, Xs[1:]))}
    a = complex(rng.standard_normal(), rng.standard_normal())
    res["anti_linear"] = _max(((X * a).adj() - X.adj() * np.conj(a)).norm() for X in Xs)
    if spec.params.get("pointed"):
        n = spec.ring.rank
        res["generator_adjoint"] = _max((dbl.generator(spec, i).adj() - dbl.generator(spec, (-i) % n)).norm()
                                        for i in range(n))
    if spec.realization is not None:
        res["realization"] = _max(float(np.abs(dbl.realize(X.adj()) - dbl.realize(X).conj().T).max()) for X in Xs)
    return Outcome(res, {"rank": spec.ring.rank})


@op("double.expectation", "ε(X) = X(0) is unital, idempotent, positive; X(i) = ε(X⋆R_i*)ν_i⁻¹",
    {"double": "double"})
def expectation_op(ctx, args, rng):
    spec = ctx.get(args["double"], "double")
    rep = dbl.expectation_check(spec, rng, int(args.get("samples", 5)))
    n = spec.ring.rank
    one = spec.coeff.identity()
    res = {"unital": rep.unital, "idempotent": rep.idempotent, "positivity": rep.positivity,
           "expansion": rep.expansion, "faithful": 0.0 if rep.faithful else 1.0,
           "generators": _max(dbl.expectation(dbl.generator(spec, i)).norm() for i in range(1, n)),
           "RstarR": _max((dbl.expectation(dbl.generator(spec, i).adj() @ dbl.generator(spec, i))
                           - one * spec.dims[i] ** 2).norm() for i in range(n))}
    return Outcome(res, {"rank": n})


@op("double.relations_check", "R_iX = ρ̃_i(X)R_i, R_i*R_i = d_i², R_iR_j = ΣC^k_ijR_k, R_i* = C^{0*}_{īi}R_ī",
    {"double": "double"})
def relations_op(ctx, args, rng):
    spec = ctx.get(args["double"], "double")
    rep = dbl.relations_check(spec, rng, int(args.get("samples", 5)))
    res = {k: float(v) for k, v in rep.residuals.items()}
    values: dict[str, Any] = {"failures": rep.failures(float(args.get("failure_threshold", 1e-10)))}
    if spec.realization is not None:
        idx = dbl.index_check(spec)
        values.update({"index_ratio": idx["ratio"], "relative_commutant_dim": rep.relative_commutant_dim})
        if args.get("index", True):
            res["index"] = idx["residual"]
    return Outcome(res, values)


def _group_label(name: str) -> str:
    import re
    m = re.fullmatch(r"([A-Z])(\d+)", name)
    return f"{m.group(1)}_{m.group(2)}" if m else name


@op("double.group_double_dimensions", "Σ_{(C,π)} (|C| dim π)² = |G|² over D(G) irreducibles",
    {"group": "group"})
def group_double_op(ctx, args, rng):
    G = ctx.get(args["group"], "group")
    tab = dbl.group_double_dimensions(G)
    total, order2 = tab.sum_of_squares, G.order ** 2
    res = {"sum_of_squares": float(abs(total - order2))}
    if "expected_dims" in args:
        res["expected_dims"] = 0.0 if sorted(tab.dims) == sorted(int(d) for d in args["expected_dims"]) else 1.0
    row = f"D({_group_label(G.name)}): Σd² = {total} {'=' if total == order2 else '≠'} |G|²"
    return Outcome(res, {"dims": tab.dims, "sum_of_squares": total, "order": G.order}, table=[row],
                   headline="sum_of_squares")


# susy

def _graded_matrix(sys: susy.GradedSystem, spec, rng) -> np.ndarray:
    scale = 1.0
    if isinstance(spec, dict):
        scale = float(spec.get("scale", 1.0))
        if "matrix" in spec:
            return parse_matrix(spec["matrix"])
        spec = spec.get("kind", "zero")
    if isinstance(spec, list):
        return parse_matrix(spec)
    if spec == "zero":
        return np.zeros((sys.dim, sys.dim), dtype=complex)
    if spec == "identity":
        return np.eye(sys.dim, dtype=complex)
    if spec == "random_odd":
        return susy.random_odd(sys, rng, scale)
    if spec == "random_even":
        return susy.random_even(sys, rng, scale)
    if spec == "random_even_unitary":
        w, v = np.linalg.eigh(susy.random_even(sys, rng, scale))
        return (v * np.exp(1j * w)) @ v.conj().T
    raise DomainError(f"unknown matrix spec {spec!r}")


def _random_graded(rng, r, dim_max=16, nonzero_index=False):
    while True:
        total = int(rng.integers(2, int(r.get("dim_max", dim_max)) + 1))
        p = int(rng.integers(1, total))
        q = total - p
        if nonzero_index and p == q:
            continue
        rank = int(rng.integers(0, min(p, q) + 1)) if r.get("random_rank", True) else None
        return susy.random_system(rng, p, q, float(rng.uniform(0.3, float(r.get("scale_max", 1.5)))), rank)


def _witten_residuals(sys, betas):
    idx = [susy.witten_index(sys, b) for b in betas]
    vals = [w.value for w in idx]
    return idx, {"integer": max(w.integer_residual for w in idx), "beta_spread": max(vals) - min(vals),
                 "rank_index": max(abs(v - idx[0].rank_index) for v in vals)}


@op("susy.witten_index", "Tr(Γe^{−βH}) = dim ker Q_+ − dim ker Q_+*, for every β", {"system": "graded"})
def witten_index_op(ctx, args, rng):
    betas = [float(b) for b in args.get("betas", [0.1, 0.5, 1.0, 2.0, 10.0])]
    r = _random_mode(args)
    if r:
        worst: dict[str, float] = {}
        for _ in range(int(r.get("instances", 50))):
            _, res = _witten_residuals(_random_graded(rng, r), betas)
            for k, v in res.items():
                worst[k] = max(worst.get(k, 0.0), v)
        return Outcome(worst, {"instances": int(r.get("instances", 50))})
    sys = ctx.get(args["system"], "graded")
    idx, res = _witten_residuals(sys, betas)
    if "expected" in args:
        res["expected"] = abs(idx[0].value - float(args["expected"]))
    return Outcome(res, {"index": idx[0].rank_index, "supertraces": [w.value for w in idx]}, headline="index")


def _relative_P(sys, spec, rng):
    if isinstance(spec, dict) and "susy_q" in spec:
        q = _graded_matrix(sys, spec["susy_q"], rng)
        Qq = sys.Q + q
        return Qq @ Qq - sys.H
    return _graded_matrix(sys, spec, rng)


@op("susy.relative_index", "anal.cont. ω_s(u_P(t)) at iβ = Tr_s(e^{−βH})/Tr_s(e^{−βH₀})", {"system": "graded"})
def relative_index_op(ctx, args, rng):
    beta = float(args.get("beta", 1.0))
    r = _random_mode(args)
    if r:
        worst = 0.0
        for _ in range(int(r.get("instances", 20))):
            sys = _random_graded(rng, r, 8, nonzero_index=True)
            P = susy.random_even(sys, rng, float(r.get("scale", 0.5)))
            worst = max(worst, susy.relative_index(sys, P, beta).residual)
        return Outcome({"two_sided": worst}, {"instances": int(r.get("instances", 20))})
    sys = ctx.get(args["system"], "graded")
    P = _relative_P(sys, args.get("P", "zero"), rng)
    rep = susy.relative_index(sys, P, beta)
    res = {"two_sided": rep.residual}
    if "expected" in args and not rep.degenerate:
        res["expected"] = abs(rep.value - parse_scalar(args["expected"]))
    warnings = ["degenerate reference: Tr_s(e^{−βH₀}) = 0; numerators compared"] if rep.degenerate else []
    return Outcome(res, {"value": None if rep.value is None else _cval(rep.value), "degenerate": rep.degenerate},
                   warnings, headline="value")


@op("susy.graded_kms_reduce", "φ = ω(Γ·), graded KMS, φ∘δ = 0; d_φ(u_ρ) = ±d_ω(u_ρ)", {"system": "graded"})
def graded_kms_op(ctx, args, rng):
    sys = ctx.get(args["system"], "graded")
    phi = susy.SuperKmsFunctional(sys, float(args.get("beta", 1.0)), args.get("normalization", "gibbs"))
    charges = []
    for k, cdesc in enumerate(args.get("charges", [])):
        v = _graded_matrix(sys, cdesc.get("v", "random_even_unitary"), rng)
        charges.append((cdesc.get("name", f"rho{k}"), v, float(cdesc.get("c", 0.0))))
    red = susy.graded_kms_reduce(phi, charges)
    N = sys.dim
    rand = lambda: rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))  # noqa: E731
    samples = int(args.get("samples", 5))
    res = {"decomposition": red.residual,
           "graded_kms": _max(phi.gkms_residual(rand(), rand(), t) for _ in range(samples) for t in _times(args)),
           "closedness": _max(phi.closedness_residual(rand()) for _ in range(samples)),
           "modulus_gibbs": float(np.abs(red.omega.densities[0] - susy.gibbs(sys, phi.beta).densities[0]).max())}
    signs = {}
    for s in red.signs:
        signs[s.name] = s.sign
        if s.sign is not None:
            res[f"sign_{s.name}"] = s.residual
    want = args.get("expected_signs")
    if want is not None:
        res["expected_signs"] = 0.0 if all(signs.get(k) == v for k, v in want.items()) else 1.0
    return Outcome(res, {"factor": _cval(red.factor), "signs": signs})


@op("susy.perturbation_cocycle", "−i(d/dt)u^q = u^q α_t(δq + q²), u^q(t) = e^{itH_q}e^{−itH}",
    {"system": "graded"})
def perturbation_cocycle_op(ctx, args, rng):
    sys = ctx.get(args["system"], "graded")
    q = _graded_matrix(sys, args.get("q", "random_odd"), rng)
    rep = susy.perturbation_cocycle(sys, q, ivp=bool(args.get("ivp", True)))
    res = {"ode": rep.ode_residual, "ivp": rep.ivp_residual, "trace": rep.trace_residual}
    if not np.abs(q).max():
        res["trivial"] = _max((rep.cocycle(t) - rep.cocycle.algebra.identity()).norm() for t in _times(args))
    return Outcome(res, {"phi_q_one": _cval(rep.phi_q_one)}, headline="phi_q_one")


@op("susy.deformation_invariance", "Tr(Γe^{−(Q+q)²}) = Tr(Γe^{−Q²}) for odd q", {"system": "graded"})
def deformation_op(ctx, args, rng):
    r = _random_mode(args)
    parity = args.get("parity", "odd")
    kind = "random_odd" if parity == "odd" else "random_even"
    scale = float(args.get("scale", 1.0))
    worst, first = 0.0, None
    for k in range(int((r or {}).get("instances", args.get("instances", 1)))):
        sys = _random_graded(rng, r, 12) if r else ctx.get(args["system"], "graded")
        q = _graded_matrix(sys, args["q"], rng) if "q" in args else _graded_matrix(sys, {"kind": kind, "scale": scale}, rng)
        rep = susy.deformation_invariance(sys, q, float(args.get("beta", 1.0)))
        worst = max(worst, rep.residual)
        first = first or rep
    return Outcome({"invariance": worst}, {"max_residual": worst, "parity": first.parity,
                                           "reference": _cval(first.reference)}, headline="max_residual")


def _rand_args(rng, N, n):
    return [rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N)) for _ in range(n + 1)]


@op("susy.jlo_eval", "τ_0(1) = φ(1), τ_n(1,…,1) = 0, (b+B)τ = 0", {"system": "graded"})
def jlo_eval_op(ctx, args, rng):
    sys = ctx.get(args["system"], "graded")
    phi = susy.SuperKmsFunctional(sys, float(args.get("beta", 1.0)), args.get("normalization", "gibbs"))
    N = sys.dim
    one = np.eye(N)
    res = {"tau0_one": abs(susy.jlo_eval(phi, [one]).value - phi(one))}
    res["tau_ones"] = _max(abs(susy.jlo_eval(phi, [one] * (n + 1)).value) for n in args.get("ones_degrees", [1, 2]))
    qerr, worst_est = 0.0, 0.0
    for n in args.get("quadrature_degrees", [1, 2]):
        a = _rand_args(rng, N, n)
        ex = susy.jlo_eval(phi, a)
        qv = susy.jlo_eval(phi, a, method="quadrature", tol=float(args.get("quadrature_tol", 1e-8)))
        qerr = max(qerr, abs(ex.value - qv.value) / max(1.0, abs(ex.value)))
        worst_est = max(worst_est, qv.error)
    res["exact_vs_quadrature"] = qerr
    cyc = susy.jlo_cocycle_residuals(phi, rng, tuple(args.get("cocycle_degrees", [1, 3])))
    res["b_plus_B"] = max(cyc.values())
    return Outcome(res, {"phi_one": _cval(phi(one)), "quadrature_error_estimate": worst_est,
                         "b_plus_B_by_degree": {str(k): v for k, v in cyc.items()}}, headline="phi_one")


@op("susy.jlo_charged", "τ^ρ_n = d_φ(u_ρ)·τ_n∘ρ⁻¹; τ̃^ρ_0(1) = d_φ(u_ρ)φ(1)", {"system": "graded"})
def jlo_charged_op(ctx, args, rng):
    r = _random_mode(args)
    degrees = [int(n) for n in args.get("degrees", [0, 1, 2])]
    c = float(args.get("c", 0.0))
    res = {"prop_two_paths": 0.0, "chern0": 0.0}
    cases = []
    if r:
        for _ in range(int(r.get("instances", 3))):
            sys = _random_graded(rng, r, 8)
            cases.append((sys, _graded_matrix(sys, "random_even_unitary", rng), float(rng.uniform(-1, 1))))
    else:
        sys = ctx.get(args["system"], "graded")
        cases.append((sys, _graded_matrix(sys, args.get("v", "random_even_unitary"), rng), c))
    qerr = 0.0
    for sys, v, cc_ in cases:
        phi = susy.SuperKmsFunctional(sys, 1.0, args.get("normalization", "gibbs"))
        for n in degrees:
            a = [v @ x @ v.conj().T for x in _rand_args(rng, sys.dim, n)]
            out = susy.jlo_charged(phi, v, cc_, a)
            res["prop_two_paths"] = max(res["prop_two_paths"], out.residual / max(1.0, abs(out.factorized)))
            res["chern0"] = max(res["chern0"], abs(out.chern0 - math.exp(-cc_) * phi(np.eye(sys.dim))))
            qerr = max(qerr, out.quadrature_error)
            if not np.abs(v - np.eye(sys.dim)).max() and cc_ == 0:
                res["identity_reduction"] = max(res.get("identity_reduction", 0.0),
                                                abs(out.rococ - susy.jlo_eval(phi, a).value))
    return Outcome(res, {"cases": len(cases), "quadrature_error_estimate": qerr})


@op("susy.coboundary", "∂ = b + B with ∂² = 0 on γ-invariant cochains", {"system": "graded"})
def coboundary_op(ctx, args, rng):
    gamma = (ctx.get(args["system"], "graded").gamma if "system" in args
             else np.asarray(args["gamma"], dtype=float))
    N = gamma.size
    f = susy.random_cochain(gamma, [int(n) for n in args.get("degrees", [0, 1, 2])], rng)
    res = dict(susy.dd_residuals(f, rng, int(args.get("max_degree", 2))))
    # (bf)_1 for a cochain with only f_0
    M = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    f0 = susy.cochain_from({0: lambda a: complex(np.trace(M @ a))}, gamma, cap=1)
    a0, a1 = _rand_args(rng, N, 1)
    g = gamma[:, None] * a1 * gamma[None, :]
    res["b_on_f0"] = abs(susy.b_operator(f0, 0)(a0, a1)
                         - (np.trace(M @ a0 @ a1) - np.trace(M @ g @ a0)))
    fx = args.get("fixture")
    if fx is not None:
        f1 = susy.cochain_from({1: lambda a, b: complex(np.trace(a @ b))}, gamma, cap=1)
        got = susy.B_operator(f1, 1)(parse_matrix(fx["a0"]))
        res["fixture"] = abs(got - parse_scalar(fx["expected"]))
    return Outcome(res, {"degrees": list(f.components)})


@op("susy.sector_supercharge", "Index(Q_{ρ+}) = d·Index(Q_+); Q_ρ² = H⊗1_d", {"system": "graded"})
def sector_supercharge_op(ctx, args, rng):
    sys = ctx.get(args["system"], "graded")
    d = int(args.get("d", 1))
    rep = susy.sector_supercharge(sys, d)
    res = {"index_law": float(abs(rep.index - rep.multiplicity * rep.base_index)),
           "square": rep.square_residual}
    values: dict[str, Any] = {"index": rep.index, "base_index": rep.base_index}
    if "expected_index" in args:
        res["expected_index"] = float(abs(rep.index - int(args["expected_index"])))
    if "ratio" in args:
        dr, ds = (int(x) for x in args["ratio"])
        got, want = susy.index_ratio(sys, dr, ds)
        res["ratio"] = abs(got - want)
        values["ratio"] = got
    return Outcome(res, values, headline="index")


@op("susy.tensor_supercharge", "Q̃ = Q⊗1 + Γ⊗Q, Q̃² = H⊗1 + 1⊗H, Tr_s multiplicative",
    {"A": "graded", "B": "graded"})
def tensor_supercharge_op(ctx, args, rng):
    A, B = ctx.get(args["A"], "graded"), ctx.get(args["B"], "graded")
    rep = susy.tensor_supercharge(A, B, args.get("variant", "displayed"), float(args.get("beta", 1.0)))
    res = {"closed_form": rep.closed_form_residual, "square": rep.square_residual,
           "index_product": rep.index_product_residual}
    idx = susy.witten_index(rep.system, 1.0).rank_index
    if "expected_index" in args:
        res["expected_index"] = float(abs(idx - int(args["expected_index"])))
    if B.dim == 1 and B.gamma[0] > 0:
        res["trivial_factor"] = float(np.abs(rep.system.Q - A.Q).max())
    return Outcome(res, {"index": idx, "dim": rep.system.dim}, headline="index")


def _real_sym(rng, n):
    a = rng.standard_normal((n, n))
    return ((a + a.T) / 2).astype(complex)


def _sym_unitary(rng, n):
    w, v = np.linalg.eigh(_real_sym(rng, n).real)
    return (v * np.exp(1j * w)) @ v.T
