"""Acceptance criteria, replayed from the shipped scenarios.

Each test prints one line ``[PASS] criterion N: ...`` or ``[FAIL] ...``;
the lines are repeated in the terminal summary.
"""

import json
import math
import subprocess
import sys
import time
from functools import lru_cache

from modindex.cli import run, run_check
from modindex.scenario import Context, load

from conftest import ACCEPTANCE_LINES, SCENARIOS


@lru_cache(maxsize=None)
def report(name: str) -> dict:
    return run(load(SCENARIOS / f"{name}.json"))


def check(name: str, cid: str) -> dict:
    found = [c for c in report(name)["checks"] if c["id"] == cid]
    assert found, f"{name}.json has no check {cid!r}"
    return found[0]


def timed(name: str, cid: str) -> tuple[dict, float]:
    """Re-run a single check in isolation to measure its wall time."""
    sc = load(SCENARIOS / f"{name}.json")
    ctx = Context(sc)
    c = next(c for c in sc.checks if c.id == cid)
    t0 = time.perf_counter()
    out = run_check(ctx, c, c.tolerance or sc.tolerance, False)
    return out, time.perf_counter() - t0


def verdict(n: int, text: str, conditions: dict[str, bool]) -> None:
    ok = all(conditions.values())
    failed = [k for k, v in conditions.items() if not v]
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {text}" + ("" if ok else f" (failed: {', '.join(failed)})")
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def res(c: dict, key: str) -> float:
    v = c["residuals"][key]
    return math.inf if isinstance(v, str) else v


def test_criterion_01_connes_continuation():
    c, wall = timed("cocycle", "continuation-random")
    verdict(1, f"Connes continuation over {c['values']['instances']} random pairs, max error "
               f"{c['values']['max_error']:.2e}, {wall:.2f}s",
            {"instances": c["values"]["instances"] == 100, "error": res(c, "continuation") < 1e-9,
             "runtime": wall < 5.0})


def test_criterion_02_scaling_oracle():
    c = check("cocycle", "dimension-scaling")
    verdict(2, f"d_φ(connes(λφ,φ)) = λ for λ ∈ {c['values']['lambdas']}, error {res(c, 'scaling'):.2e}",
            {"lambdas": sorted(c["values"]["lambdas"]) == [0.5, 2, 7], "error": res(c, "scaling") < 1e-10,
             "imaginary": res(c, "imaginary_part") < 1e-10})


def test_criterion_03_geometric_dimension():
    c = check("charge", "geometric-random")
    verdict(3, f"geometric dimension of {c['values']['instances']} abelian charges, error "
               f"{res(c, 'dimension'):.2e}, gauge sweep spread {res(c, 'sweep_spread'):.2e}",
            {"instances": c["values"]["instances"] == 50, "dimension": res(c, "dimension") < 1e-9,
             "sweep": res(c, "sweep_spread") < 1e-9})


def test_criterion_04_chemical_potential_asymmetry():
    same = check("charge", "mu-random")
    rev = check("charge", "mu-time-reversal")
    doc = json.loads((SCENARIOS / "charge.json").read_text())
    streams = {c["id"]: c["args"]["random"].get("stream") for c in doc["checks"] if c["id"] in ("geometric-random", "mu-random")}
    verdict(4, f"μ_ρ + μ_ρ̄ = {res(same, 'asymmetry'):.2e} on the geometric-dimension instances; "
               f"|μ| = {res(rev, 'mu'):.2e} under time reversal",
            {"same_instances": len(set(streams.values())) == 1 and None not in streams.values(),
             "asymmetry": res(same, "asymmetry") < 1e-10, "time_reversal": res(rev, "mu") < 1e-9,
             "pct": max(res(rev, k) for k in ("pct_state", "pct_charge", "pct_cocycle")) < 1e-9})


def test_criterion_05_free_energy_routes():
    c, wall = timed("charge", "free-energy-random")
    doc = json.loads((SCENARIOS / "charge.json").read_text())
    spec = next(x for x in doc["checks"] if x["id"] == "free-energy-random")["args"]["random"]
    verdict(5, f"free energy GNS/cocycle/variational spread {res(c, 'route_spread'):.2e} on "
               f"{c['values']['instances']} instances (n = {spec['n']}), {wall:.2f}s",
            {"instances": c["values"]["instances"] == 20 and spec["n"] == 4,
             "spread": res(c, "route_spread") < 1e-8, "runtime": wall < 10.0})


def test_criterion_06_black_hole_identity():
    rep = report("black_hole")
    bh = [c for c in rep["checks"] if c["op"] == "charge.black_hole_identity"]
    m2 = check("black_hole", "multiplicity-vs-identity")
    verdict(6, f"relative free energy identity on {len(bh)} charge pairs, max residual "
               f"{max(c['max_residual'] for c in bh):.2e}; multiplicity 2 vs identity LHS = {m2['values']['lhs']:.15f}",
            {"residual": all(c["max_residual"] < 1e-9 for c in bh),
             "log2": abs(m2["values"]["lhs"] - math.log(2)) < 1e-12,
             "beta": all(res(c, "beta_kappa") < 1e-12 for c in bh)})


def test_criterion_07_witten_index():
    c = check("susy", "witten-random")
    verdict(7, f"Witten index on {c['values']['instances']} graded systems: integrality "
               f"{res(c, 'integer'):.2e}, β-spread {res(c, 'beta_spread'):.2e}, rank-nullity gap {res(c, 'rank_index'):.2e}",
            {"instances": c["values"]["instances"] == 50, "integer": res(c, "integer") < 1e-9,
             "constant": res(c, "beta_spread") < 1e-9, "rank": res(c, "rank_index") < 1e-9})


def test_criterion_08_relative_index():
    checks = [c for p in sorted(SCENARIOS.glob("*.json")) for c in report(p.stem)["checks"]
              if c["op"] == "susy.relative_index"]
    worst = max(res(c, "two_sided") for c in checks)
    verdict(8, f"multiplicative relative index, {len(checks)} corpus checks, worst two-sided gap {worst:.2e}",
            {"present": len(checks) >= 3, "two_sided": worst < 1e-10,
             "status": all(c["status"] == "pass" for c in checks)})


def test_criterion_09_deformation_invariance():
    odd = check("susy", "deformation-random")
    even = check("susy", "deformation-even-control")
    verdict(9, f"odd deformations change Tr_s by {res(odd, 'invariance'):.2e} over "
               f"20 instances; even control {res(even, 'invariance'):.2e}",
            {"odd": res(odd, "invariance") < 1e-9, "control": res(even, "invariance") > 1e-3,
             "control_status": even["status"] == "pass" and even["expect"] == "fail"})


def test_criterion_10_jlo_cocycle():
    t0 = time.perf_counter()
    rep = run(load(SCENARIOS / "jlo.json"))
    wall = time.perf_counter() - t0
    basic = [c for c in rep["checks"] if c["op"] == "susy.jlo_eval"]
    charged = [c for c in rep["checks"] if c["op"] == "susy.jlo_charged"]
    worst_bB = max(res(c, "b_plus_B") for c in basic)
    worst_two = max(res(c, "prop_two_paths") for c in charged)
    verdict(10, f"JLO τ_0(1) = φ(1), τ_n(1,…,1) = 0, (b+B)τ ≤ {worst_bB:.2e}, "
                f"charged two-path gap {worst_two:.2e}, {wall:.2f}s",
            {"tau0": all(res(c, "tau0_one") < 1e-12 for c in basic),
             "ones": all(res(c, "tau_ones") < 1e-12 for c in basic),
             "bB": worst_bB < 1e-5, "two_paths": worst_two < 1e-5, "runtime": wall < 60.0})


def test_criterion_11_fusion_dimensions():
    fib = check("category", "fibonacci-pf")
    norms = [check("category", k) for k in ("rep-z3-norms", "rep-z5-norms", "rep-s3-norms")]
    hom = [c for c in report("category")["checks"] if c["op"] == "category.pf_dimension"]
    verdict(11, f"Fibonacci d = {fib['values']['d']:.15f}; ‖m^σ‖ = d(σ) for Rep(Z_3), Rep(Z_5), Rep(S_3) "
                f"within {max(res(c, 'norm_vs_degree') for c in norms):.1e}",
            {"fibonacci": abs(fib["values"]["d"] - (1 + math.sqrt(5)) / 2) < 1e-12,
             "norms": all(res(c, "norm_vs_degree") < 1e-12 for c in norms),
             "homomorphism": all(res(c, "homomorphism") < 1e-10 for c in hom),
             "galois_rejected": not fib["values"]["alternative_0_accepted"]})


def test_criterion_12_quantum_double():
    rel = [check("double", k) for k in ("relations-z3", "relations-z4", "relations-z5-outer")]
    s3 = check("double_s3", "dimensions-s3")
    q8 = check("double", "dimensions-q8")
    verdict(12, f"pointed Z_n relations within {max(c['max_residual'] for c in rel):.1e}; "
                f"D(S_3) Σd² = {s3['values']['sum_of_squares']}, D(Q_8) Σd² = {q8['values']['sum_of_squares']}",
            {"relations": all(c["max_residual"] < 1e-12 for c in rel),
             "s3": s3["values"]["sum_of_squares"] == 36 and isinstance(s3["values"]["sum_of_squares"], int),
             "q8": q8["values"]["sum_of_squares"] == 64,
             "row": "D(S_3): Σd² = 36 = |G|²" in report("double_s3")["tables"]})


def test_criterion_13_conjugate_machinery():
    conj = [check("category", k) for k in ("conjugate-std", "conjugate-sgn", "conjugate-triv", "conjugate-std-sgn")]
    frob = [check("category", k) for k in ("frobenius-std", "frobenius-std-sgn")]
    add = [check("category", k) for k in ("intrinsic-additive", "intrinsic-additive-multiplicity")]
    eq = max(max(res(c, "conjugate_equation_1"), res(c, "conjugate_equation_2")) for c in conj)
    gauge = max(res(c, "gauge") for c in frob)
    verdict(13, f"Rep(S_3) conjugate equations within {eq:.1e}; Frobenius gauge gap {gauge:.1e}; "
                f"additive dimensions {[c['values']['d'] for c in add]}",
            {"equations": eq < 1e-12, "gauge": gauge < 1e-10,
             "additive": all(res(c, "expected") < 1e-12 for c in add)})


def test_criterion_14_determinism():
    outs = []
    for jobs in ("1", "1", "4"):
        for name in ("charge", "susy"):
            proc = subprocess.run([sys.executable, "-m", "modindex", "run", str(SCENARIOS / f"{name}.json"),
                                   "--jobs", jobs], capture_output=True)
            outs.append((name, proc.stdout))
    by_name = {}
    for name, out in outs:
        by_name.setdefault(name, set()).add(out)
    verdict(14, "repeated runs (serial and --jobs 4) give byte-identical JSON reports",
            {name: len(v) == 1 and len(next(iter(v))) > 0 for name, v in by_name.items()})
