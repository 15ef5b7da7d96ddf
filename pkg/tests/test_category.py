import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from modindex import category as cat
from modindex.errors import DomainError

GOLDEN = (1 + math.sqrt(5)) / 2


def test_fibonacci_dimension():
    fr = cat.builtin_ring("fibonacci")
    assert cat.pf_dimension(fr, "tau") == pytest.approx(GOLDEN, abs=1e-12)
    assert cat.homomorphism_residual(fr, fr.dimensions()) < 1e-12


def test_ising_dimensions():
    np.testing.assert_allclose(cat.builtin_ring("ising").dimensions(), [1, math.sqrt(2), 1], atol=1e-12)


def test_galois_conjugate_is_rejected():
    fr = cat.fibonacci()
    conj = cat.positive_character_check(fr, [1, (1 - math.sqrt(5)) / 2])
    assert conj.homomorphism_residual < 1e-12 and not conj.positive and not conj.accepted
    assert cat.positive_character_check(fr, [1, GOLDEN]).accepted
    assert not cat.positive_character_check(fr, [1, 2]).accepted


@pytest.mark.parametrize("name", ["Z3", "Z5", "S3", "Q8", "D4", "S4", "Z2xZ2"])
def test_rep_ring_norms_are_degrees(name):
    G = cat.builtin_group(name)
    fr = cat.rep_fusion_ring(G)
    degrees = cat.character_table(G).degrees
    assert sum(d * d for d in degrees) == G.order
    for i, d in enumerate(degrees):
        assert np.linalg.norm(fr.fusion_matrix(i), 2) == pytest.approx(d, abs=1e-12)
        assert cat.amenability_check(fr, i) < 1e-12


def test_s3_character_table_frozen():
    ct = cat.character_table(cat.builtin_group("S3"))
    assert sorted(ct.degrees) == [1, 1, 2]
    assert ct.orthogonality_residual() < 1e-12


def test_group_from_json_checks_order():
    doc = {"order": 2, "table": [[0, 1], [1, 0]]}
    assert cat.Group.from_json(doc).order == 2
    with pytest.raises(DomainError):
        cat.Group.from_json({"order": 3, "table": [[0, 1], [1, 0]]})


@pytest.mark.parametrize("name,dim", [("S3.std", 2), ("S3.sgn", 1), ("S3.triv", 1), ("Q8.spin", 2),
                                      ("S3.std+S3.sgn", 3)])
def test_conjugate_equations(name, dim):
    sol = cat.solve_conjugate(cat.builtin_rep(name))
    assert max(sol.equation_residuals()) < 1e-12
    assert max(sol.intertwining_residuals()) < 1e-12
    nr, nrb = sol.norms
    assert nr * nrb == pytest.approx(dim, abs=1e-12)


@given(st.complex_numbers(min_magnitude=0.1, max_magnitude=10))
def test_intrinsic_dimension_gauge_invariant(lam):
    sol = cat.solve_conjugate(cat.builtin_rep("S3.std"))
    g = sol.gauged(lam)
    assert max(g.equation_residuals()) < 1e-10
    assert cat.intrinsic_dimension(g).value == pytest.approx(2, abs=1e-10)


def test_intrinsic_dimension_additive():
    sol = cat.solve_conjugate(cat.builtin_rep("S3.std+S3.sgn"))
    parts = [cat.builtin_rep("S3.std"), cat.builtin_rep("S3.sgn")]
    res = cat.intrinsic_dimension(sol, parts)
    assert res.value == pytest.approx(3, abs=1e-12)
    assert cat.intrinsic_dimension(sol).flagged


@given(st.integers(0, 2**32 - 1))
def test_frobenius_map_gauge_independent(seed):
    rng = np.random.default_rng(seed)
    rho = cat.builtin_rep("S3.std+S3.sgn")
    sol = cat.solve_conjugate(rho)
    basis = cat.intertwiners(rho, rho)
    T = sum(complex(*rng.standard_normal(2)) * b for b in basis)
    v = sum(complex(*rng.standard_normal(2)) * b for b in basis)
    g = sol.gauged_by(v)
    np.testing.assert_allclose(cat.frobenius_map(T, g, g), cat.frobenius_map(T, sol, sol), atol=1e-10)


def test_frobenius_map_antilinear_and_unital():
    rho = cat.builtin_rep("S3.std")
    sol = cat.solve_conjugate(rho)
    np.testing.assert_allclose(cat.frobenius_map(np.eye(2), sol, sol), np.eye(2), atol=1e-12)
    np.testing.assert_allclose(cat.frobenius_map(2j * np.eye(2), sol, sol), -2j * np.eye(2), atol=1e-12)


def test_canonical_endomorphism_of_conjugate_pair():
    rep = cat.conjugate_canonical_check(cat.solve_conjugate(cat.builtin_rep("S3.std")))
    assert rep.nonzero and rep.residual < 1e-10
