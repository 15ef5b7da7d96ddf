import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm, logm

from modindex import qsys
from modindex.errors import DomainError
from modindex.qsys import Dynamics, MatrixAlgebra, State


def test_two_level_gibbs_closed_form():
    alg = MatrixAlgebra((2,))
    H = alg.element([np.diag([0.0, 1.3])])
    phi = qsys.gibbs_state(H, 2.0)
    p = math.exp(-2.6)
    np.testing.assert_allclose(np.diag(phi.densities[0]).real, [1 / (1 + p), p / (1 + p)], atol=1e-15)


def test_gibbs_matches_expm_across_blocks(rng):
    alg = MatrixAlgebra((2, 3))
    H = alg.random_hermitian(rng)
    phi = qsys.gibbs_state(H, 0.7)
    raw = [expm(-0.7 * b) for b in H.blocks]
    Z = sum(np.trace(r).real for r in raw)
    for got, want in zip(phi.densities, raw):
        np.testing.assert_allclose(got, want / Z, atol=1e-13)


def test_gibbs_rejects_non_hermitian():
    alg = MatrixAlgebra((2,))
    with pytest.raises(DomainError):
        qsys.gibbs_state(alg.element([np.array([[0, 1], [0, 0]])]), 1.0)


@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.floats(0.1, 2.0))
def test_gibbs_is_kms(seed, n, beta):
    rng = np.random.default_rng(seed)
    alg = MatrixAlgebra((n,))
    dyn = Dynamics(alg.random_hermitian(rng, 0.8), beta)
    phi = dyn.gibbs()
    a, b = alg.random_element(rng), alg.random_element(rng)
    assert qsys.kms_check(phi, dyn, a, b, 0.4) < 1e-9


def test_kms_fails_at_wrong_temperature(rng):
    alg = MatrixAlgebra((3,))
    H = alg.random_hermitian(rng)
    phi = qsys.gibbs_state(H, 1.0)
    wrong = Dynamics(H, 0.4)
    worst = max(qsys.kms_check(phi, wrong, alg.random_element(rng), alg.random_element(rng), 0.0)
                for _ in range(5))
    assert worst > 1e-3


def test_gns_invariants_and_modular_operator(rng):
    alg = MatrixAlgebra((1, 2))
    phi = alg.random_state(rng)
    space = qsys.gns(phi)
    assert space.dim == 5
    inv = space.invariants([alg.random_element(rng) for _ in range(3)])
    assert max(inv.values()) < 1e-12
    # Δ is L(D)R(D⁻¹) block by block
    d = phi.density()
    np.testing.assert_allclose(space.delta, qsys.left_mult(d) @ qsys.right_mult(
        alg.element([np.linalg.inv(b) for b in d.blocks])), atol=1e-12)


def test_gns_spectrum_is_energy_differences(rng):
    alg = MatrixAlgebra((3,))
    H = alg.element([np.diag([0.0, 0.5, 2.0])])
    phi = qsys.gibbs_state(H, 1.5)
    got = np.sort(np.linalg.eigvalsh(qsys.gns(phi).hamiltonian(1.5)))
    want = np.sort([a - b for a in (0, 0.5, 2) for b in (0, 0.5, 2)])
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_modular_group_of_gibbs_is_time_evolution(rng):
    alg = MatrixAlgebra((3,))
    dyn = Dynamics(alg.random_hermitian(rng), 0.9)
    x = alg.random_element(rng)
    # σ_t^φ = α_{−βt}
    assert (qsys.modular_group(dyn.gibbs(), x, 0.3) - dyn.alpha(x, -0.9 * 0.3)).norm() < 1e-12


def test_relative_entropy_qubit_value():
    alg = MatrixAlgebra((2,))
    phi = State(alg, (np.diag([0.75, 0.25]),))
    psi = State(alg, (np.eye(2) / 2,))
    rel = qsys.relative_entropy(phi, psi)
    assert rel.value == pytest.approx(0.13081203594113697, abs=1e-15)
    assert not rel.support_violation


def test_relative_entropy_support_violation():
    alg = MatrixAlgebra((2,))
    rel = qsys.relative_entropy(State(alg, (np.eye(2) / 2,)), State(alg, (np.diag([1.0, 0.0]),)))
    assert rel.support_violation and math.isinf(rel.value)


@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_relative_entropy_logm_oracle_and_pinsker(seed, n):
    rng = np.random.default_rng(seed)
    alg = MatrixAlgebra((n,))
    phi, psi = alg.random_state(rng), alg.random_state(rng)
    a, b = phi.densities[0], psi.densities[0]
    want = np.trace(a @ (logm(a) - logm(b))).real
    got = qsys.relative_entropy(phi, psi).value
    assert got == pytest.approx(want, abs=1e-9)
    assert got >= 0.5 * phi.distance(psi) ** 2 - 1e-12


def test_quasi_equivalence_is_central_support():
    alg = MatrixAlgebra((1, 2))
    R = qsys.Representation
    assert qsys.quasi_equivalent(R(alg, (1, 1)), R(alg, (3, 5)))
    assert not qsys.quasi_equivalent(R(alg, (1, 0)), R(alg, (1, 1)))
    assert qsys.quasi_equivalent(R(alg, (1, 0)) + R(alg, (0, 2)), R(alg, (2, 2)))


def test_exp_i_continues_to_imaginary_time(rng):
    alg = MatrixAlgebra((3,))
    H = alg.random_hermitian(rng)
    np.testing.assert_allclose(qsys.exp_i(H, 0.5j).blocks[0], expm(-0.5 * H.blocks[0]), atol=1e-12)
