import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from modindex import charge as ch
from modindex import cocycle as cc
from modindex.qsys import Dynamics, MatrixAlgebra


def _abelian_instance(seed, n=3, c=0.0):
    rng = np.random.default_rng(seed)
    alg = MatrixAlgebra((n,))
    dyn = Dynamics(alg.random_hermitian(rng), float(rng.uniform(0.3, 2.0)))
    return rng, dyn, ch.abelian(alg.random_unitary(rng), c)


def test_covariance_cocycle_closed_form():
    alg = MatrixAlgebra((3,))
    h = np.array([0.0, 1.0, 2.5])
    dyn = Dynamics(alg.element([np.diag(h)]), 0.9)
    shift = np.roll(np.eye(3), 1, axis=0)
    rho = ch.abelian(alg.element([shift]), 0.4)
    u = ch.covariance_cocycle(rho, dyn)
    for t in (-1.0, 0.5, 2.0):
        want = np.exp(0.4j * t) * np.diag(np.exp(1j * t * (np.roll(h, 1) - h)))
        np.testing.assert_allclose(u(t).blocks[0], want, atol=1e-13)


@given(st.integers(0, 2**32 - 1), st.floats(-2, 2))
def test_abelian_covariance_and_dimension(seed, c):
    rng, dyn, rho = _abelian_instance(seed, c=c)
    u = ch.covariance_cocycle(rho, dyn)
    samples = [dyn.algebra.random_element(rng) for _ in range(3)]
    assert ch.covariance_residual(rho, u, dyn, 0.6, samples) < 1e-10
    d = cc.holomorphic_dimension(u, dyn.gibbs()).value
    assert abs(d - math.exp(-c * dyn.beta)) < 1e-9 * max(1, math.exp(-c * dyn.beta))
    assert abs(ch.geometric_dimension(rho, dyn.gibbs(), dyn) - 1) < 1e-9


@given(st.integers(0, 2**32 - 1), st.floats(-2, 2))
def test_chemical_potential_is_minus_phase_and_antisymmetric(seed, c):
    rng, dyn, rho = _abelian_instance(seed, c=c)
    phi = dyn.gibbs()
    u = ch.covariance_cocycle(rho, dyn)
    a = ch.chemical_potential(rho, phi, dyn, u)
    b = ch.chemical_potential(rho.conjugate(), phi, dyn, ch.frobenius_dual_cocycle(rho, u))
    assert a.mu == pytest.approx(-c, abs=1e-9)
    assert abs(a.mu + b.mu) < 1e-10


def test_time_reversal_symmetric_charge_has_no_chemical_potential():
    rng = np.random.default_rng(8)
    alg = MatrixAlgebra((3,))
    s = rng.standard_normal((3, 3))
    H = alg.element([(s + s.T) / 2])
    w, v = np.linalg.eigh(rng.standard_normal((3, 3)) + rng.standard_normal((3, 3)).T)
    V = (v * np.exp(1j * w)) @ v.T
    dyn = Dynamics(H, 1.1)
    rho = ch.abelian(alg.element([V]))
    u = ch.covariance_cocycle(rho, dyn)
    assert abs(ch.chemical_potential(rho, dyn.gibbs(), dyn, u).mu) < 1e-9
    pct = ch.pct_check(rho, dyn, [alg.random_element(rng) for _ in range(3)])
    assert max(pct.values()) < 1e-10


def test_transpose_of_cocycle_is_adjoint_of_reversed_dual():
    # j(u(ρ,t)) = u(ρ̄,−t)* computed from explicit exponentials
    rng = np.random.default_rng(2)
    s = rng.standard_normal((3, 3))
    H = (s + s.T) / 2
    a = rng.standard_normal((3, 3))
    w, v = np.linalg.eigh((a + a.T) / 2)
    V = (v * np.exp(1j * w)) @ v.T
    t = 0.7

    def u(V, t):
        return V @ expm(1j * t * H) @ V.conj().T @ expm(-1j * t * H)

    np.testing.assert_allclose(u(V, t).T, u(V.conj().T, -t).conj().T, atol=1e-13)


@given(st.integers(0, 2**32 - 1))
def test_free_energy_routes_agree(seed):
    _, dyn, rho = _abelian_instance(seed, n=4, c=0.3)
    F = ch.free_energy(rho, dyn.gibbs(), dyn, ch.covariance_cocycle(rho, dyn))
    assert F.spread < 1e-8
    assert F.cocycle == pytest.approx(0.3, abs=1e-9)


def test_multiplicity_charge_dimension():
    rng = np.random.default_rng(4)
    alg = MatrixAlgebra((3,))
    dyn = Dynamics(alg.random_hermitian(rng), 0.8)
    rho = ch.multiplicity(3, dyn.gibbs().scaled(3), 0.5)
    u = ch.covariance_cocycle(rho, dyn)
    assert abs(cc.holomorphic_dimension(u, dyn.gibbs()).value - 3 * math.exp(-0.4)) < 1e-10
    assert ch.geometric_dimension(rho, dyn.gibbs(), dyn) == pytest.approx(3, abs=1e-10)
    assert ch.conditional_entropy(rho) == pytest.approx(2 * math.log(3), abs=1e-15)


def test_black_hole_log_two():
    rng = np.random.default_rng(6)
    alg = MatrixAlgebra((3,))
    sc = ch.BlackHoleScenario(2.0, alg.random_hermitian(rng, 0.5))
    assert sc.beta == pytest.approx(math.pi)
    rep = ch.black_hole_identity(sc, ch.multiplicity(2, sc.state.scaled(2)), ch.identity_charge(alg))
    assert rep.lhs == pytest.approx(math.log(2), abs=1e-15)
    assert rep.residual < 1e-9 and rep.ife_residual < 1e-9


def test_two_variable_cocycle_identity(rng):
    alg = MatrixAlgebra((3,))
    dyn = Dynamics(alg.random_hermitian(rng), 1.0)
    r, s = ch.abelian(alg.random_unitary(rng)), ch.abelian(alg.random_unitary(rng))
    assert ch.two_variable_residual(r, s, dyn, 0.8) < 1e-10
