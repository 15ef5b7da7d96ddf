import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm, logm

from modindex import cocycle as cc
from modindex.qsys import Dynamics, MatrixAlgebra, exp_i


def _pow_it(d, t):
    return expm(1j * t * logm(d))


def test_connes_cocycle_matches_matrix_powers(rng):
    alg = MatrixAlgebra((3,))
    phi, psi = alg.random_state(rng), alg.random_state(rng, 2.0)
    u = cc.connes_cocycle(psi, phi)
    for t in (-0.8, 0.3, 1.7):
        want = _pow_it(psi.densities[0], t) @ _pow_it(phi.densities[0], -t)
        np.testing.assert_allclose(u(t).blocks[0], want, atol=1e-11)


@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_connes_continuation_is_weight_ratio(seed, n):
    rng = np.random.default_rng(seed)
    alg = MatrixAlgebra((n,))
    phi = alg.random_state(rng, float(rng.uniform(0.5, 2)))
    psi = alg.random_state(rng, float(rng.uniform(0.5, 2)))
    u = cc.connes_cocycle(psi, phi)
    assert abs(cc.eval_complex(u, phi, -1j) - psi.weight / phi.weight) < 1e-9


@given(st.integers(0, 2**32 - 1))
def test_cocycle_identity_and_unitarity(seed):
    rng = np.random.default_rng(seed)
    alg = MatrixAlgebra((2, 2))
    u = cc.connes_cocycle(alg.random_state(rng), alg.random_state(rng))
    assert cc.cocycle_identity_residual(u, 0.4, -1.1) < 1e-10
    assert cc.unitarity_residual(u, 0.9) < 1e-12


@pytest.mark.parametrize("lam", [0.5, 2.0, 7.0])
def test_scaling_dimension(lam, rng):
    alg = MatrixAlgebra((3,))
    dyn = Dynamics(alg.random_hermitian(rng), 1.2)
    phi = dyn.gibbs()
    for u in (cc.connes_cocycle(phi.scaled(lam), phi), cc.connes_cocycle(phi.scaled(lam), phi, dynamics=dyn)):
        assert abs(cc.holomorphic_dimension(u, phi).value - lam) < 1e-10


def test_physical_parameterization_continues_to_i_beta(rng):
    alg = MatrixAlgebra((3,))
    dyn = Dynamics(alg.random_hermitian(rng), 0.8)
    phi, psi = dyn.gibbs(), alg.random_state(rng, 1.5)
    u = cc.connes_cocycle(psi, phi, dynamics=dyn)
    assert u.point == pytest.approx(0.8j)
    assert abs(cc.holomorphic_dimension(u, phi).value - 1.5) < 1e-10


def test_phase_cocycle_dimension_is_exponential(rng):
    alg = MatrixAlgebra((2,))
    dyn = Dynamics(alg.random_hermitian(rng), 1.1)
    hd = cc.holomorphic_dimension(cc.phase(0.7, dyn), dyn.gibbs())
    assert hd.value == pytest.approx(math.exp(-0.77), abs=1e-14)


def test_conjugation_cocycle_has_unit_dimension(rng):
    alg = MatrixAlgebra((4,))
    dyn = Dynamics(alg.random_hermitian(rng), 0.6)
    u = cc.conjugation(alg.random_unitary(rng), dyn)
    assert abs(cc.holomorphic_dimension(u, dyn.gibbs()).value - 1) < 1e-10


def test_perturbation_cocycle_identity(rng):
    alg = MatrixAlgebra((3,))
    dyn = Dynamics(alg.random_hermitian(rng), 1.0)
    u = cc.perturbation(dyn, alg.random_hermitian(rng, 0.3))
    assert cc.cocycle_identity_residual(u, 0.7, 1.3) < 1e-11


def test_product_family_is_not_a_cocycle(rng):
    alg = MatrixAlgebra((3,))
    A, B = alg.random_hermitian(rng), alg.random_hermitian(rng)
    dyn = Dynamics(A, 1.0)
    u = cc.sampled(lambda t: exp_i(A, t) @ exp_i(B, t), dyn)
    assert cc.cocycle_identity_residual(u, 0.9, 1.4) > 1e-3
