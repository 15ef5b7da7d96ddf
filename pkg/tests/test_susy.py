import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm, null_space

from modindex import susy
from modindex.errors import DomainError


def _system(seed, p=3, q=2, scale=0.8, rank=None):
    return susy.random_system(np.random.default_rng(seed), p, q, scale, rank)


def _rand(rng, n):
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(1, 5))
def test_mckean_singer(seed, p, q):
    rng = np.random.default_rng(seed)
    sys = susy.random_system(rng, p, q, 0.8, int(rng.integers(0, min(p, q) + 1)))
    Qp = sys.Q_plus
    oracle = null_space(Qp).shape[1] - null_space(Qp.conj().T).shape[1]
    for beta in (0.1, 1.0, 10.0):
        w = susy.witten_index(sys, beta)
        assert w.rank_index == oracle
        assert abs(w.value - oracle) < 1e-9


def test_supertrace_matches_expm():
    sys = _system(1)
    want = np.trace(sys.Gamma @ expm(-0.5 * sys.H)).real
    assert susy.supertrace_exp(sys, 0.5).real == pytest.approx(want, abs=1e-12)


def test_graded_system_rejects_even_supercharge():
    with pytest.raises(DomainError):
        susy.GradedSystem.from_json({"gamma": [1, -1], "Q": [[1, 0], [0, 0]]})


@given(st.integers(0, 2**32 - 1))
def test_deformation_invariance_odd(seed):
    rng = np.random.default_rng(seed)
    sys = susy.random_system(rng, 3, 2, 0.8)
    assert susy.deformation_invariance(sys, susy.random_odd(sys, rng), 1.0).residual < 1e-9


def test_even_perturbation_changes_supertrace():
    rng = np.random.default_rng(3)
    sys = susy.random_system(rng, 3, 2, 0.8)
    assert susy.deformation_invariance(sys, susy.random_even(sys, rng), 1.0).residual > 1e-3


@given(st.integers(0, 2**32 - 1))
def test_relative_index_two_routes(seed):
    rng = np.random.default_rng(seed)
    sys = susy.random_system(rng, 3, 2, 0.6)
    rep = susy.relative_index(sys, susy.random_even(sys, rng, 0.4), 1.0)
    assert rep.residual < 1e-10 and not rep.degenerate


def test_relative_index_degenerate_reference():
    rng = np.random.default_rng(0)
    sys = susy.random_system(rng, 2, 2, 0.6)
    rep = susy.relative_index(sys, susy.random_even(sys, rng, 0.3), 1.0)
    assert rep.degenerate and rep.value is None


def test_perturbation_cocycle_ode_and_trace(rng):
    sys = _system(5)
    rep = susy.perturbation_cocycle(sys, susy.random_odd(sys, rng, 0.5))
    assert rep.ode_residual < 1e-8 and rep.trace_residual < 1e-10


def test_graded_kms_sign_of_odd_charge():
    sys = _system(9, 2, 2)
    phi = susy.SuperKmsFunctional(sys, 1.0)
    swap = np.roll(np.eye(4), 2, axis=0)
    red = susy.graded_kms_reduce(phi, [("even", np.eye(4), 0.0), ("odd", swap, 0.3)])
    assert [s.sign for s in red.signs] == [1, -1]
    assert max(s.residual for s in red.signs) < 1e-10


def test_jlo_degree_zero_is_functional():
    sys = _system(2)
    phi = susy.SuperKmsFunctional(sys, 1.0)
    one = np.eye(sys.dim)
    assert susy.jlo_eval(phi, [one]).value == pytest.approx(phi(one), abs=1e-14)
    for n in (1, 2):
        assert abs(susy.jlo_eval(phi, [one] * (n + 1)).value) < 1e-14


def test_jlo_exact_vs_quadrature(rng):
    sys = _system(4, 2, 1)
    phi = susy.SuperKmsFunctional(sys, 1.0)
    a = [_rand(rng, sys.dim) for _ in range(3)]
    ex = susy.jlo_eval(phi, a)
    qv = susy.jlo_eval(phi, a, method="quadrature", tol=1e-8)
    assert abs(ex.value - qv.value) < 1e-6 * max(1, abs(ex.value))


def test_jlo_even_cochain_is_cocycle(rng):
    phi = susy.SuperKmsFunctional(_system(6, 2, 2, 0.6), 1.0)
    res = susy.jlo_cocycle_residuals(phi, rng, (1, 3))
    assert max(res.values()) < 1e-10


def test_phase_prefactor_only_rescales_components(rng):
    phi = susy.SuperKmsFunctional(_system(7, 2, 1), 1.0)
    a = [_rand(rng, phi.system.dim) for _ in range(3)]
    plain = susy.jlo_eval(phi, a).value
    signed = susy.jlo_eval(phi, a, phase_prefactor=True).value
    assert signed == pytest.approx((-1j) ** 2 * plain, abs=1e-12)


def test_B_on_trace_pairing():
    # f_1(a0, a1) = Tr(a0 a1): (Bf)_0(a0) = 2 Tr(a0)
    f = susy.cochain_from({1: lambda a, b: complex(np.trace(a @ b))}, np.ones(2), cap=1)
    assert susy.B_operator(f, 1)(np.array([[1.0, 2.0], [3.0, 4.0]])) == pytest.approx(10)


@given(st.integers(0, 2**32 - 1))
def test_coboundary_squares_to_zero(seed):
    rng = np.random.default_rng(seed)
    gamma = np.array([1.0, 1.0, -1.0])
    f = susy.random_cochain(gamma, [0, 1, 2], rng)
    assert max(susy.dd_residuals(f, rng).values()) < 1e-9


def test_charged_jlo_factorizes(rng):
    sys = _system(8, 2, 1)
    phi = susy.SuperKmsFunctional(sys, 1.0)
    w, v = np.linalg.eigh(susy.random_even(sys, rng))
    V = (v * np.exp(1j * w)) @ v.conj().T
    args = [V @ _rand(rng, sys.dim) @ V.conj().T for _ in range(2)]
    out = susy.jlo_charged(phi, V, 0.4, args)
    assert out.residual < 1e-8 * max(1, abs(out.factorized))
    assert out.chern0 == pytest.approx(math.exp(-0.4) * phi(np.eye(sys.dim)), abs=1e-10)


@pytest.mark.parametrize("d", [1, 2, 4])
def test_sector_index_multiplies(d):
    sys = _system(10, 2, 4)
    rep = susy.sector_supercharge(sys, d)
    assert rep.index == d * rep.base_index == -2 * d
    assert rep.square_residual < 1e-12


@pytest.mark.parametrize("variant", ["displayed", "permuted"])
def test_tensor_index_product(variant):
    A, B = _system(11, 3, 2), _system(12, 1, 3)
    rep = susy.tensor_supercharge(A, B, variant)
    assert max(rep.closed_form_residual, rep.square_residual, rep.index_product_residual) < 1e-10
    assert susy.witten_index(rep.system, 1.0).rank_index == 1 * -2
