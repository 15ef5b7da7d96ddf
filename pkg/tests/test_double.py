import numpy as np
import pytest
from hypothesis import given, strategies as st

from modindex import category as cat
from modindex import double as dbl
from modindex.qsys import MatrixAlgebra


@pytest.mark.parametrize("make", [dbl.pointed_inner, dbl.pointed_outer])
@pytest.mark.parametrize("n", [2, 3, 4])
def test_pointed_relations_hold(make, n, rng):
    rep = dbl.relations_check(make(n), rng)
    assert rep.max_residual < 1e-12
    assert dbl.index_check(make(n))["residual"] < 1e-12


def test_corrupted_sign_breaks_products(rng):
    rep = dbl.relations_check(dbl.pointed_inner(3, {(1, 1): -1}), rng)
    assert rep.residuals["RR"] > 0.1


@given(st.integers(0, 2**32 - 1))
def test_star_product_associative_and_realized(seed):
    rng = np.random.default_rng(seed)
    spec = dbl.pointed_inner(3)
    X, Y, Z = (dbl.random_element(spec, rng) for _ in range(3))
    assert ((X @ Y) @ Z - X @ (Y @ Z)).norm() < 1e-12
    np.testing.assert_allclose(dbl.realize(X @ Y), dbl.realize(X) @ dbl.realize(Y), atol=1e-12)
    np.testing.assert_allclose(dbl.realize(X.adj()), dbl.realize(X).conj().T, atol=1e-12)


def test_generators_multiply_cyclically():
    spec = dbl.pointed_outer(4)
    R = [dbl.generator(spec, i) for i in range(4)]
    assert (R[1] @ R[3] - dbl.unit(spec)).norm() < 1e-14
    assert (R[1].adj() - R[3]).norm() < 1e-14


def test_expectation_is_zeroth_coefficient(rng):
    spec = dbl.pointed_inner(3)
    X = dbl.random_element(spec, rng)
    assert (dbl.expectation(X) - X(0)).norm() == 0
    rep = dbl.expectation_check(spec, rng)
    assert max(rep.unital, rep.idempotent, rep.positivity, rep.expansion) < 1e-12 and rep.faithful


def test_trivial_double_is_the_coefficient_algebra(rng):
    spec = dbl.trivial_double(MatrixAlgebra((2,)))
    X, Y = dbl.random_element(spec, rng), dbl.random_element(spec, rng)
    assert ((X @ Y)(0) - X(0) @ Y(0)).norm() < 1e-14


@pytest.mark.parametrize("name,total", [("S3", 36), ("Q8", 64), ("D4", 64), ("Z4", 16), ("S4", 576)])
def test_group_double_sum_of_squares(name, total):
    tab = dbl.group_double_dimensions(cat.builtin_group(name))
    assert tab.sum_of_squares == total
    assert all(isinstance(d, int) for d in tab.dims)


def test_s3_double_dimensions_frozen():
    assert sorted(dbl.group_double_dimensions(cat.builtin_group("S3")).dims) == [1, 1, 2, 2, 2, 2, 3, 3]
