import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import legendre

from dgtau.basis import (MAX_ORDER, differentiation_matrix, gauss_basis, interpolation_matrix,
                         projection_matrix)


@pytest.mark.parametrize("n", range(0, 21))
def test_nodes_and_weights_match_numpy_leggauss(n):
    x, w = legendre.leggauss(n + 1)
    b = gauss_basis(n)
    np.testing.assert_allclose(b.nodes, x, atol=1e-14)
    np.testing.assert_allclose(b.weights, w, atol=1e-14)


@pytest.mark.parametrize("n", range(0, 11))
def test_quadrature_integrates_to_degree_2n_plus_1(n):
    b = gauss_basis(n)
    for k in range(2 * n + 2):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert abs(b.weights @ b.nodes ** k - exact) <= 1e-12


def test_quadrature_not_exact_beyond_2n_plus_1():
    b = gauss_basis(2)
    assert abs(b.weights @ b.nodes ** 6 - 2.0 / 7) > 1e-3


def test_order_zero_is_single_midpoint():
    b = gauss_basis(0)
    assert b.nodes.tolist() == [0.0]
    assert b.weights.tolist() == [2.0]


def test_order_limits():
    with pytest.raises(ValueError):
        gauss_basis(-1)
    with pytest.raises(ValueError):
        gauss_basis(MAX_ORDER + 1)
    assert gauss_basis(25, max_order=25).size == 26


def test_cached_arrays_are_read_only():
    b = gauss_basis(4)
    with pytest.raises(ValueError):
        b.nodes[0] = 0.0
    assert gauss_basis(4) is b


def test_nodes_symmetric():
    b = gauss_basis(7)
    np.testing.assert_allclose(b.nodes, -b.nodes[::-1], atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 12), coeffs=st.lists(st.floats(-3, 3), min_size=1, max_size=13),
       x=st.floats(-1, 1))
def test_interpolation_reproduces_polynomials(n, coeffs, x):
    coeffs = coeffs[: n + 1]
    b = gauss_basis(n)
    vals = np.polynomial.polynomial.polyval(b.nodes, coeffs)
    got = b.interpolate(vals, np.array([x]))[0]
    assert got == pytest.approx(np.polynomial.polynomial.polyval(x, coeffs), abs=1e-10)


def test_interpolation_at_node_is_exact_copy():
    b = gauss_basis(5)
    vals = np.arange(6.0)
    np.testing.assert_array_equal(b.interpolate(vals, b.nodes[2:3]), [2.0])


def test_lagrange_rows_sum_to_one():
    b = gauss_basis(6)
    L = b.lagrange(np.linspace(-1, 1, 17))
    np.testing.assert_allclose(L.sum(axis=1), 1.0, atol=1e-13)
    np.testing.assert_allclose(b.left.sum(), 1.0, atol=1e-13)


@pytest.mark.parametrize("n", [1, 3, 6, 10])
def test_differentiation_exact_for_degree_n(n):
    b = gauss_basis(n)
    D = differentiation_matrix(b)
    p = np.polynomial.Polynomial(np.linspace(1, 2, n + 1))
    np.testing.assert_allclose(D @ p(b.nodes), p.deriv()(b.nodes), atol=1e-10)
    np.testing.assert_allclose(D.sum(axis=1), 0.0, atol=1e-12)


def test_interpolation_matrix_identity_and_shape():
    a, c = gauss_basis(3), gauss_basis(5)
    np.testing.assert_array_equal(interpolation_matrix(a, a), np.eye(4))
    assert interpolation_matrix(a, c).shape == (6, 4)


@pytest.mark.parametrize("src,dst", [(5, 3), (7, 2), (4, 4), (2, 6)])
def test_projection_preserves_polynomials_of_target_degree(src, dst):
    p = np.polynomial.Polynomial(np.arange(1.0, min(src, dst) + 2))
    vals = p(gauss_basis(src).nodes)
    np.testing.assert_allclose(projection_matrix(src, dst) @ vals, p(gauss_basis(dst).nodes),
                               atol=1e-12)


def test_projection_is_l2_orthogonal():
    # the residual of an L2 projection is orthogonal to the target space
    src, dst = 7, 3
    fine = gauss_basis(src)
    f = np.exp(fine.nodes)
    g = projection_matrix(src, dst) @ f
    back = interpolation_matrix(gauss_basis(dst), fine) @ g
    for k in range(dst + 1):
        assert abs(fine.weights @ ((f - back) * fine.nodes ** k)) < 1e-13
