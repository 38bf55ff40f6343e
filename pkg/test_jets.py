import math

import numpy as np
import pytest

from ruledmin.catalog import boruvka_sphere, equilateral_torus
from ruledmin.errors import DegenerateBasisError, GeometryError, UnsupportedOrderError
from ruledmin.jets import (
    TaylorJet,
    analytic_jet,
    central_weights,
    fd_error_bound,
    fd_jet,
    jet_table_from_taylor,
    multi_indices,
    multilinear,
    project_orthogonal,
)


@pytest.fixture(scope="module")
def torus():
    return equilateral_torus().surface


def test_multi_indices_cover_each_order():
    assert list(multi_indices(2)) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


def test_taylor_powers_give_exact_partials():
    u, _ = TaylorJet.variables(2.0, 0.5, order=4)
    cube = u ** 3
    assert cube.partial(0, 0) == pytest.approx(8.0)
    assert cube.partial(1, 0) == pytest.approx(12.0)
    assert cube.partial(2, 0) == pytest.approx(12.0)
    assert cube.partial(3, 0) == pytest.approx(6.0)
    assert cube.partial(4, 0) == pytest.approx(0.0)


def test_taylor_pythagorean_identity():
    u, v = TaylorJet.variables(0.3, -1.1)
    angle = u * 2.0 + v
    one = angle.sin() * angle.sin() + angle.cos() * angle.cos()
    expected = np.zeros_like(one.coef)
    expected[0, 0] = 1.0
    np.testing.assert_allclose(one.coef, expected, atol=1e-14)


def test_taylor_mixed_partial_of_product():
    u, v = TaylorJet.variables(0.7, 0.2)
    product = u.sin() * v.cos()
    assert product.partial(1, 1) == pytest.approx(-math.cos(0.7) * math.sin(0.2))
    assert product.partial(2, 2) == pytest.approx(math.sin(0.7) * math.cos(0.2))


def test_taylor_rejects_negative_power():
    u, _ = TaylorJet.variables(1.0, 1.0)
    with pytest.raises(GeometryError):
        u ** -1


def test_jet_table_collects_components():
    u, v = TaylorJet.variables(0.0, 0.0, order=2)
    table = jet_table_from_taylor([u * v, u + v], (0.0, 0.0), order=2)
    np.testing.assert_allclose(table[(1, 1)], [1.0, 0.0])
    np.testing.assert_allclose(table[(1, 0)], [0.0, 1.0])


def test_analytic_jet_lies_on_sphere(torus):
    jet = analytic_jet(torus, (0.4, 1.3), 4)
    assert np.linalg.norm(jet.value) == pytest.approx(1.0, abs=1e-12)
    assert jet.dim == 6


def test_analytic_jet_rejects_high_order(torus):
    with pytest.raises(UnsupportedOrderError):
        analytic_jet(torus, (0.0, 0.0), 5)


def test_multilinear_matches_partials(torus):
    jet = analytic_jet(torus, (0.2, 0.9), 3)
    np.testing.assert_allclose(multilinear(jet, [(1.0, 0.0)]), jet[(1, 0)])
    np.testing.assert_allclose(multilinear(jet, [(0.0, 1.0), (1.0, 0.0)]), jet[(1, 1)])
    mixed = multilinear(jet, [(1.0, 1.0), (1.0, 1.0)])
    np.testing.assert_allclose(mixed, jet[(2, 0)] + 2 * jet[(1, 1)] + jet[(0, 2)], atol=1e-12)


def test_central_weights():
    nodes, weights = central_weights(1)
    np.testing.assert_allclose(nodes, [-1.0, 0.0, 1.0])
    np.testing.assert_allclose(weights, [-0.5, 0.0, 0.5], atol=1e-14)
    _, second = central_weights(2)
    np.testing.assert_allclose(second, [1.0, -2.0, 1.0], atol=1e-12)


@pytest.mark.parametrize("point", [(0.1, 0.2), (2.5, 4.0), (5.9, 0.01), (1.3, 3.3), (4.4, 6.2), (3.14, 1.57)])
def test_fd_jet_agrees_with_analytic(torus, point):
    step = 1e-3
    exact = analytic_jet(torus, point, 2)
    approx = fd_jet(torus, point, 2, step)
    for index in multi_indices(2):
        k = sum(index)
        assert np.max(np.abs(exact[index] - approx[index])) <= fd_error_bound(step, k)


@pytest.mark.parametrize("point", [(0.5, 0.3), (1.57, 3.0), (2.6, 5.5)])
def test_fd_jet_agrees_with_analytic_on_boruvka(point):
    # degree-3 harmonics: derivatives grow like 3^k
    surface = boruvka_sphere().surface
    step = 1e-3
    exact = analytic_jet(surface, point, 2)
    approx = fd_jet(surface, point, 2, step)
    for index in multi_indices(2):
        k = sum(index)
        assert np.max(np.abs(exact[index] - approx[index])) <= fd_error_bound(step, k, scale=100.0)


def test_fd_jet_rejects_bad_step(torus):
    with pytest.raises(GeometryError):
        fd_jet(torus, (0.0, 0.0), 2, 0.0)


def test_project_orthogonal():
    basis = [np.array([1.0, 0.0, 0.0]), np.array([1.0, 1.0, 0.0])]
    np.testing.assert_allclose(project_orthogonal([3.0, -2.0, 5.0], basis), [0.0, 0.0, 5.0], atol=1e-14)


def test_project_orthogonal_degenerate_basis():
    basis = [np.array([1.0, 2.0, 0.0]), np.array([2.0, 4.0, 0.0])]
    with pytest.raises(DegenerateBasisError):
        project_orthogonal([0.0, 0.0, 1.0], basis)
