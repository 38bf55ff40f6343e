import numpy as np
import pytest

from ruledmin.catalog import boruvka_sphere, equilateral_torus
from ruledmin.errors import SingularPointError, SliceRequiredError
from ruledmin.ruled import (
    ConePoint,
    PointGeometry,
    cone_scalars,
    cross_section_check,
    csv_columns,
    eval_G,
    genuineness_ranks,
    horizontal_frame,
    horizontal_metric,
    is_singular,
    length_prediction,
    lift_coordinates,
    normal_derivatives,
    normal_frame,
    normal_frame_derivative_fd,
    nullity_residual,
    random_cone_points,
    sample_grid,
    sample_row,
    second_form_invariants,
    shape_operators,
    shape_operators_fd,
    singular_scan,
)
from ruledmin.surface import FrameCore, NormalSplit


@pytest.fixture(scope="module")
def torus():
    return equilateral_torus().surface


@pytest.fixture(scope="module")
def boruvka():
    return boruvka_sphere().surface


@pytest.fixture(scope="module")
def boruvka_shapes(boruvka):
    result = []
    for cp in random_cone_points(boruvka, 3, seed=17):
        geo = PointGeometry(boruvka, cp.p)
        result.append((cp, geo, shape_operators(boruvka, cp, geo)))
    return result


@pytest.fixture(scope="module")
def cones(torus):
    return random_cone_points(torus, 6, seed=5)


@pytest.fixture(scope="module")
def shapes(torus, cones):
    result = []
    for cp in cones:
        geo = PointGeometry(torus, cp.p)
        result.append((cp, geo, shape_operators(torus, cp, geo)))
    return result


def test_cone_point_slice():
    cp = ConePoint(0.6, (0.0, 0.0), [0.8])
    assert cp.on_slice()
    assert cp.scaled(2.0).radius_sq == pytest.approx(4.0)
    assert cp.t_k(2) == 0.0


def test_cone_map_lies_on_sphere(torus, cones):
    for cp in cones:
        assert np.linalg.norm(eval_G(torus, cp)) == pytest.approx(1.0, abs=1e-12)


def test_singular_set(torus):
    assert is_singular(torus, ConePoint(0.0, (0.3, 0.3), [0.0]))
    assert not is_singular(torus, ConePoint(0.0, (0.3, 0.3), [1.0]))
    assert not any(is_singular(torus, cp) for cp in random_cone_points(torus, 200, seed=9))


def test_singular_set_with_ruling_outside_second_normal_space():
    # n = 5 layout: N_1 = (E3, E4), N_2 = (E5,), N_3 = (E6, E7)
    eye = np.eye(8)
    core = FrameCore(point=(0.0, 0.0), frame=eye, coords=np.eye(2), kappa=1.0, mu=1.0, gauge=0.0,
                     isotropic=True, split=NormalSplit([eye[3:5], eye[5:6], eye[6:8]]), level_radii=[1.0, 1.0, 1.0])
    assert is_singular(None, ConePoint(0.0, (0.0, 0.0), [0.0, 1.0, 0.0]), core)
    assert is_singular(None, ConePoint(0.0, (0.0, 0.0), [0.0, 0.0, 1.0]), core)
    assert not is_singular(None, ConePoint(0.0, (0.0, 0.0), [1.0, 0.0, 0.0]), core)
    assert not is_singular(None, ConePoint(1e-3, (0.0, 0.0), [0.0, 1.0, 0.0]), core)


@pytest.mark.parametrize("factory", [equilateral_torus, boruvka_sphere])
def test_singular_scan_reaches_s_zero(factory):
    surface = factory().surface
    points = [(0.7, 1.2), (1.4, 2.5)]
    scan = singular_scan(surface, points, seed=2, extra_directions=3)
    assert scan['checked'] == len(points) * (surface.n - 2 + 3)
    assert scan['singular'] == 0


def test_singular_point_has_no_frame(torus):
    with pytest.raises(SingularPointError):
        horizontal_frame(torus, ConePoint(0.0, (0.3, 0.3), [0.0]))


def test_horizontal_frame_is_orthonormal(torus, cones):
    for cp in cones:
        hf = horizontal_frame(torus, cp)
        gram = np.array([[a @ b for b in hf.E] for a in hf.E])
        np.testing.assert_allclose(gram, np.eye(len(hf.E)), atol=1e-8)


def test_normals_are_orthogonal_with_length_omega(torus, cones):
    for cp in cones:
        xi, eta = normal_frame(torus, cp)
        omega = cone_scalars(PointGeometry(torus, cp.p).frame, cp).omega
        assert np.linalg.norm(xi) == pytest.approx(omega, abs=1e-9)
        assert np.linalg.norm(eta) == pytest.approx(omega, abs=1e-9)
        assert abs(xi @ eta) <= 1e-9
        assert abs(xi @ eval_G(torus, cp)) <= 1e-9


def test_horizontal_metric_closed_form(torus, cones):
    metric = horizontal_metric(torus, cones[0])
    np.testing.assert_allclose(metric['measured'], metric['closed_form'], atol=1e-8)


def test_shape_operators_are_traceless_with_radial_nullity(shapes, torus):
    for cp, geo, shape in shapes:
        assert abs(np.trace(shape.A_xi)) <= 1e-10
        assert abs(np.trace(shape.A_eta)) <= 1e-10
        np.testing.assert_allclose(shape.A_xi, shape.A_xi.T, atol=1e-14)
        assert nullity_residual(shape, cp, torus.n) <= 1e-8


def test_flat_torus_norm_is_constant(shapes, torus):
    norms, scalars = [], []
    for cp, geo, shape in shapes:
        inv = second_form_invariants(shape, cp, torus.n)
        norms.append(inv.norm_sq)
        scalars.append(inv.normalized_scalar)
        assert inv.rank == 3
        assert np.max(np.abs(shape.h)) <= 1e-6
    assert np.std(norms) <= 1e-6
    assert np.std(scalars) <= 1e-6


def test_homogeneity(shapes, torus):
    cp, geo, shape = shapes[0]
    base = second_form_invariants(shape, cp, torus.n, scalar=False).norm_sq
    far = cp.scaled(3.0)
    scaled = second_form_invariants(shape_operators(torus, far, geo), far, torus.n, scalar=False).norm_sq
    assert scaled == pytest.approx(base / 9.0, rel=1e-6)


def test_scalar_curvature_needs_slice(shapes, torus):
    cp, geo, shape = shapes[0]
    far = cp.scaled(2.0)
    with pytest.raises(SliceRequiredError):
        second_form_invariants(shape_operators(torus, far, geo), far, torus.n)


def test_length_prediction_from_matrices(shapes):
    cp, geo, shape = shapes[1]
    prediction = length_prediction(shape, geo.frame, cp)
    assert set(prediction) == {'printed', 'from_matrices'}
    assert np.isfinite(prediction['printed'])


def test_oracle_agrees_with_closed_form(torus, shapes):
    for cp, geo, shape in shapes[:3]:
        oracle = shape_operators_fd(torus, cp, geo)
        assert oracle.tangent_residual <= 1e-6
        np.testing.assert_allclose(oracle.A_xi, shape.A_xi, atol=1e-4)
        np.testing.assert_allclose(oracle.A_eta, shape.A_eta, atol=1e-4)


def test_zero_sections_reproduce_the_surface(torus):
    records = cross_section_check(torus, [(0.5, 1.5)])
    assert [r['s'] for r in records] == [1.0, -1.0]
    for record in records:
        assert record['kappa'] == pytest.approx(1 / np.sqrt(2), abs=1e-6)
        assert record['tangent_residual'] <= 1e-8
        assert record['ruling_residual'] <= 1e-4


def test_normal_derivative_along_s(torus, cones):
    cp = cones[2]
    closed = normal_derivatives(torus, cp)
    xi_s, eta_s = normal_frame_derivative_fd(torus, cp, np.array([1.0, 0.0, 0.0, 0.0]))
    np.testing.assert_allclose(xi_s, closed['xi_s'], atol=1e-8)
    np.testing.assert_allclose(eta_s, closed['eta_s'], atol=1e-8)


def test_normal_derivative_along_ruling(torus, cones):
    cp = cones[3]
    closed = normal_derivatives(torus, cp)
    xi_t, _ = normal_frame_derivative_fd(torus, cp, np.array([0.0, 0.0, 0.0, 1.0]))
    np.testing.assert_allclose(xi_t, closed['xi_E3'], atol=1e-8)


def test_genuineness_ranks_on_torus_zero_section(torus):
    # at (1, p, 0) the E1, E2, E3 block of cos(psi) A_xi + sin(psi) A_eta has determinant kappa cos(3 psi)
    cp = ConePoint(1.0, (0.4, 0.6), [0.0])
    shape = shape_operators(torus, cp)
    kappa = 1 / np.sqrt(2)
    ranks = genuineness_ranks(shape, count=36)
    for k, rank in enumerate(ranks):
        psi = 2 * np.pi * k / 36
        block = shape.along(psi)[1:4, 1:4]
        assert abs(np.linalg.det(block)) == pytest.approx(kappa * abs(np.cos(3 * psi)), abs=1e-6)
        if k % 6 != 3:
            assert rank == 3


def test_boruvka_rulings_are_genuine(boruvka_shapes):
    for cp, geo, shape in boruvka_shapes:
        assert second_form_invariants(shape, cp, 4).rank == 4
        assert genuineness_ranks(shape, count=36) == [4] * 36


def test_boruvka_oracle_agrees_with_closed_form(boruvka, boruvka_shapes):
    for cp, geo, shape in boruvka_shapes:
        oracle = shape_operators_fd(boruvka, cp, geo)
        assert oracle.tangent_residual <= 1e-6
        np.testing.assert_allclose(oracle.A_xi, shape.A_xi, atol=1e-4)
        np.testing.assert_allclose(oracle.A_eta, shape.A_eta, atol=1e-4)
        assert nullity_residual(shape, cp, 4) <= 1e-8


@pytest.mark.parametrize("factory", [equilateral_torus, boruvka_sphere])
def test_normal_derivative_along_horizontal_lift(factory):
    surface = factory().surface
    cp = random_cone_points(surface, 1, seed=13)[0]
    geo = PointGeometry(surface, cp.p)
    closed = normal_derivatives(surface, cp, geo)
    for i in (1, 2):
        direction = lift_coordinates(geo.frame, cp, i)
        assert direction.shape == (3 + surface.n - 2,)
        xi_X, eta_X = normal_frame_derivative_fd(surface, cp, direction)
        np.testing.assert_allclose(xi_X, closed[f'xi_X{i}'], atol=1e-6)
        np.testing.assert_allclose(eta_X, closed[f'eta_X{i}'], atol=1e-6)


def test_sample_grid_and_rows(torus):
    points = sample_grid(torus, (3, 2), seed=1)
    assert len(points) == 6
    assert all(cp.on_slice() for cp in points)
    row = sample_row(torus, points[0])
    assert list(row)[:4] == ['s', 'u', 'v', 't1']
    assert row['rank'] == 3
    assert csv_columns(3) == ['s', 'u', 'v', 't1', 'Omega', 'normSq', 'rank', 'singular']
