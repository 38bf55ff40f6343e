import math

import numpy as np
import pytest

from ruledmin.catalog import boruvka_sphere, clifford_control, equilateral_torus, great_sphere
from ruledmin.config import DEFAULT_TOLERANCES
from ruledmin.errors import DegenerateFirstNormalError, DomainError
from ruledmin.surface import (
    Domain,
    adapted_frame,
    conn_residual,
    curvature_ellipse,
    dual_fields,
    frame_derivatives,
    gauss_curvature,
    gauss_equation_residual,
    higher_forms,
    induced_metric,
    is_one_isotropic,
    ricci_residuals,
    sample_points,
    second_form,
    tangent_frame,
)


@pytest.fixture(scope="module")
def torus():
    return equilateral_torus().surface


@pytest.fixture(scope="module")
def torus_frames(torus):
    return [adapted_frame(torus, p) for p in sample_points(torus, 5, seed=3)]


def test_domain_normalizes_periodic_coordinates():
    domain = Domain((0.0, 1.0), (0.0, 2.0), (True, False))
    assert domain.normalize((1.25, 0.5)) == pytest.approx((0.25, 0.5))
    with pytest.raises(DomainError):
        domain.normalize((0.5, 2.5))
    assert not domain.contains_box(0.5, 1.95, 0.1)
    assert domain.contains_box(0.99, 1.0, 0.1)


def test_torus_metric_and_flatness(torus):
    for point in sample_points(torus, 4, seed=1):
        np.testing.assert_allclose(induced_metric(torus, point), [[2 / 3, 1 / 3], [1 / 3, 2 / 3]], atol=1e-12)
        assert abs(gauss_curvature(torus, point)) <= 1e-8


def test_tangent_frame_is_orthonormal(torus):
    frame = tangent_frame(torus, (0.3, 0.8))
    assert frame.e1 @ frame.e1 == pytest.approx(1.0)
    assert frame.e2 @ frame.e2 == pytest.approx(1.0)
    assert abs(frame.e1 @ frame.e2) <= 1e-12


def test_torus_is_minimal_with_circular_ellipse(torus):
    form = second_form(torus, (1.0, 2.0))
    assert form.minimality_residual <= 1e-9
    ellipse = curvature_ellipse(torus, (1.0, 2.0))
    assert ellipse.kappa == pytest.approx(1 / math.sqrt(2), abs=1e-6)
    assert ellipse.mu == pytest.approx(1 / math.sqrt(2), abs=1e-6)
    assert ellipse.isotropic


def test_isotropy_verdicts(torus):
    points = sample_points(torus, 6, seed=2)
    verdict, records = is_one_isotropic(torus, points)
    assert verdict
    assert len(records) == 6

    control = clifford_control().surface
    verdict, records = is_one_isotropic(control, points)
    assert not verdict
    assert all(r['mu'] <= 1e-8 for r in records if 'mu' in r)


def test_clifford_ellipse_is_a_segment():
    ellipse = curvature_ellipse(clifford_control().surface, (0.4, 0.4))
    assert ellipse.kappa == pytest.approx(1.0, abs=1e-8)
    assert ellipse.mu <= 1e-8


def test_great_sphere_has_no_first_normal_space():
    with pytest.raises(DegenerateFirstNormalError):
        curvature_ellipse(great_sphere(), (0.2, 0.3))


def test_adapted_frame_structure(torus_frames):
    for frame in torus_frames:
        assert frame.orthonormality_residual() <= DEFAULT_TOLERANCES.frame
        assert frame.lam == pytest.approx(1.0, abs=1e-6)
        assert frame.n == 3
        assert frame.omega.shape == (6, 6, 2)
        np.testing.assert_allclose(frame.omega, -np.transpose(frame.omega, (1, 0, 2)), atol=1e-14)


def test_connection_identities(torus_frames):
    for frame in torus_frames:
        assert conn_residual(frame) <= 1e-6
        assert dual_fields(frame).omegas_residual <= 1e-6
        assert gauss_equation_residual(frame) <= 1e-6


def test_torus_connection_data_is_homogeneous(torus_frames):
    norms = [np.linalg.norm(frame.a) for frame in torus_frames]
    assert np.std(norms) <= 1e-6
    assert norms[0] > 0.1


def test_ricci_identities(torus, torus_frames):
    frame = torus_frames[0]
    derivs = frame_derivatives(torus, frame)
    assert np.max(np.abs(ricci_residuals(frame, derivs))) <= 1e-5


def test_absent_indices_read_zero(torus_frames):
    assert torus_frames[0].w(5, 7, 1) == 0.0


def test_orientation_flip_turns_e2():
    torus = equilateral_torus().surface
    base, flipped = tangent_frame(torus, (0.3, 0.8)), tangent_frame(torus.flipped(), (0.3, 0.8))
    np.testing.assert_allclose(flipped.e1, base.e1, atol=1e-12)
    np.testing.assert_allclose(flipped.e2, -base.e2, atol=1e-12)
    assert torus.flipped().flipped() == torus
    assert adapted_frame(torus.flipped(), (0.3, 0.8)).kappa1 == pytest.approx(1 / math.sqrt(2), abs=1e-6)


def test_torus_third_order_radius(torus, torus_frames):
    forms = higher_forms(torus, (0.9, 1.7), 2)
    assert forms.split.ranks == (2, 1)
    assert forms.radius == pytest.approx(1 / math.sqrt(2), abs=1e-6)
    assert np.linalg.norm(forms.values[1]) <= 1e-6
    for frame in torus_frames:
        assert frame.kappa1 == pytest.approx(1 / math.sqrt(2), abs=1e-6)


def test_great_sphere_has_no_higher_forms():
    forms = higher_forms(great_sphere(), (0.2, 0.3), 2)
    assert forms.split.ranks == ()
    assert forms.radius == 0.0
    assert not np.any(forms.values[1])


@pytest.fixture(scope="module")
def boruvka():
    return boruvka_sphere().surface


def test_boruvka_splitting_and_circular_ellipse(boruvka):
    forms = higher_forms(boruvka, (1.1, 0.4), 2)
    assert forms.split.ranks == (2, 2)
    np.testing.assert_allclose(forms.split.project(forms.values[0], 2), forms.values[0], atol=1e-10)
    assert forms.radius > 0.1
    ellipse = curvature_ellipse(boruvka, (1.1, 0.4))
    assert ellipse.kappa == pytest.approx(math.sqrt(5 / 12), abs=1e-6)
    assert ellipse.mu == pytest.approx(math.sqrt(5 / 12), abs=1e-6)


def test_boruvka_structure_equations(boruvka):
    for point in [(1.0, 0.5), (2.0, 4.0)]:
        frame = adapted_frame(boruvka, point)
        assert frame.n == 4
        assert frame.K == pytest.approx(1 / 6, abs=1e-6)
        assert conn_residual(frame) <= 1e-6
        assert dual_fields(frame).omegas_residual <= 1e-6
        assert gauss_equation_residual(frame) <= 1e-6
        derivs = frame_derivatives(boruvka, frame)
        assert np.max(np.abs(ricci_residuals(frame, derivs))) <= 1e-5
