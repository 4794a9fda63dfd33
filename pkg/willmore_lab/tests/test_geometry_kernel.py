import math

import numpy as np
import pytest

from willmore_lab.exceptions import (
    DomainRangeError,
    InvalidParameterError,
    JetOrderError,
    NonConformalChartError,
    SupportError,
)
from willmore_lab.services.geometry_kernel import (
    BumpField,
    MonotonicityProbe,
    PunctureBumpField,
    SumField,
    annulus_energy,
    energies,
    first_variation_fd,
    gauss_map_residual,
    laplace_beltrami,
    monotonicity_check,
    sample_points,
    shape_at,
    weak_form_pairing,
    weak_form_report,
    willmore_residual,
    willmore_scan,
)
from willmore_lab.services.surface_catalog import ENNEPER_T_MIN, zoo

PI = math.pi


def test_sphere_shape_data(sphere, rng):
    u = rng.uniform(-4.0, 4.0, 40)
    v = rng.uniform(0.0, 2.0 * PI, 40)
    shape = shape_at(sphere, u, v, 4)
    np.testing.assert_allclose(shape.H.value, -1.0, atol=1e-12)
    np.testing.assert_allclose(shape.gauss.value, 1.0, atol=1e-12)
    np.testing.assert_allclose(shape.A0_norm2.value, 0.0, atol=1e-12)
    assert shape.is_conformal


def test_shape_needs_second_order(sphere):
    with pytest.raises(JetOrderError):
        shape_at(sphere, 0.0, 0.0, 1)
    with pytest.raises(JetOrderError):
        willmore_residual(sphere, 0.0, 0.0, 3)


def test_laplace_beltrami_of_height_on_sphere(sphere, rng):
    """The coordinate functions of the unit sphere satisfy Δx = -2x."""
    u = rng.uniform(-2.0, 2.0, 20)
    v = rng.uniform(0.0, 2.0 * PI, 20)
    shape = shape_at(sphere, u, v, 5)
    z = shape.phi[2]
    np.testing.assert_allclose(laplace_beltrami(z, shape).value, -2.0 * z.value, atol=1e-10)


def test_gauss_map_residual_vanishes(rng):
    chart = zoo("ellipsoid", (1.0, 1.5, 2.0))
    u = rng.uniform(-3.0, 3.0, 30)
    v = rng.uniform(0.0, 2.0 * PI, 30)
    assert np.max(gauss_map_residual(shape_at(chart, u, v, 4))) <= 1e-10


def test_willmore_scan_separates_willmore_from_not():
    assert willmore_scan(zoo("inverted-catenoid"), (24, 16)).max_normalized <= 1e-6
    assert willmore_scan(zoo("clifford-torus-projected"), (24, 16)).max_normalized <= 1e-6
    assert willmore_scan(zoo("ellipsoid", (1.0, 1.0, 2.0)), (24, 16)).max_normalized >= 1e-2


def test_clifford_scan_where_mean_curvature_vanishes():
    # H = 0 along v = π, where ΔH and |Å|²H vanish together.
    scan = willmore_scan(zoo("clifford-torus-projected"), (48, 32))
    assert scan.max_raw <= 1e-10
    assert scan.max_normalized <= 1e-6


@pytest.mark.slow
def test_inverted_enneper_residual_up_to_the_chart_edge(inverted_enneper):
    assert inverted_enneper.domain.u_range[0] == ENNEPER_T_MIN
    scan = willmore_scan(inverted_enneper, (24, 16))
    assert scan.max_normalized <= 1e-6


def test_sample_points_skip_punctures(inverted_catenoid, rng):
    u, v = sample_points(inverted_catenoid, (20, 10), exclusion=1e-2)
    for p in inverted_catenoid.punctures:
        assert np.all(p.local_radius(u, v) >= 1e-2)
    ru, _ = sample_points(inverted_catenoid, (20, 10), rng=rng)
    assert len(ru) <= 200


def test_sphere_energies():
    report = energies(zoo("sphere"), (128, 64))
    assert report.W == pytest.approx(4 * PI, abs=1e-6)
    assert report.E == pytest.approx(0.0, abs=1e-6)
    assert report.area == pytest.approx(4 * PI, abs=1e-6)
    assert report.euler_estimate == pytest.approx(2.0, abs=1e-6)
    assert report.total_A == pytest.approx(report.E + 2.0 * report.W, rel=1e-8)


@pytest.mark.slow
@pytest.mark.parametrize("name, W, E, K", [
    ("inverted-catenoid", 8 * PI, 8 * PI, 4 * PI),
    ("clifford-torus-projected", 2 * PI ** 2, 4 * PI ** 2, 0.0),
])
def test_quantized_energies(name, W, E, K):
    report = energies(zoo(name), (128, 64))
    assert report.W == pytest.approx(W, rel=5e-3)
    assert report.E == pytest.approx(E, rel=5e-3)
    assert report.gauss_int == pytest.approx(K, abs=5e-3 * 4 * PI)


def test_annulus_energy_range_errors(inverted_catenoid, sphere):
    with pytest.raises(DomainRangeError):
        annulus_energy(sphere, 0.1)
    with pytest.raises(DomainRangeError):
        annulus_energy(inverted_catenoid, 1e-7)


def test_annulus_energy_decays(inverted_catenoid):
    coarse = annulus_energy(inverted_catenoid, 2.0 ** -4)
    fine = annulus_energy(inverted_catenoid, 2.0 ** -8)
    assert 0.0 < fine < coarse


def test_bump_support_is_checked(inverted_catenoid, clifford):
    with pytest.raises(SupportError):
        BumpField(center=(11.8, 1.0), half_width=(0.5, 0.5)).check_support(inverted_catenoid)
    with pytest.raises(SupportError):
        BumpField(center=(1.0, 1.0), half_width=(4.0, 0.5)).check_support(clifford)
    with pytest.raises(SupportError):
        PunctureBumpField(rho=1e6).check_support(inverted_catenoid)


def test_weak_form_vanishes_on_willmore_sphere(sphere):
    bump = BumpField(center=(0.5, PI), half_width=(0.5, 1.0))
    report = weak_form_report(sphere, bump, (48, 48))
    assert report.default_form == "conservation"
    for form in ("covariant", "conservation", "strong"):
        assert abs(report.forms[form]) <= 1e-4 * report.c2_norm, form


def test_weak_form_matches_finite_difference():
    chart = zoo("ellipsoid", (1.0, 1.0, 2.0))
    bump = BumpField(center=(0.5, PI), half_width=(0.5, 1.0))
    oracle = first_variation_fd(chart, bump, (48, 48))
    assert abs(oracle) > 1e-6
    assert weak_form_pairing(chart, bump, (48, 48)) == pytest.approx(oracle, rel=1e-2)
    assert weak_form_pairing(chart, bump, (48, 48), form="strong") == pytest.approx(oracle, rel=1e-2)


def test_weak_form_is_linear_in_the_test_field():
    chart = zoo("ellipsoid", (1.0, 1.0, 2.0))
    w1 = BumpField(center=(0.5, PI), half_width=(0.5, 1.0))
    w2 = BumpField(center=(0.5, PI), half_width=(0.5, 1.0), direction=(0.0, 0.0, 1.0))
    r1, r2 = weak_form_report(chart, w1, (48, 48)), weak_form_report(chart, w2, (48, 48))
    combined = weak_form_report(chart, SumField((w1, w2), (1.0, 2.0)), (48, 48))
    for form in ("covariant", "strong"):
        expected = r1.forms[form] + 2.0 * r2.forms[form]
        assert abs(expected) > 1e-6
        assert combined.forms[form] == pytest.approx(expected, rel=1e-9, abs=1e-12), form
    assert weak_form_pairing(chart, SumField((w1, w2), (1.0, 2.0)), (48, 48)) == pytest.approx(
        weak_form_pairing(chart, w1, (48, 48)) + 2.0 * weak_form_pairing(chart, w2, (48, 48)), rel=1e-9)


def test_weak_form_linearity_across_separate_supports():
    chart = zoo("ellipsoid", (1.0, 1.0, 2.0))
    w1 = BumpField(center=(0.5, PI), half_width=(0.5, 1.0))
    w2 = BumpField(center=(-0.5, 2.0), half_width=(0.4, 0.5))
    expected = weak_form_pairing(chart, w1, (64, 64)) + 2.0 * weak_form_pairing(chart, w2, (64, 64))
    combined = weak_form_pairing(chart, SumField((w1, w2), (1.0, 2.0)), (64, 64))
    assert combined == pytest.approx(expected, rel=1e-3)


def test_sum_field_support_and_arguments(inverted_catenoid):
    w1 = BumpField(center=(0.5, PI), half_width=(0.5, 1.0))
    w2 = BumpField(center=(-1.0, 1.0), half_width=(0.25, 0.5))
    assert SumField((w1, w2)).region() == ((-1.25, 1.0), (0.5, PI + 1.0))
    assert SumField((w1, w2)).coefficients == (1.0, 1.0)
    assert not SumField((w1, w2)).graded
    assert SumField((w1, PunctureBumpField(rho=0.5))).graded
    with pytest.raises(InvalidParameterError):
        SumField(())
    with pytest.raises(InvalidParameterError):
        SumField((w1, w2), (1.0,))
    with pytest.raises(SupportError):
        SumField((w1, BumpField(center=(11.8, 1.0), half_width=(0.5, 0.5)))).check_support(inverted_catenoid)


def test_weak_form_argument_errors():
    chart = zoo("ellipsoid", (1.0, 1.0, 2.0))
    bump = BumpField(center=(0.5, PI), half_width=(0.5, 1.0))
    with pytest.raises(InvalidParameterError):
        weak_form_pairing(chart, bump, form="flat")
    with pytest.raises(NonConformalChartError):
        weak_form_pairing(chart, bump, form="conservation")
    with pytest.raises(InvalidParameterError):
        weak_form_report(chart, BumpField(center=(0.5, PI), half_width=(0.5, 1.0), direction="up"))


def test_cap_area_on_sphere(sphere):
    probe = MonotonicityProbe(sphere, (0.0, 0.0, 1.0), (128, 64))
    for r in (0.3, 0.8, 1.5):
        assert probe.ball(r).area == pytest.approx(PI * r * r, rel=1e-4)
    assert probe.area_density(0.5) == pytest.approx(1.0, rel=1e-4)


def test_monotonicity_inequality(sphere):
    report = monotonicity_check(sphere, (0.0, 0.0, 1.0), 0.4, 1.2, (128, 64))
    assert report.holds
    assert report.lhs >= report.rhs - report.tolerance
    with pytest.raises(InvalidParameterError):
        monotonicity_check(sphere, (0.0, 0.0, 1.0), 1.2, 0.4, (128, 64))
