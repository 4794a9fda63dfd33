import numpy as np
import pytest

from willmore_lab.exceptions import (
    DegenerateFitError,
    DomainRangeError,
    InvalidParameterError,
    JetOrderError,
    NonConformalChartError,
)
from willmore_lab.services.quartic_analysis import (
    CIRCLE_SAMPLES,
    VACUOUS_LEVEL,
    ImageGroup,
    branch_exponents,
    circle_sup,
    dzbar_q_finite_difference,
    fit_power_law,
    holomorphicity_scan,
    pole_order_fit,
    precision_dtype,
    quartic_at,
    quartic_table,
    rescaling_defect,
    scaling_verdict,
    synthetic_scaling_control,
)
from willmore_lab.services.surface_catalog import zoo


def test_clifford_quartic_is_constant(clifford):
    scan = holomorphicity_scan(clifford, (16, 16))
    assert scan.measure == "relative"
    assert scan.max_residual <= 1e-8
    assert scan.q_variation <= 1e-6
    assert float(np.mean(scan.sample.q).real) == pytest.approx(1.0 / 16.0, abs=1e-8)


def test_quartic_vanishes_on_inverted_catenoid(inverted_catenoid):
    scan = holomorphicity_scan(inverted_catenoid, (16, 8))
    assert scan.max_q_normalized <= VACUOUS_LEVEL
    assert scan.measure == "normalized"
    assert scan.max_conformality <= 1e-8


def test_clifford_holomorphicity_at_the_chart_origin(clifford):
    # ∂z̄Y_zz vanishes at z = 0, so the term-size scale is pure rounding there.
    at_origin = quartic_at(clifford, np.array([0.0]), np.array([0.0]))
    assert at_origin.z[0] == 0.0
    assert at_origin.relative_residual()[0] <= 1e-8
    scan = holomorphicity_scan(clifford, (32, 24))
    assert np.any(scan.sample.z == 0.0)
    assert scan.max_residual <= 1e-8


def test_quartic_needs_conformal_chart_and_order(clifford):
    with pytest.raises(NonConformalChartError):
        quartic_at(zoo("ellipsoid", (1.0, 1.0, 2.0)), 0.3, 1.0)
    with pytest.raises(JetOrderError):
        quartic_at(clifford, 0.0, 0.0, order=4)


def test_jet_derivative_agrees_with_finite_differences(clifford):
    check = dzbar_q_finite_difference(clifford, 1.0, 2.0)
    assert check.agrees


def test_rescaling_law(clifford, rng):
    u, v = rng.uniform(0.5, 5.5, (2, 12))
    assert rescaling_defect(clifford, u, v) <= 1e-8


def test_quartic_table_on_circles(inverted_enneper):
    sample = quartic_table(inverted_enneper, (2.0 ** -5, 2.0 ** -6), angles=8)
    assert sample.q.shape == (16,)
    np.testing.assert_allclose(np.sort(np.unique(np.round(sample.radius, 12))), [2.0 ** -6, 2.0 ** -5])
    assert set(sample.weights()) == {"weight_z4", "weight_z2", "weight_z1"}


def test_fit_power_law_recovers_slope():
    r = np.geomspace(1e-2, 1e-4, 8)
    fit = fit_power_law(r, 3.0 * r ** -2.0)
    assert fit.slope == pytest.approx(-2.0, abs=1e-10)
    assert fit.status == "ok"
    assert fit.meaningful
    assert fit.window == pytest.approx((1e-4, 1e-2))


def test_fit_power_law_detects_logarithms():
    r = np.geomspace(1e-2, 1e-4, 8)
    fit = fit_power_law(r, 1.0 - 0.5 * np.log(r))
    assert fit.status == "log"
    assert fit.log_coefficients[0] == pytest.approx(-0.5, rel=1e-8)


@pytest.mark.parametrize("radii, vals", [
    ([0.1], [1.0]),
    ([0.1, 0.01], [1.0, -1.0]),
    ([0.1, 0.01], [1.0, np.nan]),
    ([0.1, 0.01, 0.001], [1.0, 2.0]),
])
def test_fit_power_law_degenerate(radii, vals):
    with pytest.raises(DegenerateFitError):
        fit_power_law(radii, vals)


def test_circle_sup_of_smooth_function():
    sup, samples = circle_sup(lambda a: 2.0 + np.cos(a))
    assert sup == pytest.approx(3.0)
    assert samples == 2 * CIRCLE_SAMPLES


def test_pole_order_fit_arguments(sphere, inverted_catenoid):
    with pytest.raises(DomainRangeError):
        pole_order_fit(sphere)
    with pytest.raises(InvalidParameterError):
        pole_order_fit(inverted_catenoid, radii=(0.1, 0.05, 0.02))
    with pytest.raises(DomainRangeError):
        pole_order_fit(inverted_catenoid, radii=tuple(10.0 ** -k for k in range(3, 10)))
    with pytest.raises(InvalidParameterError):
        precision_dtype("quad")


@pytest.mark.slow
def test_pole_order_is_vacuous_on_inverted_minimal_surface(inverted_catenoid):
    fit = pole_order_fit(inverted_catenoid)
    assert fit.vacuous
    assert fit.slope is None
    assert fit.bounded is None


def test_synthetic_control_fails_scaling():
    table = synthetic_scaling_control()
    assert not table.passed
    assert table.verdict == "not-decaying"
    np.testing.assert_allclose(table.entries, 1.0)
    assert synthetic_scaling_control(power=0.0).passed


def test_scaling_verdicts():
    assert scaling_verdict([0.0, 0.0]) == ("vacuous", True)
    assert scaling_verdict([1.0, 0.6, 0.3]) == ("decaying", True)
    assert scaling_verdict([1.0, 2.0, 0.1]) == ("not-decaying", False)


@pytest.mark.slow
def test_branch_exponents_of_inverted_enneper(inverted_enneper):
    report = branch_exponents(inverted_enneper)
    assert report.consistent
    assert report.theta == pytest.approx(2.0, abs=0.05)


@pytest.mark.slow
def test_catenoid_ends_merge_into_one_branch_point(inverted_catenoid):
    report = branch_exponents(inverted_catenoid)
    for exponents in report.punctures:
        assert exponents.theta == pytest.approx(0.0, abs=0.05)
    (group,) = report.groups
    assert group.image_order == 1
    assert report.theta == 1.0
    assert report.fitted_theta == pytest.approx(1.0, abs=0.05)
    assert report.fitted_theta == pytest.approx(sum(1.0 + e.theta for e in report.punctures) - 1.0)


def test_merged_order_keeps_the_fitted_exponents():
    group = ImageGroup((0.0, 0.0, 0.0), ("-", "+"), (0, 0), (0.08, 0.04))
    assert group.image_order == 1
    assert group.fitted_order == pytest.approx(1.12)
