import math

import numpy as np
import pytest

from willmore_lab.exceptions import (
    DegenerateMetricError,
    JetOrderError,
    NorthPoleError,
    NumericalError,
    UnknownSurfaceError,
)
from willmore_lab.services.conformal_gauss import (
    S3_ZOO,
    cgm_r3,
    cgm_s3,
    conformal_factor,
    grad_cgm,
    grad_cgm_closed_form,
    identity_residuals,
    light_like_ratio,
    model_deviation,
    oscillation,
    oscillation_sweep,
    s3_shape,
    s3_zoo,
    stereographic,
    stereographic_inverse,
)
from willmore_lab.services.jet_engine import Jet2, values
from willmore_lab.services.minkowski import eta_norm2, lorentz_from_conformal, matrix_apply
from willmore_lab.services.surface_catalog import apply_conformal, random_conformal_map, zoo


def _points(rng, count=64, t=3.0):
    return rng.uniform(-t, t, count), rng.uniform(0.0, 2.0 * math.pi, count)


def test_round_sphere_has_constant_cgm(sphere, rng):
    """H = -1 and n = Φ collapse Y to the fourth basis vector."""
    u, v = _points(rng)
    sample = cgm_r3(sphere, u, v, 3)
    np.testing.assert_allclose(sample.values, np.tile([[0.0], [0.0], [0.0], [1.0], [0.0]], (1, 64)), atol=1e-12)
    np.testing.assert_allclose(sample.H_from_Y, -1.0, atol=1e-12)


@pytest.mark.parametrize("name, params", [
    ("sphere", ()), ("ellipsoid", (1.0, 1.5, 2.0)), ("catenoid", ()),
    ("clifford-torus-projected", ()), ("torus-of-revolution", (2.0, 1.0)),
])
def test_identity_residuals(name, params, rng):
    chart = zoo(name, params)
    d = chart.domain
    u = rng.uniform(*d.u_range, 100) if d.periodic[0] else rng.uniform(-3.0, 3.0, 100)
    v = rng.uniform(*d.v_range, 100)
    res = identity_residuals(chart, u, v, order=4)
    for key in ("norm", "h_from_y", "orthogonality", "pullback", "closed_form_gradient"):
        assert getattr(res, key) <= 1e-8, key
    if chart.conformal:
        assert res.conformality <= 1e-8
        assert res.second_conformality <= 1e-8
    else:
        assert res.conformality is None
    assert res.points == 100


def test_jet_gradient_matches_closed_form(rng):
    chart = zoo("ellipsoid", (1.0, 1.0, 2.0))
    u, v = _points(rng, 32)
    sample = cgm_r3(chart, u, v, 4)
    jet_u, jet_v = (values(d) for d in grad_cgm(sample))
    closed_u, closed_v = grad_cgm_closed_form(sample.shape)
    np.testing.assert_allclose(jet_u, closed_u, atol=1e-10)
    np.testing.assert_allclose(jet_v, closed_v, atol=1e-10)


def test_cgm_needs_second_order():
    with pytest.raises(JetOrderError):
        cgm_r3(zoo("sphere"), 0.0, 0.0, 1)


def test_lorentz_correspondence(rng):
    """Y(Θ∘Φ) = M_Θ·Y(Φ)."""
    chart = zoo("ellipsoid", (1.0, 1.0, 2.0))
    u, v = _points(rng, 16, t=2.0)
    y = cgm_r3(chart, u, v, 2).values
    for _ in range(5):
        theta_map = random_conformal_map(rng, avoid_radius=2.5)
        moved = cgm_r3(apply_conformal(theta_map, chart), u, v, 2).values
        predicted = matrix_apply(lorentz_from_conformal(theta_map), y)
        np.testing.assert_allclose(moved, predicted, rtol=1e-6, atol=1e-6)


@pytest.mark.parametrize("name", list(S3_ZOO))
def test_s3_and_r3_models_agree(name, rng):
    chart = s3_zoo(name)
    u = rng.uniform(-2.0, 2.0, 32) if not chart.domain.periodic[0] else rng.uniform(0.0, 2.0 * math.pi, 32)
    v = rng.uniform(0.0, 2.0 * math.pi, 32)
    assert model_deviation(chart, u, v) <= 1e-8
    np.testing.assert_allclose(eta_norm2(cgm_s3(chart, u, v, 3).values), 1.0, atol=1e-10)


def test_latitude_sphere_mean_curvature(rng):
    chart = s3_zoo("latitude-sphere", (0.5,))
    u, v = _points(rng, 16, t=2.0)
    sample = cgm_s3(chart, u, v, 3)
    np.testing.assert_allclose(np.abs(sample.Y[4].value), chart.mean_curvature, rtol=1e-10)


def test_singular_s3_chart_is_a_numerical_error():
    x, _ = Jet2.coordinates(np.array([0.1, 0.7]), np.array([0.0, 0.3]), 3)
    zero = Jet2.constant(np.zeros(2), 3)
    with pytest.raises(DegenerateMetricError) as exc:
        s3_shape((x.cos(), x.sin(), zero, zero))
    assert isinstance(exc.value, NumericalError)
    assert exc.value.exit_code == 3
    assert exc.value.context["det_g"] == 0.0


def test_unknown_s3_surface():
    with pytest.raises(UnknownSurfaceError):
        s3_zoo("hopf-torus")


def test_stereographic_projection(rng):
    x = rng.normal(size=(3, 50))
    omega = np.asarray(stereographic_inverse(x))
    np.testing.assert_allclose(np.sum(omega ** 2, axis=0), 1.0, rtol=1e-14)
    np.testing.assert_allclose(np.asarray(stereographic(omega)), x, rtol=1e-12, atol=1e-12)
    assert float(conformal_factor(np.zeros(3))) == 4.0
    with pytest.raises(NorthPoleError):
        stereographic(np.array([0.0, 0.0, 0.0, 1.0]))


def test_oscillation_of_point_cloud():
    y = np.zeros((5, 3))
    y[0] = [0.0, 3.0, 1.0]
    y[4] = [0.0, 4.0, 0.0]
    osc = oscillation(y)
    assert osc.diameter == pytest.approx(5.0)
    assert osc.envelope >= osc.diameter
    assert oscillation(np.ones((5, 4))).diameter == 0.0


def test_oscillation_grows_toward_branch_point(inverted_catenoid):
    sweep = oscillation_sweep(inverted_catenoid, 2.0 ** -3, [4, 6, 8])
    diameters = [osc.diameter for _, osc in sweep]
    assert diameters[-1] > diameters[0]
    assert [s for s, _ in sweep] == [2.0 ** -4, 2.0 ** -6, 2.0 ** -8]


def test_light_like_ratio_is_bounded(clifford, rng):
    u, v = rng.uniform(0.0, 2.0 * math.pi, (2, 20))
    ratio = light_like_ratio(clifford, u, v)
    assert np.all(ratio >= 0.0)
    assert np.all(np.isfinite(ratio))
