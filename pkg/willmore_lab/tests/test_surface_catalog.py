import math

import numpy as np
import pytest

from willmore_lab.exceptions import (
    DomainRangeError,
    InvalidParameterError,
    PunctureProximityError,
    UnknownSurfaceError,
)
from willmore_lab.services.surface_catalog import (
    ZOO_SURFACES,
    ConformalMap3,
    Dilation,
    Inversion,
    Puncture,
    Translation,
    apply_conformal,
    blowup_sequence,
    immersion_check,
    mark_interior_point,
    random_conformal_map,
    rescale_chart,
    zoo,
)


@pytest.mark.parametrize("name", ZOO_SURFACES)
def test_zoo_charts_are_immersions(name):
    check = immersion_check(zoo(name))
    assert check.passed
    assert check.samples > 0


def test_sphere_points_lie_on_unit_sphere(sphere, rng):
    u = rng.uniform(-5.0, 5.0, 200)
    v = rng.uniform(0.0, 2.0 * math.pi, 200)
    np.testing.assert_allclose(np.linalg.norm(sphere.point(u, v), axis=0), 1.0, rtol=1e-14)
    np.testing.assert_allclose(sphere.point(0.0, 0.0), [1.0, 0.0, 0.0], atol=1e-15)


def test_unknown_surface():
    with pytest.raises(UnknownSurfaceError):
        zoo("trefoil")


@pytest.mark.parametrize("name, params", [
    ("ellipsoid", (1.0, 2.0)),
    ("ellipsoid", (1.0, -1.0, 2.0)),
    ("torus-of-revolution", (1.0, 2.0)),
    ("inverted-enneper", (3.0,)),
    ("sphere", (1.0,)),
])
def test_invalid_parameters(name, params):
    with pytest.raises(InvalidParameterError):
        zoo(name, params)


def test_inversion_turns_ends_into_branch_points(inverted_catenoid, inverted_enneper):
    for p in inverted_catenoid.punctures:
        assert p.image == pytest.approx((0.0, 0.0, 0.0))
        assert p.theta == 0
    (end,) = inverted_enneper.punctures
    assert end.theta == 2
    assert end.image == pytest.approx((0.0, 0.0, 0.0))


def test_inversion_maps_infinity_to_center():
    inv = Inversion((1.0, 0.0, 0.0))
    assert inv.map_point(None) == (1.0, 0.0, 0.0)
    assert inv.map_point((1.0, 0.0, 0.0)) is None
    assert inv.map_point((3.0, 0.0, 0.0)) == pytest.approx((1.5, 0.0, 0.0))


def test_conformal_maps_apply_left_to_right():
    theta_map = ConformalMap3.of(Translation((1.0, 0.0, 0.0)), Dilation(2.0))
    assert theta_map.map_point((0.0, 0.0, 0.0)) == pytest.approx((2.0, 0.0, 0.0))
    assert theta_map.label == "dilation∘translation"
    with pytest.raises(InvalidParameterError):
        Dilation(0.0)


def test_apply_conformal_moves_points(sphere, rng):
    theta_map = random_conformal_map(rng, avoid_radius=2.0)
    moved = apply_conformal(theta_map, sphere)
    u, v = np.array([0.3, -1.0]), np.array([1.0, 4.0])
    original = sphere.point(u, v)
    for k in range(2):
        expected = theta_map.map_point(tuple(original[:, k]))
        np.testing.assert_allclose(moved.point(u[k], v[k]), expected, rtol=1e-12)


def test_random_map_keeps_inversion_center_away(rng):
    for _ in range(20):
        theta_map = random_conformal_map(rng, avoid_radius=3.0)
        (inversion,) = [f for f in theta_map.factors if isinstance(f, Inversion)]
        assert np.linalg.norm(inversion.center) >= 4.5


def test_puncture_validation_and_geometry():
    with pytest.raises(InvalidParameterError):
        Puncture()
    with pytest.raises(InvalidParameterError):
        Puncture(side="x")
    end = Puncture(side="+")
    assert end.shell(0.01, 0.1) == pytest.approx((-math.log(0.1), -math.log(0.01)))
    t, phi = end.circle(0.5, np.array([0.0, 7.0]))
    np.testing.assert_allclose(t, math.log(2.0))
    np.testing.assert_allclose(phi, [0.0, 7.0 - 2.0 * math.pi])
    with pytest.raises(DomainRangeError):
        Puncture(center=(0.0, 0.0)).shell(0.1, 0.2)


def test_evaluation_inside_exclusion_radius_is_refused(inverted_catenoid):
    with pytest.raises(PunctureProximityError):
        inverted_catenoid.point(14.0, 0.0)


def test_rescaled_chart_is_a_reparametrization(clifford):
    scaled = rescale_chart(clifford, 2.0)
    np.testing.assert_allclose(scaled.point(1.0, 3.0), clifford.point(0.5, 1.5), rtol=1e-14)
    assert scaled.domain.u_range == pytest.approx((0.0, 4.0 * math.pi))
    with pytest.raises(InvalidParameterError):
        rescale_chart(clifford, -1.0)


def test_blowup_sequence_zooms_into_the_end(inverted_enneper):
    charts = blowup_sequence(inverted_enneper, [0.1, 0.01])
    s, psi = 0.4, 1.0
    np.testing.assert_allclose(charts[1].point(s, psi),
                               inverted_enneper.point(s - math.log(0.01), 2.0 * math.pi - psi), rtol=1e-13)
    assert charts[0].orientation == -inverted_enneper.orientation
    with pytest.raises(DomainRangeError):
        blowup_sequence(inverted_enneper, [1e-6])


def test_mark_interior_point(sphere):
    marked = mark_interior_point(sphere, 0.0, 0.0)
    (marker,) = marked.punctures
    assert marker.image == pytest.approx((1.0, 0.0, 0.0))
    assert marker.theta == 0
