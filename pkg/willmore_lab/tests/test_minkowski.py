import numpy as np
import pytest

from willmore_lab.exceptions import InvalidParameterError
from willmore_lab.services.jet_engine import Jet2
from willmore_lab.services.minkowski import (
    LorentzMatrix,
    causal_type,
    eta_inner,
    eta_norm2,
    light_cone_point,
    lorentz_dilation,
    lorentz_from_conformal,
    lorentz_inversion,
    lorentz_translation,
    matrix_apply,
)
from willmore_lab.services.surface_catalog import random_conformal_map


def _same_ray(a, b):
    """a and b span the same line through the origin."""
    a, b = np.asarray(a), np.asarray(b)
    return np.allclose(a / a[4], b / b[4], rtol=1e-10, atol=1e-12)


def test_light_cone_points_are_null(rng):
    for x in rng.normal(size=(10, 3)):
        assert causal_type(light_cone_point(x)) == "null"
    assert causal_type(np.array([1.0, 0, 0, 0, 0])) == "spacelike"
    assert causal_type(np.array([0, 0, 0, 0, 1.0])) == "timelike"


def test_factor_matrices_preserve_eta():
    for m in (lorentz_translation((0.3, -1.0, 2.0)), lorentz_dilation(3.0),
              lorentz_inversion((1.0, 2.0, 0.5)), LorentzMatrix.boost(0.7)):
        assert m.is_lorentz()
        np.testing.assert_allclose((m @ m.inverse()).matrix, np.eye(5), atol=1e-12)


def test_translation_moves_null_points():
    x = np.array([0.2, 0.4, -1.0])
    v = np.array([1.0, -2.0, 0.5])
    np.testing.assert_allclose(lorentz_translation(v).apply(light_cone_point(x)), light_cone_point(x + v),
                               atol=1e-14)


def test_dilation_rescales_null_direction():
    y = matrix_apply(lorentz_dilation(4.0), np.array([0.0, 0.0, 0.0, -1.0, 1.0]))
    np.testing.assert_allclose(y, [0.0, 0.0, 0.0, -0.25, 0.25], atol=1e-15)


def test_conformal_maps_act_on_the_light_cone(rng):
    """M_Θ·(x, (|x|²-1)/2, (|x|²+1)/2) spans the ray of Θ(x)."""
    for _ in range(10):
        theta_map = random_conformal_map(rng, avoid_radius=2.0)
        m = lorentz_from_conformal(theta_map)
        assert m.is_lorentz()
        x = rng.uniform(-0.5, 0.5, size=3)
        assert _same_ray(m.apply(light_cone_point(x)), light_cone_point(theta_map.map_point(tuple(x))))


def test_matrix_apply_on_jets():
    u, v = Jet2.coordinates(np.array([0.1, 0.2]), np.array([0.0, 1.0]), 2)
    y = (u, v, u * v, u + 1.0, v * 2.0)
    moved = matrix_apply(LorentzMatrix.boost(0.3), y)
    np.testing.assert_allclose(eta_norm2(moved).coeffs, eta_norm2(y).coeffs, atol=1e-13)


def test_eta_inner_rejects_wrong_length():
    with pytest.raises(InvalidParameterError):
        eta_inner(np.zeros(4), np.zeros(5))
    with pytest.raises(InvalidParameterError):
        LorentzMatrix(np.eye(4))
    with pytest.raises(InvalidParameterError):
        lorentz_dilation(-1.0)
