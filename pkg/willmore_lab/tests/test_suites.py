import math

import numpy as np
import pytest

from willmore_lab.exceptions import ConfigError
from willmore_lab.schemas import CheckResult, GridSpec, RadiiSpec, SuiteConfig, SurfaceSpec
from willmore_lab.services.geometry_kernel import BumpField
from willmore_lab.suites import SuiteContext, SuiteRouter
from willmore_lab.suites.branch import declared_image_order, dilation_gauge, strictly_decreasing
from willmore_lab.suites.identities import interior_sample
from willmore_lab.suites.willmore import linearity_pairings


def _ctx(**kwargs):
    return SuiteContext(SuiteConfig(suite="energies", **kwargs), request_id="test")


def test_router_registration():
    router = SuiteRouter(tags=["demo"])

    @router.suite("energies")
    def run(ctx):
        """Docstring becomes the description."""

    assert router.get("energies").description == "Docstring becomes the description."
    with pytest.raises(ConfigError):
        router.suite("energies")(run)
    other = SuiteRouter()
    other.include_router(router)
    assert other.names() == ["energies"]
    with pytest.raises(ConfigError):
        other.include_router(router)
    with pytest.raises(ConfigError):
        other.get("quartic")


def test_context_defaults_and_overrides():
    ctx = _ctx()
    assert [c.label for c in ctx.surfaces(("sphere", ("ellipsoid", (1.0, 1.0, 2.0))))] == [
        "sphere", "ellipsoid(1,1,2)"]
    assert ctx.grid((64, 32)) == (64, 32)
    assert ctx.radii((0.1, 0.01)) == [0.1, 0.01]
    assert not ctx.explicit_surface
    assert ctx.dtype is np.float64

    ctx = _ctx(surface=SurfaceSpec.parse("catenoid"), grid=GridSpec.parse("16x8"),
               radii=RadiiSpec.parse("0.5:0.5:2"), precision="extended")
    assert [c.label for c in ctx.surfaces(("sphere",))] == ["catenoid"]
    assert ctx.grid((64, 32)) == (16, 8)
    assert ctx.radii((0.1,)) == [0.5, 0.25]
    assert ctx.dtype is np.longdouble


def test_context_collects_results_and_checks():
    ctx = _ctx()
    result = ctx.result(surface="scratch")
    ctx.check(result, CheckResult.at_most("small", 1e-12, 1e-8))
    assert ctx.results == [result]
    assert result.passed


def test_dsl_surface_from_context(tmp_path):
    path = tmp_path / "cylinder.wl"
    path.write_text("(cos(p), sin(p), t)\n", encoding="utf-8")
    (chart,) = _ctx(surface=SurfaceSpec(dsl_file=str(path))).surfaces(("sphere",))
    assert chart.point(0.5, 0.0) == pytest.approx([1.0, 0.0, 0.5])


def test_interior_sample_stays_near_center(inverted_catenoid, rng):
    u, v = interior_sample(inverted_catenoid, 50, rng)
    assert len(u) == 50
    assert np.all(np.abs(u) <= 6.0)


def test_declared_image_order(inverted_catenoid, inverted_enneper):
    assert declared_image_order(inverted_catenoid, inverted_catenoid.punctures[0]) == 1
    assert declared_image_order(inverted_enneper, inverted_enneper.punctures[0]) == 2


def test_dilation_gauge_fixes_its_center():
    gauge = dilation_gauge((0.0, 0.0, 0.0), 0.1)
    assert gauge.is_lorentz()
    y = gauge.apply(np.array([0.0, 0.0, 0.0, -1.0, 1.0]))
    assert y[4] + y[3] == pytest.approx(0.0)


def test_monotone_helpers():
    assert strictly_decreasing([3.0, 2.0, 1.0])
    assert not strictly_decreasing([3.0, 3.0, 1.0])
    assert not strictly_decreasing([1.0, math.nan])


def test_linearity_pairings_share_one_support(sphere):
    bump = BumpField(center=(0.5, math.pi), half_width=(0.5, 1.0))
    p1, p2, p12 = linearity_pairings(sphere, bump, (32, 32))
    assert p12 == pytest.approx(p1 + 2.0 * p2, rel=1e-9, abs=1e-10)
