"""Conformal-Gauss-map identities, model equality and the Lorentz correspondence."""
import logging
from typing import Tuple

import numpy as np

from willmore_lab.schemas import CheckResult
from willmore_lab.services.conformal_gauss import (
    S3_ZOO,
    cgm_r3,
    cgm_s3,
    conformal_factor,
    grad_cgm,
    grad_cgm_s3_closed_form,
    identity_residuals,
    model_deviation,
    s3_shape,
    stereographic,
    stereographic_inverse,
)
from willmore_lab.services.geometry_kernel import gauss_map_residual, sample_points, shape_at
from willmore_lab.services.jet_engine import values
from willmore_lab.services.minkowski import eta_norm2, lorentz_from_conformal, matrix_apply
from willmore_lab.services.surface_catalog import (
    ZOO_SURFACES,
    ImmersionChart,
    apply_conformal,
    random_conformal_map,
    zoo,
)
from willmore_lab.suites import SuiteContext, SuiteRouter

logger = logging.getLogger(__name__)

router = SuiteRouter(tags=["identities"])

POINTS = 500
IDENTITY_TOLERANCE = 1e-8
LORENTZ_TOLERANCE = 1e-6
LORENTZ_MAPS = 30
CYLINDER_REACH = 6.0


def interior_sample(chart, count: int, rng: np.random.Generator,
                    reach: float = CYLINDER_REACH) -> Tuple[np.ndarray, np.ndarray]:
    """``count`` random points, away from punctures and within ``reach`` of the
    center along non-periodic axes (cylinder ends carry exponentially small metrics)."""
    domain = chart.domain
    us, vs, have = [], [], 0
    while have < count:
        u, v = sample_points(chart, (count, 4), 1e-2, rng)
        keep = np.ones(u.shape, dtype=bool)
        if not domain.periodic[0]:
            keep &= np.abs(u - domain.center[0]) <= reach
        if not domain.periodic[1]:
            keep &= np.abs(v - domain.center[1]) <= reach
        us.append(u[keep])
        vs.append(v[keep])
        have += int(np.count_nonzero(keep))
    return np.concatenate(us)[:count], np.concatenate(vs)[:count]


def lorentz_correspondence(chart: ImmersionChart, rng: np.random.Generator, maps: int = LORENTZ_MAPS,
                           points: int = 64, avoid_radius: float = 2.5) -> float:
    """max over random Θ of |Y(Θ∘Φ) - M_Θ·Y(Φ)| / max(1, |Y(Θ∘Φ)|)."""
    u, v = interior_sample(chart, points, rng)
    y = cgm_r3(chart, u, v, 2).values
    worst = 0.0
    for _ in range(maps):
        theta_map = random_conformal_map(rng, avoid_radius)
        moved = cgm_r3(apply_conformal(theta_map, chart), u, v, 2).values
        predicted = matrix_apply(lorentz_from_conformal(theta_map), y)
        scale = np.maximum(1.0, np.sqrt(np.sum(moved ** 2, axis=0)))
        worst = max(worst, float(np.max(np.sqrt(np.sum((moved - predicted) ** 2, axis=0)) / scale)))
    return worst


def _chart_identities(ctx: SuiteContext, chart: ImmersionChart) -> None:
    result = ctx.result(chart)
    u, v = interior_sample(chart, POINTS, ctx.rng)
    order = max(ctx.config.jet_order, 4)
    res = identity_residuals(chart, u, v, order, ctx.dtype)
    result.values["residuals"] = res.as_dict()
    result.values["points"] = res.points
    names = ["norm", "h_from_y", "orthogonality", "pullback", "closed_form_gradient"]
    if chart.conformal:
        names += ["conformality", "second_conformality"]
    for name in names:
        ctx.check(result, CheckResult.at_most(name, getattr(res, name), IDENTITY_TOLERANCE))
    gauss = float(np.max(gauss_map_residual(shape_at(chart, u, v, 2, ctx.dtype))))
    result.values["gauss_map"] = gauss
    ctx.check(result, CheckResult.at_most("gauss_map", gauss, IDENTITY_TOLERANCE))


def _s3_models(ctx: SuiteContext) -> None:
    result = ctx.result(surface="s3-zoo")
    for name, (build, defaults) in S3_ZOO.items():
        chart = build(defaults)
        u = ctx.rng.uniform(-3.0, 3.0, 64) if not chart.domain.periodic[0] else \
            ctx.rng.uniform(*chart.domain.u_range, 64)
        v = ctx.rng.uniform(*chart.domain.v_range, 64)
        deviation = model_deviation(chart, u, v)
        result.values[f"{name}.model_deviation"] = deviation
        ctx.check(result, CheckResult.at_most(f"{name}.model_equality", deviation, IDENTITY_TOLERANCE))

        sample = cgm_s3(chart, u, v, 3)
        norm = float(np.max(np.abs(eta_norm2(sample.values) - 1.0)))
        ctx.check(result, CheckResult.at_most(f"{name}.norm", norm, IDENTITY_TOLERANCE))

        jet_u, jet_v = (values(d) for d in grad_cgm(sample))
        closed_u, closed_v = grad_cgm_s3_closed_form(s3_shape(chart.evaluate(u, v, 3), chart.orientation))
        scale = max(1.0, float(np.max(np.abs(jet_u))), float(np.max(np.abs(jet_v))))
        gap = max(float(np.max(np.abs(jet_u - closed_u))), float(np.max(np.abs(jet_v - closed_v)))) / scale
        ctx.check(result, CheckResult.at_most(f"{name}.closed_form_gradient", gap, IDENTITY_TOLERANCE))

    x = ctx.rng.normal(size=(3, 256))
    round_trip = float(np.max(np.abs(np.asarray(stereographic(stereographic_inverse(x))) - x)))
    ctx.check(result, CheckResult.at_most("stereographic_round_trip", round_trip, 1e-12))
    ctx.check(result, CheckResult.within("conformal_factor_origin",
                                         float(conformal_factor(np.zeros(3))), 4.0, 1e-15))


@router.suite("identities")
def identities(ctx: SuiteContext) -> None:
    """|Y|²_η = 1, H = Y₅ - Y₄, conformality and the pullback metric on random points;
    R³/S³ model equality; Y(Θ∘Φ) = M_Θ·Y(Φ)."""
    charts = ctx.surfaces(ZOO_SURFACES)
    for chart in charts:
        _chart_identities(ctx, chart)
    if ctx.explicit_surface:
        return
    _s3_models(ctx)
    result = ctx.result(surface="lorentz-correspondence")
    worst = lorentz_correspondence(zoo("ellipsoid", (1.0, 1.0, 2.0)), ctx.rng)
    result.values["maps"] = LORENTZ_MAPS
    ctx.check(result, CheckResult.at_most("ellipsoid", worst, LORENTZ_TOLERANCE))
