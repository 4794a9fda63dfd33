"""Branch-point diagnostics: exponents, energy decay, oscillation of Y and the blow-up limit."""
import math
from typing import List, Optional

import numpy as np

from willmore_lab.schemas import CheckResult
from willmore_lab.services.conformal_gauss import cgm_r3, light_like_ratio, oscillation_sweep
from willmore_lab.services.geometry_kernel import MonotonicityProbe, dyadic_annulus_energies
from willmore_lab.services.minkowski import LorentzMatrix, lorentz_from_conformal
from willmore_lab.services.quartic_analysis import (
    BRANCH_RADII,
    branch_exponents,
    scaling_estimate,
    synthetic_scaling_control,
)
from willmore_lab.services.surface_catalog import (
    ConformalMap3,
    Dilation,
    ImmersionChart,
    Puncture,
    Translation,
    blowup_sequence,
)
from willmore_lab.suites import SuiteContext, SuiteRouter

router = SuiteRouter(tags=["branch"])

DEFAULT_SURFACES = ("inverted-catenoid", "inverted-enneper")

THETA_TOLERANCE = 0.05
DYADIC_LEVELS = tuple(range(4, 13))
DECAY_FACTOR = 1e-3
OSCILLATION_OUTER = 2.0 ** -3
OSCILLATION_LEVELS = tuple(range(4, 18))
OSCILLATION_GROWTH = 10.0
GAUGE_SCALE = 0.1
BLOWUP_RADII = tuple(2.0 ** -k for k in range(4, 9))
DENSITY_RADII = (0.05, 0.02)
DENSITY_TOLERANCE = 0.1


def declared_image_order(chart: ImmersionChart, puncture: Puncture) -> Optional[int]:
    """Σ(1 + θ_i) - 1 over the punctures sharing ``puncture``'s image."""
    if puncture.image is None:
        return None
    shared = [p for p in chart.punctures
              if p.image is not None and np.allclose(p.image, puncture.image, atol=1e-9)]
    if any(p.theta is None for p in shared):
        return None
    return sum(1 + p.theta for p in shared) - 1


def dilation_gauge(center, scale: float = GAUGE_SCALE) -> LorentzMatrix:
    """Y of the surface shrunk by ``scale`` about ``center``; magnifies the null direction of the branch image."""
    c = tuple(float(x) for x in center)
    return lorentz_from_conformal(ConformalMap3.of(
        Translation(tuple(-x for x in c)), Dilation(scale), Translation(c)))


def strictly_decreasing(values: List[float]) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))


def strictly_increasing(values: List[float]) -> bool:
    return all(b > a for a, b in zip(values, values[1:]))


def _exponent_checks(ctx: SuiteContext, result, chart: ImmersionChart, primary: Puncture) -> None:
    report = branch_exponents(chart, ctx.radii(BRANCH_RADII), ctx.config.precision)
    result.values["punctures"] = [
        {"label": e.label, "theta_declared": e.theta_declared, "theta_from_phi": e.theta_from_phi,
         "theta_from_gradient": e.theta_from_gradient, "alpha": e.alpha, "gamma": e.gamma,
         "h_fit": e.h_fit.as_dict() if e.h_fit is not None else None}
        for e in report.punctures
    ]
    result.values["image_groups"] = [
        {"image": list(g.image), "punctures": list(g.punctures), "image_order": g.image_order,
         "fitted_order": g.fitted_order}
        for g in report.groups
    ]
    for e in report.punctures:
        if e.theta_declared is not None:
            ctx.check(result, CheckResult.within(f"theta[{e.label}]", e.theta, float(e.theta_declared),
                                                 THETA_TOLERANCE))
    expected = declared_image_order(chart, primary)
    result.values["theta"] = report.theta
    result.values["fitted_theta"] = report.fitted_theta
    if expected is not None:
        ctx.check(result, CheckResult.within("branch_order", report.fitted_theta, float(expected),
                                             THETA_TOLERANCE, detail=f"rounded order {report.theta:g}"))
    ctx.check(result, CheckResult.flag("theta_fits_consistent", report.consistent))


def _decay_checks(ctx: SuiteContext, result, chart: ImmersionChart) -> None:
    dyadic = dyadic_annulus_energies(chart, DYADIC_LEVELS)
    result.values["dyadic_energies"] = dyadic
    ctx.check(result, CheckResult.flag("dyadic_decreasing", strictly_decreasing(dyadic)))
    ctx.check(result, CheckResult.at_most("dyadic_decay", dyadic[-1], DECAY_FACTOR * dyadic[0]))


def _oscillation_checks(ctx: SuiteContext, result, chart: ImmersionChart, primary: Puncture) -> None:
    gauge = dilation_gauge(primary.image) if primary.image is not None else None
    sweep = oscillation_sweep(chart, OSCILLATION_OUTER, OSCILLATION_LEVELS, primary, m=gauge)
    diameters = [osc.diameter for _, osc in sweep]
    result.values["oscillation"] = {"inner_radii": [s for s, _ in sweep], "diameter": diameters,
                                    "envelope": [osc.envelope for _, osc in sweep],
                                    "gauge_scale": GAUGE_SCALE if gauge is not None else None}
    ctx.check(result, CheckResult.flag("oscillation_increasing", strictly_increasing(diameters)))
    ctx.check(result, CheckResult.at_least("oscillation_growth", diameters[-1] / diameters[0], OSCILLATION_GROWTH))


def _scaling_checks(ctx: SuiteContext, result, chart: ImmersionChart) -> None:
    table = scaling_estimate(chart, precision=ctx.config.precision)
    control = synthetic_scaling_control()
    result.values["scaling"] = table.as_dict()
    result.values["scaling_control"] = control.as_dict()
    if chart.willmore:
        ctx.check(result, CheckResult.flag("scaling", table.passed, detail=table.verdict))
    ctx.check(result, CheckResult.flag("scaling_control_fails", not control.passed, detail=control.verdict))


def _blowup_checks(ctx: SuiteContext, result, chart: ImmersionChart) -> None:
    charts = blowup_sequence(chart, BLOWUP_RADII)
    s = np.linspace(0.1, 0.6, 6)
    psi = np.linspace(0.0, 2.0 * math.pi, 24, endpoint=False)
    u, v = (a.ravel() for a in np.meshgrid(s, psi, indexing="ij"))
    ratios = [float(np.max(light_like_ratio(c, u, v))) for c in charts]
    result.values["light_like_ratio"] = {"radii": list(BLOWUP_RADII), "ratio": ratios}
    ctx.check(result, CheckResult.flag("light_like_limit", strictly_decreasing(ratios)))

    # The first blow-up chart samples Φ at t = s - log r with the angle reflected.
    y_blow = cgm_r3(charts[0], u, v, 2).values
    y_base = cgm_r3(chart, u - math.log(BLOWUP_RADII[0]), np.mod(-v, 2.0 * math.pi), 2).values
    scale = max(1.0, float(np.max(np.abs(y_base))))
    ctx.check(result, CheckResult.at_most("blowup_gauss_map", float(np.max(np.abs(y_blow - y_base))) / scale,
                                          1e-10))


def _density_checks(ctx: SuiteContext, result, chart: ImmersionChart, primary: Puncture) -> None:
    expected = declared_image_order(chart, primary)
    probe = MonotonicityProbe(chart, primary.image)
    densities = [probe.area_density(T) for T in DENSITY_RADII]
    result.values["area_density"] = {"radii": list(DENSITY_RADII), "density": densities}
    if expected is not None:
        for T, density in zip(DENSITY_RADII, densities):
            ctx.check(result, CheckResult.within(f"area_density[{T:g}]", density, float(expected + 1),
                                                 DENSITY_TOLERANCE, relative=True))


@router.suite("branch")
def branch(ctx: SuiteContext) -> None:
    """θ and α fits, dyadic energy decay, oscillation growth, scaling of q and the blow-up limit."""
    for chart in ctx.surfaces(DEFAULT_SURFACES):
        result = ctx.result(chart)
        primary = next((p for p in chart.punctures if p.side == "+"), None)
        if primary is None:
            result.values["punctures"] = []
            ctx.check(result, CheckResult.flag("has_puncture", False, detail="no '+' cylinder-end puncture"))
            continue
        _exponent_checks(ctx, result, chart, primary)
        _decay_checks(ctx, result, chart)
        _oscillation_checks(ctx, result, chart, primary)
        if chart.conformal:
            _scaling_checks(ctx, result, chart)
            _blowup_checks(ctx, result, chart)
        if primary.image is not None:
            _density_checks(ctx, result, chart, primary)
