"""Holomorphicity of the quartic, its vanishing on inverted minimal surfaces, pole orders."""
from typing import Optional

import numpy as np

from willmore_lab.schemas import CheckResult
from willmore_lab.services.geometry_kernel import sample_points
from willmore_lab.services.quartic_analysis import (
    POLE_FIT_RADII,
    VACUOUS_LEVEL,
    HolomorphicityScan,
    dzbar_q_finite_difference,
    holomorphicity_scan,
    pole_order_fit,
    quartic_table,
    rescaling_defect,
    scaling_estimate,
)
from willmore_lab.services.report_writer import QUARTIC_TABLE, quartic_rows
from willmore_lab.services.surface_catalog import ImmersionChart
from willmore_lab.suites import SuiteContext, SuiteRouter

router = SuiteRouter(tags=["quartic"])

DEFAULT_SURFACES = ("clifford-torus-projected", "inverted-catenoid", "inverted-enneper")

HOLOMORPHIC_LIMIT = 1e-8
INVERTED_RESIDUAL_LIMIT = 1e-6
CONSTANT_Q_LIMIT = 1e-6
CLIFFORD_Q = 1.0 / 16.0
DIAGONAL_RADII = (0.5, 0.25, 0.125)


def _table_radii(ctx: SuiteContext, chart: ImmersionChart):
    if chart.punctures:
        return ctx.radii(POLE_FIT_RADII[:4])
    return ctx.radii(DIAGONAL_RADII)


def _closed_surface_checks(ctx: SuiteContext, result, chart: ImmersionChart, scan) -> None:
    ctx.check(result, CheckResult.at_most("holomorphicity", scan.max_residual, HOLOMORPHIC_LIMIT,
                                          detail=f"{scan.measure} measure"))
    if chart.label == "clifford-torus-projected":
        q = scan.sample.q
        result.values["q_mean"] = [float(np.mean(q).real), float(np.mean(q).imag)]
        ctx.check(result, CheckResult.at_most("q_constant", scan.q_variation, CONSTANT_Q_LIMIT))
        ctx.check(result, CheckResult.within("q_value", float(np.mean(q).real), CLIFFORD_Q, 1e-8))
    u0, v0 = chart.domain.center
    fd = dzbar_q_finite_difference(chart, u0 + 0.3, v0 + 0.2)
    result.values["finite_difference"] = {"jet": fd.jet, "fd": fd.finite_difference,
                                          "error": fd.error, "budget": fd.budget}
    ctx.check(result, CheckResult.at_most("dzbar_q_vs_fd", fd.error, fd.budget))
    u, v = sample_points(chart, (8, 8), 1e-1)
    defect = rescaling_defect(chart, u, v)
    result.values["rescaling_defect"] = defect
    ctx.check(result, CheckResult.at_most("rescaling_law", defect, HOLOMORPHIC_LIMIT))


def _puncture_checks(ctx: SuiteContext, result, chart: ImmersionChart,
                     scan: Optional[HolomorphicityScan]) -> None:
    precision = ctx.config.precision
    fit = pole_order_fit(chart, ctx.radii(POLE_FIT_RADII), precision=precision)
    result.values["pole_fit"] = {
        "status": fit.status, "radii": list(fit.radii), "sup_q": list(fit.sup_q),
        "sup_q_normalized": list(fit.sup_q_normalized), "trimmed": fit.trimmed,
        "fit": fit.fit.as_dict() if fit.fit is not None else None,
    }
    scaling = scaling_estimate(chart, ctx.radii(POLE_FIT_RADII), precision=precision)
    result.values["scaling"] = scaling.as_dict()
    if chart.willmore and scan is not None:
        ctx.check(result, CheckResult.at_most("quartic_vanishes", scan.max_q_normalized, VACUOUS_LEVEL,
                                              detail="inversions of minimal surfaces have q = 0"))
        ctx.check(result, CheckResult.at_most("holomorphicity", scan.max_residual, INVERTED_RESIDUAL_LIMIT,
                                              detail=f"{scan.measure} measure"))
        ctx.check(result, CheckResult.at_most("conformality", scan.max_conformality, HOLOMORPHIC_LIMIT))
        ctx.check(result, CheckResult.flag("pole_order_vacuous", fit.vacuous, detail=fit.status))
        ctx.check(result, CheckResult.flag("scaling", scaling.passed, detail=scaling.verdict))


@router.suite("quartic")
def quartic(ctx: SuiteContext) -> None:
    """∂z̄q on a grid, q ≡ 0 on inverted minimal surfaces, pole-order fits at punctures."""
    counts = ctx.grid((48, 32))
    for chart in ctx.surfaces(DEFAULT_SURFACES):
        result = ctx.result(chart)
        table = quartic_table(chart, _table_radii(ctx, chart))
        result.tables[QUARTIC_TABLE] = quartic_rows(table)
        if not chart.conformal:
            # q is defined through a conformal coordinate; other charts only report values.
            result.values["conformal"] = False
            if chart.punctures:
                _puncture_checks(ctx, result, chart, None)
            continue
        scan = holomorphicity_scan(chart, counts, order=max(ctx.config.jet_order, 5), dtype=ctx.dtype)
        result.values.update({
            "max_normalized_residual": scan.max_normalized,
            "max_relative_residual": scan.max_relative,
            "holomorphicity_measure": scan.measure,
            "max_q_normalized": scan.max_q_normalized,
            "q_variation": scan.q_variation,
            "max_conformality": scan.max_conformality,
            "points": scan.points,
        })
        if chart.punctures:
            _puncture_checks(ctx, result, chart, scan)
        elif chart.willmore:
            _closed_surface_checks(ctx, result, chart, scan)
