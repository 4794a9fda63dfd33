"""Strong and weak forms of the Willmore equation."""
import math
from dataclasses import replace

from willmore_lab.schemas import CheckResult
from willmore_lab.services.geometry_kernel import (
    BumpField,
    PunctureBumpField,
    SumField,
    first_variation_fd,
    weak_form_report,
    willmore_scan,
)
from willmore_lab.services.quartic_analysis import puncture_exponents
from willmore_lab.services.surface_catalog import ImmersionChart
from willmore_lab.suites import SuiteContext, SuiteRouter

router = SuiteRouter(tags=["willmore"])

DEFAULT_SURFACES = ("inverted-catenoid", "inverted-enneper", ("ellipsoid", (1.0, 1.0, 2.0)))

RESIDUAL_LIMIT = 1e-6
NON_WILLMORE_FLOOR = 1e-2
PAIRING_LIMIT = 1e-4
FD_TOLERANCE = 1e-2
LINEARITY_LIMIT = 1e-9
CHECKED_FORMS = ("conservation", "covariant", "strong")


def _test_fields(chart: ImmersionChart):
    d = chart.domain
    u0 = 0.5 if d.u_range[0] < 0.0 < 1.0 < d.u_range[1] else d.center[0]
    fields = {"interior": BumpField(center=(u0, math.pi), half_width=(0.5, 1.0))}
    if any(p.side == "+" and p.image is not None for p in chart.punctures):
        fields["across_puncture"] = PunctureBumpField(rho=0.5)
    return fields


def linearity_pairings(chart: ImmersionChart, bump: BumpField, counts, dtype=None, first=None):
    """Pairings of w₁, w₂ and w₁ + 2w₂ on one support, with w₂ the bump lifted along e₃."""
    lifted = replace(bump, direction=(0.0, 0.0, 1.0))
    combined = SumField((bump, lifted), (1.0, 2.0))
    p1 = first if first is not None else weak_form_report(chart, bump, counts, dtype).value
    p2 = weak_form_report(chart, lifted, counts, dtype).value
    p12 = weak_form_report(chart, combined, counts, dtype).value
    return p1, p2, p12


def has_residue(chart: ImmersionChart) -> bool:
    """A logarithmic mean curvature at the '+' puncture carries a Dirac residue in δW."""
    puncture = next(p for p in chart.punctures if p.side == "+")
    h_fit = puncture_exponents(chart, puncture).h_fit
    return h_fit is not None and h_fit.status == "log"


@router.suite("willmore")
def willmore(ctx: SuiteContext) -> None:
    """Δ_gH + |Å|²H away from punctures, and δW(Φ)·w for bumps including one across a puncture."""
    counts = ctx.grid((64, 64))
    for chart in ctx.surfaces(DEFAULT_SURFACES):
        result = ctx.result(chart)
        scan = willmore_scan(chart, order=max(ctx.config.jet_order, 4), dtype=ctx.dtype)
        result.values["max_normalized_residual"] = scan.max_normalized
        result.values["max_raw_residual"] = scan.max_raw
        if chart.willmore:
            ctx.check(result, CheckResult.at_most("residual", scan.max_normalized, RESIDUAL_LIMIT))
        elif chart.willmore is False:
            ctx.check(result, CheckResult.at_least("residual_detects", scan.max_normalized, NON_WILLMORE_FLOOR))

        fields = _test_fields(chart)
        residue = "across_puncture" in fields and chart.willmore and has_residue(chart)
        if residue:
            result.values["across_puncture.residue_expected"] = True
        reports = {}
        for name, field_ in fields.items():
            report = weak_form_report(chart, field_, counts, ctx.dtype)
            reports[name] = report
            result.values[f"{name}.forms"] = report.forms
            result.values[f"{name}.c2_norm"] = report.c2_norm
            result.values[f"{name}.default_form"] = report.default_form
            if chart.willmore and not (residue and name == "across_puncture"):
                for form in CHECKED_FORMS:
                    if form == "conservation" and not chart.conformal:
                        continue
                    ctx.check(result, CheckResult.at_most(f"{name}.{form}", abs(report.forms[form]),
                                                          PAIRING_LIMIT * report.c2_norm))
            elif chart.willmore is False:
                oracle = first_variation_fd(chart, field_, counts, dtype=ctx.dtype)
                result.values[f"{name}.finite_difference"] = oracle
                for form in ("covariant", "strong") + (("conservation",) if chart.conformal else ()):
                    ctx.check(result, CheckResult.within(f"{name}.{form}_vs_fd", report.forms[form], oracle,
                                                         FD_TOLERANCE, relative=True))
                result.values[f"{name}.literal_discrepancy"] = report.forms["literal"] - oracle

        p1, p2, p12 = linearity_pairings(chart, fields["interior"], counts, ctx.dtype, reports["interior"].value)
        result.values["linearity"] = {"w1": p1, "w2": p2, "w1_plus_2w2": p12}
        scale = max(abs(p1) + 2.0 * abs(p2), 1.0)
        ctx.check(result, CheckResult.within("linearity", p12, p1 + 2.0 * p2, LINEARITY_LIMIT * scale))
