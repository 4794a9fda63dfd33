"""Simon's monotonicity inequality on balls about a surface point."""
import math
from typing import List, Sequence, Tuple

import numpy as np

from willmore_lab.schemas import CheckResult
from willmore_lab.services.geometry_kernel import MonotonicityProbe, monotonicity_sweep
from willmore_lab.services.surface_catalog import ImmersionChart, zoo
from willmore_lab.suites import SuiteContext, SuiteRouter

router = SuiteRouter(tags=["monotonicity"])

# (surface, ball centre, outer radii). The sphere is probed at a pole, where the
# chart's parameter lines run radially through every ball.
DEFAULT_PROBES: Tuple[Tuple[str, Tuple[float, float, float], Sequence[float]], ...] = (
    ("sphere", (0.0, 0.0, 1.0), tuple(np.linspace(0.2, 1.9, 10))),
    ("inverted-catenoid", (0.0, 0.0, 0.0), tuple(np.linspace(0.1, 1.0, 10))),
)
INNER_FRACTIONS = tuple(np.linspace(0.05, 0.95, 10))
CAP_TOLERANCE = 1e-4


def _probe_center(chart: ImmersionChart) -> Tuple[float, float, float]:
    """A branch image when the chart has one, otherwise Φ at the domain centre."""
    image = next((p.image for p in chart.punctures if p.image is not None), None)
    if image is not None:
        return tuple(float(x) for x in image)
    u0, v0 = chart.domain.center
    return tuple(float(x) for x in chart.point(u0, v0))


def _probes(ctx: SuiteContext) -> List[Tuple[ImmersionChart, Tuple[float, float, float], Sequence[float]]]:
    if not ctx.explicit_surface:
        return [(zoo(name), x0, radii) for name, x0, radii in DEFAULT_PROBES]
    return [(chart, _probe_center(chart), tuple(np.linspace(0.1, 1.0, 10))) for chart in ctx.surfaces(())]


@router.suite("monotonicity")
def monotonicity(ctx: SuiteContext) -> None:
    """T⁻²A_T - t⁻²A_t against the H² and flux terms for 0 < t < T; caps of the unit sphere have area πr²."""
    counts = ctx.grid((256, 128))
    for chart, x0, outer in _probes(ctx):
        result = ctx.result(chart)
        probe = MonotonicityProbe(chart, x0, counts, ctx.dtype)
        reports = monotonicity_sweep(probe, outer, INNER_FRACTIONS)
        result.values["x0"] = list(x0)
        result.values["pairs"] = [
            {"t": r.t, "T": r.T, "lhs": r.lhs, "rhs": r.rhs, "tolerance": r.tolerance, "holds": r.holds}
            for r in reports
        ]
        failed = [r for r in reports if not r.holds]
        worst = min(reports, key=lambda r: r.lhs - r.rhs + r.tolerance)
        ctx.check(result, CheckResult.flag(
            "inequality", not failed,
            detail=f"{len(failed)} of {len(reports)} pairs fail; worst t={worst.t:.3g} T={worst.T:.3g}",
        ))
        if chart.label == "sphere" and np.allclose(np.linalg.norm(x0), 1.0):
            radii = sorted({r.t for r in reports} | {r.T for r in reports})
            errors = [abs(probe.ball(r).area - math.pi * r * r) / (math.pi * r * r) for r in radii]
            result.values["cap_area_error"] = max(errors)
            ctx.check(result, CheckResult.at_most("cap_area", max(errors), CAP_TOLERANCE,
                                                  detail="Area(S² ∩ B(x0, r)) = πr²"))
