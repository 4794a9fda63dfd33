"""Runs named suites and convergence studies, producing a Report."""
import logging
import math
import os
import time
import uuid
from typing import List, Optional, Sequence, Tuple

import logfire

from willmore_lab.exceptions import LabError, NumericalError
from willmore_lab.schemas import CheckResult, ConvergenceRow, Report, SuiteConfig, SuiteResult
from willmore_lab.services.geometry_kernel import energies
from willmore_lab.suites import SuiteContext, SuiteRouter
from willmore_lab.suites import branch, energies as energy_suite, identities, monotonicity, quartic, willmore
from willmore_lab.utils.logger import lab_logger

logger = logging.getLogger(__name__)

logfire.configure(token=os.getenv('LOGFIRE_API_KEY'), send_to_logfire='if-token-present', console=False)

REGISTRY = SuiteRouter()
for _module in (identities, energy_suite, willmore, quartic, branch, monotonicity):
    REGISTRY.include_router(_module.router)

CONVERGENCE_BASE = (32, 16)
CONVERGENCE_SURFACES = ("sphere", "inverted-catenoid")
CONVERGENCE_QUANTITIES = ("W", "E", "area")
CONVERGED_LEVEL = 1e-13
MIN_ORDER = 2.0
DEFAULT_LEVELS = 3


def _summary(results: Sequence[SuiteResult]) -> Tuple[int, int]:
    checks = [c for r in results for c in r.checks]
    return sum(c.passed for c in checks), len(checks)


def _numerical_abort(ctx: SuiteContext, error: NumericalError, stage: str) -> None:
    lab_logger.log_error(
        error_type=type(error).__name__,
        error_message=error.message,
        context=error.context,
        suite=ctx.config.suite,
        request_id=ctx.request_id,
    )
    partial = ctx.result(surface=stage)
    partial.error = {"type": type(error).__name__, "message": error.message, "context": error.context}


def _finish(ctx: SuiteContext, report: Report, start_time: float, aborted: bool) -> Report:
    report.timings["total_seconds"] = time.time() - start_time
    if aborted:
        report.exit_code = NumericalError.exit_code
    else:
        report.exit_code = 0 if report.passed else 1
    passed, total = _summary(report.results)
    lab_logger.log_suite_completed(
        suite=ctx.config.suite,
        checks_passed=passed,
        checks_total=total,
        total_time=report.timings["total_seconds"],
        request_id=ctx.request_id,
    )
    return report


def _start(cfg: SuiteConfig) -> Tuple[SuiteContext, float]:
    request_id = str(uuid.uuid4())
    lab_logger.log_suite_started(
        suite=cfg.suite,
        surface=cfg.surface.label if cfg.surface else "default",
        grid=str(cfg.grid) if cfg.grid else "default",
        jet_order=cfg.jet_order,
        precision=cfg.precision,
        request_id=request_id,
    )
    return SuiteContext(cfg, request_id), time.time()


def run_suite(cfg: SuiteConfig) -> Report:
    """Run one registered suite. Numerical aborts keep the partial results and set exit code 3;
    configuration errors propagate to the caller."""
    route = REGISTRY.get(cfg.suite)
    ctx, start_time = _start(cfg)
    report = Report(config=cfg.echo(), results=ctx.results)
    aborted = False
    try:
        with logfire.span('suite {suite}', suite=cfg.suite, request_id=ctx.request_id):
            route.handler(ctx)
    except NumericalError as e:
        _numerical_abort(ctx, e, stage=cfg.suite)
        aborted = True
    except LabError:
        raise
    except Exception as e:
        lab_logger.log_error(type(e).__name__, str(e), suite=cfg.suite, request_id=ctx.request_id)
        raise
    report.results = ctx.results
    return _finish(ctx, report, start_time, aborted)


def observed_orders(values: Sequence[float]) -> Tuple[List[Optional[float]], Optional[float], bool]:
    """Successive differences, the order log2(d_{k-1}/d_k) of the last pair, and whether
    the sequence already sits at rounding level."""
    diffs: List[Optional[float]] = [None] + [abs(b - a) for a, b in zip(values, values[1:])]
    scale = max(abs(v) for v in values) or 1.0
    converged = diffs[-1] <= CONVERGED_LEVEL * scale
    order = None
    if not converged and diffs[-2] is not None and diffs[-2] > 0 and diffs[-1] > 0:
        order = math.log2(diffs[-2] / diffs[-1])
    return diffs, order, converged


def convergence_table(cfg: SuiteConfig, levels: Optional[int] = None) -> Report:
    """W, E and area on grids base·2^k, k < levels, with the observed order of each quantity."""
    levels = levels or cfg.levels or DEFAULT_LEVELS
    # Revalidates the level count the same way the CLI does.
    cfg = SuiteConfig(**{**cfg.model_dump(), "levels": levels})
    base = cfg.grid.counts if cfg.grid is not None else CONVERGENCE_BASE
    grids = [(base[0] * 2 ** k, base[1] * 2 ** k) for k in range(levels)]
    logger.debug("Convergence grids: %s", grids)
    ctx, start_time = _start(cfg)
    report = Report(config=cfg.echo(), results=ctx.results, convergence=[])
    aborted = False
    try:
        for chart in ctx.surfaces(CONVERGENCE_SURFACES):
            result = ctx.result(surface=f"convergence:{chart.label}")
            runs = []
            for counts in grids:
                with logfire.span('convergence level {grid}', grid=f"{counts[0]}x{counts[1]}",
                                  surface=chart.label, request_id=ctx.request_id):
                    runs.append(energies(chart, counts, ctx.dtype))
            for quantity in CONVERGENCE_QUANTITIES:
                series = [getattr(run, quantity) for run in runs]
                diffs, order, converged = observed_orders(series)
                report.convergence.append(ConvergenceRow(
                    quantity=f"{quantity}[{chart.label}]",
                    grids=[f"{u}x{v}" for u, v in grids],
                    values=series,
                    differences=diffs,
                    observed_order=order,
                    reference=series[-1],
                ))
                if converged:
                    ctx.check(result, CheckResult.flag(f"{quantity}.order", True, detail="converged to rounding"))
                else:
                    ctx.check(result, CheckResult.at_least(f"{quantity}.order",
                                                           order if order is not None else float("nan"), MIN_ORDER))
    except NumericalError as e:
        _numerical_abort(ctx, e, stage="convergence")
        aborted = True
    report.results = ctx.results
    return _finish(ctx, report, start_time, aborted)
