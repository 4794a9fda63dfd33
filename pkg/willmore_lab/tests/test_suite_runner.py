import pytest
from pydantic import ValidationError

from willmore_lab.exceptions import DegenerateMetricError, UnknownSurfaceError
from willmore_lab.schemas import CheckResult, GridSpec, SuiteConfig, SurfaceSpec
from willmore_lab.services.suite_runner import REGISTRY, convergence_table, observed_orders, run_suite
from willmore_lab.suites import SuiteRoute


def test_registry_knows_every_suite():
    assert REGISTRY.names() == sorted(["identities", "energies", "willmore", "quartic", "branch", "monotonicity"])


def test_energies_on_sphere_pass():
    report = run_suite(SuiteConfig(suite="energies", surface=SurfaceSpec.parse("sphere")))
    assert report.exit_code == 0
    (result,) = report.results
    names = {c.name for c in result.checks}
    assert {"W", "E", "gauss_bonnet", "total_A_split", "energy_gap"} <= names
    assert report.config["surface"] == "sphere"
    assert report.timings["total_seconds"] >= 0.0


def test_identities_on_one_surface():
    report = run_suite(SuiteConfig(suite="identities", surface=SurfaceSpec.parse("sphere")))
    assert report.exit_code == 0
    assert report.results[0].surface == "sphere"


def _patch(monkeypatch, handler):
    monkeypatch.setitem(REGISTRY.routes, "energies", SuiteRoute("energies", handler))


def test_failed_check_sets_exit_code_one(monkeypatch):
    def handler(ctx):
        ctx.check(ctx.result(surface="fake"), CheckResult.at_most("too_big", 1.0, 0.5))

    _patch(monkeypatch, handler)
    assert run_suite(SuiteConfig(suite="energies")).exit_code == 1


def test_numerical_abort_keeps_partial_report(monkeypatch):
    def handler(ctx):
        ctx.check(ctx.result(surface="first"), CheckResult.flag("fine", True))
        raise DegenerateMetricError("Degenerate metric: det g = 0", {"det_g": 0.0})

    _patch(monkeypatch, handler)
    report = run_suite(SuiteConfig(suite="energies"))
    assert report.exit_code == 3
    first, partial = report.results
    assert first.passed
    assert partial.error["type"] == "DegenerateMetricError"
    assert partial.error["context"] == {"det_g": 0.0}


def test_configuration_errors_propagate(monkeypatch):
    def handler(ctx):
        ctx.surfaces(("no-such-surface",))

    _patch(monkeypatch, handler)
    with pytest.raises(UnknownSurfaceError):
        run_suite(SuiteConfig(suite="energies"))


def test_observed_orders():
    diffs, order, converged = observed_orders([1.0, 1.25, 1.3125])
    assert diffs == [None, 0.25, 0.0625]
    assert order == pytest.approx(2.0)
    assert not converged
    _, order, converged = observed_orders([2.0, 2.0, 2.0])
    assert converged
    assert order is None


def test_convergence_table_needs_three_levels():
    with pytest.raises(ValidationError):
        convergence_table(SuiteConfig(suite="energies"), levels=2)


def test_convergence_table_rows():
    cfg = SuiteConfig(suite="energies", surface=SurfaceSpec.parse("sphere"), grid=GridSpec.parse("16x8"))
    report = convergence_table(cfg, levels=3)
    assert [row.quantity for row in report.convergence] == ["W[sphere]", "E[sphere]", "area[sphere]"]
    assert report.convergence[0].grids == ["16x8", "32x16", "64x32"]
    assert report.config["levels"] == 3
    assert report.exit_code in (0, 1)
