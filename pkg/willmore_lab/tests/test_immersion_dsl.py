import math

import numpy as np
import pytest

from willmore_lab.exceptions import ArityError, ConfigError, DslSyntaxError, UnboundVariableError
from willmore_lab.services.immersion_dsl import (
    chart_from_source,
    component_functions,
    load_dsl_file,
    parse_domain,
    parse_immersion,
)
from willmore_lab.services.surface_catalog import zoo

CATENOID = "(cosh(t)*cos(p), cosh(t)*sin(p), t)"


def test_dsl_catenoid_matches_zoo(rng):
    chart = chart_from_source(CATENOID, domain=zoo("catenoid").domain)
    u = rng.uniform(-2.0, 2.0, 50)
    v = rng.uniform(0.0, 2.0 * math.pi, 50)
    np.testing.assert_allclose(chart.point(u, v), zoo("catenoid").point(u, v), rtol=1e-14)
    jets = chart.evaluate(u, v, 3)
    np.testing.assert_allclose(jets[2].partial(1, 0), 1.0)


def test_aliases_constants_and_powers():
    chart = chart_from_source("(x^2, sin(phi) + pi, exp(-y)/2)")
    np.testing.assert_allclose(chart.point(0.5, 1.0), [0.25, math.sin(1.0) + math.pi, math.exp(-1.0) / 2])


def test_negative_integer_power():
    chart = chart_from_source("(t, p, (t + 2)^-2)")
    assert chart.point(0.0, 0.0)[2] == pytest.approx(0.25)


def test_two_argument_atan():
    chart = chart_from_source("(t, p, atan(p, t + 2))")
    assert chart.point(0.0, 1.0)[2] == pytest.approx(math.atan2(1.0, 2.0))


def test_directives_configure_chart():
    src = "# domain: flat-torus\n# conformal: yes\n(cos(t), sin(t), p)\n"
    chart = chart_from_source(src)
    assert chart.domain.kind == "flat-torus"
    assert chart.conformal


def test_syntax_error_reports_position():
    with pytest.raises(DslSyntaxError) as exc:
        parse_immersion("(t, p, * t)")
    assert exc.value.line == 1
    assert exc.value.column > 0


def test_unbound_variable():
    with pytest.raises(UnboundVariableError):
        parse_immersion("(t, p, q)")
    with pytest.raises(UnboundVariableError):
        parse_immersion("(t, p, tan(t))")


@pytest.mark.parametrize("src", ["(t, p)", "t + p", "(t, p, sin(t, p))", "(t, (p, p), t)"])
def test_arity_errors(src):
    with pytest.raises((ArityError, DslSyntaxError)):
        parse_immersion(src)


def test_component_functions_print_canonically():
    components = component_functions(CATENOID)
    assert len(components) == 3
    assert components[2] == "t"


@pytest.mark.parametrize("src", [
    CATENOID,
    "(x^2, sin(phi) + pi, exp(-y)/2)",
    "(t - p - 1.5e-3, (t + 2)^-2, atan(p, t + 2))",
    "(-t, --p, sqrt(cosh(t)) * log(2 + sin(p)) / 3)",
])
def test_printed_ast_parses_back_to_itself(src):
    ast = parse_immersion(src)
    assert parse_immersion(str(ast)) == ast


def test_parse_domain():
    assert parse_domain("cylinder -2 3").u_range == (-2.0, 3.0)
    assert parse_domain("punctured-disk").kind == "punctured-disk"
    with pytest.raises(ConfigError):
        parse_domain("annulus 1 2")


def test_load_dsl_file(tmp_path):
    path = tmp_path / "catenoid.wl"
    path.write_text("# domain: cylinder -3 3\n" + CATENOID + "\n", encoding="utf-8")
    chart = load_dsl_file(path)
    assert chart.label == "catenoid"
    assert chart.domain.u_range == (-3.0, 3.0)
    with pytest.raises(ConfigError):
        load_dsl_file(tmp_path / "missing.wl")
