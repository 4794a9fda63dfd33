import json
import math

import numpy as np
import pytest
from pydantic import ValidationError

from willmore_lab.schemas import (
    SCHEMA_VERSION,
    CheckResult,
    GridSpec,
    RadiiSpec,
    Report,
    SuiteConfig,
    SuiteResult,
    SurfaceSpec,
)


@pytest.mark.parametrize("text, name, params", [
    ("sphere", "sphere", []),
    ("ellipsoid(1, 1.5, 2)", "ellipsoid", [1.0, 1.5, 2.0]),
    ("inverted-enneper:2", "inverted-enneper", [2.0]),
])
def test_surface_spec_parse(text, name, params):
    spec = SurfaceSpec.parse(text)
    assert spec.name == name
    assert spec.params == params


def test_surface_spec_needs_exactly_one_source():
    with pytest.raises(ValidationError):
        SurfaceSpec()
    with pytest.raises(ValidationError):
        SurfaceSpec(name="sphere", dsl_file="x.wl")
    assert SurfaceSpec(dsl_file="x.wl").label == "x.wl"
    assert SurfaceSpec.parse("ellipsoid(1,2,3)").label == "ellipsoid(1,2,3)"


def test_grid_and_radii_specs():
    assert GridSpec.parse("64x32").counts == (64, 32)
    assert str(GridSpec.parse("16 × 16")) == "16x16"
    with pytest.raises(ValueError):
        GridSpec.parse("64")
    with pytest.raises(ValidationError):
        GridSpec.parse("4x4")
    assert RadiiSpec.parse("0.5:0.5:3").values() == [0.5, 0.25, 0.125]
    with pytest.raises(ValidationError):
        RadiiSpec.parse("0.5:2:3")


def test_suite_config_validation():
    cfg = SuiteConfig(suite="energies", surface=SurfaceSpec.parse("sphere"), grid=GridSpec.parse("32x16"))
    assert cfg.jet_order == 5
    echo = cfg.echo()
    assert echo["surface"] == "sphere"
    assert echo["grid"] == "32x16"
    assert "out" not in echo
    with pytest.raises(ValidationError):
        SuiteConfig(suite="everything")
    with pytest.raises(ValidationError):
        SuiteConfig(suite="energies", levels=2)
    with pytest.raises(ValidationError):
        SuiteConfig(suite="energies", jet_order=9)
    with pytest.raises(ValidationError):
        SuiteConfig(suite="energies", precision="quad")


def test_check_result_comparisons():
    assert CheckResult.within("w", 1.0005, 1.0, 1e-3, relative=True).passed
    assert not CheckResult.within("w", math.nan, 1.0, 1.0).passed
    assert CheckResult.at_most("m", 1e-9, 1e-8).passed
    assert not CheckResult.at_least("l", 1e-3, 1e-2).passed
    assert CheckResult.flag("f", np.bool_(True)).passed


def test_suite_result_passes_only_without_error():
    result = SuiteResult(suite="energies")
    result.add(CheckResult.flag("ok", True))
    assert result.passed
    result.error = {"type": "OverflowGuardError"}
    assert not result.passed


def test_canonical_json_is_deterministic():
    result = SuiteResult(suite="quartic", surface="clifford-torus-projected",
                         values={"b": math.inf, "a": np.float64(0.5), "q": complex(1.0, -2.0),
                                 "arr": np.array([1.0, math.nan])})
    report = Report(config={"suite": "quartic"}, results=[result], timings={"total": 1.0})
    text = report.canonical_json()
    assert text == report.canonical_json()
    data = json.loads(text)
    assert data["schema"] == SCHEMA_VERSION
    assert "timings" not in data
    values = data["results"][0]["values"]
    assert values["b"] is None
    assert values["q"] == [1.0, -2.0]
    assert values["arr"] == [1.0, None]
    assert list(values) == sorted(values)
