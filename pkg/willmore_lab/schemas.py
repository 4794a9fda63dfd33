import json
import math
import re
from typing import Any, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from willmore_lab import __version__

SCHEMA_VERSION = "willmore-lab/1"
SUITE_NAMES = ("identities", "energies", "willmore", "quartic", "branch", "monotonicity")

_SURFACE_CALL = re.compile(r"^\s*([A-Za-z][\w-]*)\s*(?:\((.*)\)|:(.*))?\s*$")
_GRID = re.compile(r"^\s*(\d+)\s*[xX×]\s*(\d+)\s*$")


# Configuration schemas

class SurfaceSpec(BaseModel):
    name: Optional[str] = None
    params: List[float] = []
    dsl_file: Optional[str] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.name is None) == (self.dsl_file is None):
            raise ValueError("a surface is either a zoo name or a DSL file")
        return self

    @classmethod
    def parse(cls, text: str) -> "SurfaceSpec":
        """'name', 'name(a,b)' or 'name:a,b'."""
        match = _SURFACE_CALL.match(text)
        if not match:
            raise ValueError(f"cannot read surface {text!r}")
        name, inner = match.group(1), match.group(2) if match.group(2) is not None else match.group(3)
        params = [float(p) for p in inner.split(",") if p.strip()] if inner else []
        return cls(name=name, params=params)

    @property
    def label(self) -> str:
        if self.dsl_file is not None:
            return self.dsl_file
        return self.name + (f"({','.join(f'{p:g}' for p in self.params)})" if self.params else "")


class GridSpec(BaseModel):
    nu: int = Field(..., ge=8, description="Points along the first coordinate")
    nv: int = Field(..., ge=8, description="Points along the second coordinate")

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        match = _GRID.match(text)
        if not match:
            raise ValueError(f"grid must look like AxB, got {text!r}")
        return cls(nu=int(match.group(1)), nv=int(match.group(2)))

    @property
    def counts(self):
        return self.nu, self.nv

    def __str__(self) -> str:
        return f"{self.nu}x{self.nv}"


class RadiiSpec(BaseModel):
    r0: float = Field(..., gt=0, le=1)
    ratio: float = Field(..., gt=0, lt=1)
    count: int = Field(..., ge=2, le=64)

    @classmethod
    def parse(cls, text: str) -> "RadiiSpec":
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"radii must look like r0:ratio:count, got {text!r}")
        return cls(r0=float(parts[0]), ratio=float(parts[1]), count=int(parts[2]))

    def values(self) -> List[float]:
        return [self.r0 * self.ratio ** k for k in range(self.count)]


class SuiteConfig(BaseModel):
    suite: str
    surface: Optional[SurfaceSpec] = None
    grid: Optional[GridSpec] = None
    jet_order: int = Field(5, ge=2, le=6)
    precision: Literal["double", "extended"] = "double"
    radii: Optional[RadiiSpec] = None
    out: Optional[str] = None
    csv: Optional[str] = None
    levels: Optional[int] = Field(None, description="Refinement levels of a convergence table")
    seed: int = 0

    model_config = ConfigDict(str_strip_whitespace=True)

    @field_validator("suite")
    @classmethod
    def _known_suite(cls, value: str) -> str:
        if value not in SUITE_NAMES:
            raise ValueError(f"unknown suite {value!r}; choose from {', '.join(SUITE_NAMES)}")
        return value

    @field_validator("levels")
    @classmethod
    def _enough_levels(cls, value: Optional[int]) -> Optional[int]:
        if value is not None and value < 3:
            raise ValueError("a convergence table needs at least 3 refinement levels")
        return value

    def echo(self) -> Dict[str, Any]:
        data = self.model_dump(exclude={"out", "csv"})
        data["surface"] = self.surface.label if self.surface else None
        data["grid"] = str(self.grid) if self.grid else None
        data["radii"] = self.radii.values() if self.radii else None
        return data


# Report schemas

class CheckResult(BaseModel):
    name: str
    passed: bool
    value: Optional[float] = None
    expected: Optional[float] = None
    tolerance: Optional[float] = None
    comparison: Literal["within", "at_most", "at_least", "flag"] = "flag"
    detail: Optional[str] = None

    @classmethod
    def within(cls, name: str, value: float, expected: float, tolerance: float,
               relative: bool = False, detail: Optional[str] = None) -> "CheckResult":
        """|value - expected| <= tolerance (times |expected| when relative)."""
        bound = tolerance * abs(expected) if relative else tolerance
        ok = math.isfinite(value) and abs(value - expected) <= bound
        return cls(name=name, passed=ok, value=value, expected=expected, tolerance=bound,
                   comparison="within", detail=detail)

    @classmethod
    def at_most(cls, name: str, value: float, bound: float, detail: Optional[str] = None) -> "CheckResult":
        ok = math.isfinite(value) and value <= bound
        return cls(name=name, passed=ok, value=value, tolerance=bound, comparison="at_most", detail=detail)

    @classmethod
    def at_least(cls, name: str, value: float, bound: float, detail: Optional[str] = None) -> "CheckResult":
        ok = math.isfinite(value) and value >= bound
        return cls(name=name, passed=ok, value=value, tolerance=bound, comparison="at_least", detail=detail)

    @classmethod
    def flag(cls, name: str, passed: bool, detail: Optional[str] = None) -> "CheckResult":
        return cls(name=name, passed=bool(passed), comparison="flag", detail=detail)


class SuiteResult(BaseModel):
    suite: str
    surface: Optional[str] = None
    checks: List[CheckResult] = []
    values: Dict[str, Any] = {}
    tables: Dict[str, List[Dict[str, Any]]] = {}
    error: Optional[Dict[str, Any]] = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(c.passed for c in self.checks)

    def add(self, check: CheckResult) -> CheckResult:
        self.checks.append(check)
        return check


class ConvergenceRow(BaseModel):
    quantity: str
    grids: List[str]
    values: List[float]
    differences: List[Optional[float]]
    observed_order: Optional[float] = None
    reference: Optional[float] = None


class Report(BaseModel):
    schema_version: str = Field(SCHEMA_VERSION, alias="schema")
    version: str = __version__
    config: Dict[str, Any]
    results: List[SuiteResult] = []
    convergence: Optional[List[ConvergenceRow]] = None
    timings: Dict[str, float] = {}
    exit_code: int = 0

    model_config = ConfigDict(populate_by_name=True)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def checks(self) -> List[CheckResult]:
        return [c for r in self.results for c in r.checks]

    def canonical_json(self) -> str:
        """Deterministic JSON: sorted keys, no timings, non-finite numbers as null."""
        data = self.model_dump(by_alias=True, exclude={"timings"})
        return json.dumps(_clean(data), sort_keys=True, indent=2, ensure_ascii=False)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, (complex, np.complexfloating)):
        return [_clean(obj.real), _clean(obj.imag)]
    return obj
