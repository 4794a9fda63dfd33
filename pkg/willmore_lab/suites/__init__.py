"""Suite registry and the per-run context handed to every suite.

Suites register on a ``SuiteRouter`` the way endpoints register on a web router;
the runner includes each module's router and dispatches by name.
"""
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from willmore_lab.exceptions import ConfigError
from willmore_lab.schemas import CheckResult, SuiteConfig, SuiteResult
from willmore_lab.services.immersion_dsl import load_dsl_file
from willmore_lab.services.quartic_analysis import precision_dtype
from willmore_lab.services.surface_catalog import ImmersionChart, zoo
from willmore_lab.utils.logger import lab_logger

SurfaceDefault = Union[str, Tuple[str, Sequence[float]]]
SuiteHandler = Callable[["SuiteContext"], None]


@dataclass(frozen=True)
class SuiteRoute:
    name: str
    handler: SuiteHandler
    description: str = ""


class SuiteRouter:
    def __init__(self, tags: Optional[List[str]] = None):
        self.tags = tags or []
        self.routes: Dict[str, SuiteRoute] = {}

    def suite(self, name: str, description: str = ""):
        def decorator(fn: SuiteHandler) -> SuiteHandler:
            if name in self.routes:
                raise ConfigError(f"Suite {name!r} registered twice")
            self.routes[name] = SuiteRoute(name, fn, description or (fn.__doc__ or "").strip())
            return fn
        return decorator

    def include_router(self, other: "SuiteRouter") -> None:
        for name, route in other.routes.items():
            if name in self.routes:
                raise ConfigError(f"Suite {name!r} registered twice")
            self.routes[name] = route

    def get(self, name: str) -> SuiteRoute:
        try:
            return self.routes[name]
        except KeyError:
            raise ConfigError(f"Unknown suite {name!r}; registered: {', '.join(sorted(self.routes))}")

    def names(self) -> List[str]:
        return sorted(self.routes)


@dataclass
class SuiteContext:
    config: SuiteConfig
    request_id: str
    results: List[SuiteResult] = field(default_factory=list)

    def __post_init__(self):
        self.rng = np.random.default_rng(self.config.seed)

    @property
    def dtype(self):
        return precision_dtype(self.config.precision)

    def surfaces(self, defaults: Sequence[SurfaceDefault]) -> List[ImmersionChart]:
        """The configured surface, or the suite's default list when none was given."""
        spec = self.config.surface
        if spec is None:
            return [zoo(d) if isinstance(d, str) else zoo(d[0], d[1]) for d in defaults]
        if spec.dsl_file is not None:
            return [load_dsl_file(spec.dsl_file)]
        return [zoo(spec.name, spec.params)]

    @property
    def explicit_surface(self) -> bool:
        return self.config.surface is not None

    def grid(self, default: Tuple[int, int]) -> Tuple[int, int]:
        return self.config.grid.counts if self.config.grid is not None else default

    def radii(self, default: Sequence[float]) -> List[float]:
        return self.config.radii.values() if self.config.radii is not None else list(default)

    def result(self, chart: Optional[ImmersionChart] = None, surface: Optional[str] = None) -> SuiteResult:
        result = SuiteResult(suite=self.config.suite, surface=chart.label if chart is not None else surface)
        self.results.append(result)
        return result

    def check(self, result: SuiteResult, check: CheckResult) -> CheckResult:
        result.add(check)
        lab_logger.log_check_result(
            suite=self.config.suite,
            check=f"{result.surface}:{check.name}" if result.surface else check.name,
            passed=check.passed,
            value=check.value,
            tolerance=check.tolerance,
            request_id=self.request_id,
        )
        return check
