"""Analytic immersions, their parameter domains, and Möbius maps of R³ acting on them.

Charts are immutable. An evaluator receives the two coordinate jets of a batch of
points and returns the three component jets of Φ, so reparametrizations and
compositions are expressed by composing evaluators in jet arithmetic.

Orientation: n = orientation · (Φ_u × Φ_v) / |Φ_u × Φ_v|. The zoo charts are set
up so that closed surfaces get the outward normal, which makes H = -1 on the unit
sphere.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from willmore_lab.config import get_settings
from willmore_lab.exceptions import (
    DomainRangeError,
    InvalidParameterError,
    InversionCollisionError,
    PunctureProximityError,
    UnknownSurfaceError,
)
from willmore_lab.services.jet_engine import Jet2, cross3, dot, values

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
CYLINDER_T_MAX = 12.0
# The parameter disk |z| < e^-6 of Enneper holds about 16π e^-12 of |Å|² energy;
# nearer the origin its curvature jets run out of double precision.
ENNEPER_T_MIN = -6.0

Point3 = Tuple[float, float, float]
Vec3 = Tuple[Jet2, Jet2, Jet2]
Evaluator = Callable[[Jet2, Jet2], Sequence]


# Domains and punctures

@dataclass(frozen=True)
class Domain2:
    kind: str
    u_range: Tuple[float, float]
    v_range: Tuple[float, float]
    periodic: Tuple[bool, bool]

    @classmethod
    def rectangle(cls, a: float, b: float, c: float, d: float) -> "Domain2":
        if not (a < b and c < d):
            raise InvalidParameterError(f"Rectangle [{a}, {b}] x [{c}, {d}] is empty")
        return cls("rectangle", (a, b), (c, d), (False, False))

    @classmethod
    def flat_torus(cls, period_u: float = TWO_PI, period_v: float = TWO_PI) -> "Domain2":
        return cls("flat-torus", (0.0, period_u), (0.0, period_v), (True, True))

    @classmethod
    def cylinder(cls, t_min: float = -CYLINDER_T_MAX, t_max: float = CYLINDER_T_MAX) -> "Domain2":
        if not t_min < t_max:
            raise InvalidParameterError(f"Cylinder needs t_min < t_max, got [{t_min}, {t_max}]")
        return cls("cylinder", (t_min, t_max), (0.0, TWO_PI), (False, True))

    @classmethod
    def punctured_disk(cls, t_max: float = CYLINDER_T_MAX) -> "Domain2":
        """Cylinder coordinates (t, φ) of the punctured unit disk, x = e^{-t+iφ}."""
        if t_max <= 0:
            raise InvalidParameterError(f"Punctured disk needs t_max > 0, got {t_max}")
        return cls("punctured-disk", (0.0, t_max), (0.0, TWO_PI), (False, True))

    @property
    def center(self) -> Tuple[float, float]:
        """Midpoint of the domain; on a cylinder that covers it, the unit circle t = 0."""
        u_mid = 0.5 * sum(self.u_range)
        if self.kind == "cylinder" and self.u_range[0] < 0.0 < self.u_range[1]:
            u_mid = 0.0
        return u_mid, 0.5 * sum(self.v_range)

    def radius(self, t: np.ndarray) -> np.ndarray:
        if self.kind != "punctured-disk":
            raise DomainRangeError(f"Radius is defined on punctured-disk domains, not {self.kind}")
        return np.exp(-np.asarray(t))

    def wrap(self, u: np.ndarray, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        u, v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
        if self.periodic[0]:
            u = self.u_range[0] + np.mod(u - self.u_range[0], self.u_range[1] - self.u_range[0])
        if self.periodic[1]:
            v = self.v_range[0] + np.mod(v - self.v_range[0], self.v_range[1] - self.v_range[0])
        return u, v

    def contains(self, u: np.ndarray, v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        u, v = np.asarray(u), np.asarray(v)
        ok = np.ones(np.broadcast(u, v).shape, dtype=bool)
        if not self.periodic[0]:
            ok &= (u >= self.u_range[0] - tol) & (u <= self.u_range[1] + tol)
        if not self.periodic[1]:
            ok &= (v >= self.v_range[0] - tol) & (v <= self.v_range[1] + tol)
        return ok

    def scaled(self, s: float) -> "Domain2":
        return replace(self, u_range=tuple(s * x for x in self.u_range),
                       v_range=tuple(s * x for x in self.v_range))


@dataclass(frozen=True)
class Puncture:
    """A marked singular point of a chart.

    ``side`` marks a cylinder end: "+" for t -> t_max with local radius e^{-t},
    "-" for t -> t_min with local radius e^{t}. ``center`` marks an interior
    parameter point instead. ``image`` is the limit point in R³, None for an end
    at infinity, whose winding is ``multiplicity``.
    """
    side: Optional[str] = None
    center: Optional[Tuple[float, float]] = None
    theta: Optional[int] = None
    image: Optional[Point3] = None
    multiplicity: int = 1
    label: str = ""

    def __post_init__(self):
        if (self.side is None) == (self.center is None):
            raise InvalidParameterError("A puncture is either a cylinder end or an interior point")
        if self.side is not None and self.side not in ("+", "-"):
            raise InvalidParameterError(f"Puncture side must be '+' or '-', got {self.side!r}")

    @property
    def is_end(self) -> bool:
        return self.image is None

    def local_radius(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        u, v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
        if self.side == "+":
            return np.exp(-u) + 0.0 * v
        if self.side == "-":
            return np.exp(u) + 0.0 * v
        return np.hypot(u - self.center[0], v - self.center[1])

    def circle(self, r: float, angles: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Parameter points on the circle |x| = r of the local disk coordinate."""
        angles = np.asarray(angles, dtype=float)
        if self.side == "+":
            return np.full_like(angles, -math.log(r)), np.mod(angles, TWO_PI)
        if self.side == "-":
            return np.full_like(angles, math.log(r)), np.mod(angles, TWO_PI)
        return self.center[0] + r * np.cos(angles), self.center[1] + r * np.sin(angles)

    def gradient_factor(self, r: np.ndarray) -> np.ndarray:
        """Factor turning |∇Φ| in chart coordinates into |∇Φ| in the local disk coordinate."""
        r = np.asarray(r, dtype=float)
        return 1.0 / r if self.side is not None else np.ones_like(r)

    def shell(self, r_inner: float, r_outer: float) -> Tuple[float, float]:
        """Chart interval of the first coordinate covering r_inner <= |x| <= r_outer."""
        if self.side == "+":
            return -math.log(r_outer), -math.log(r_inner)
        if self.side == "-":
            return math.log(r_inner), math.log(r_outer)
        raise DomainRangeError("Shells are defined for cylinder-end punctures")


# Charts

def _as_jet(component, like: Jet2) -> Jet2:
    if isinstance(component, Jet2):
        return component
    value = np.broadcast_to(np.asarray(component, dtype=like.dtype), like.batch_shape)
    return Jet2.constant(value, like.order, dtype=like.dtype)


@dataclass(frozen=True)
class ImmersionChart:
    label: str
    domain: Domain2
    evaluator: Evaluator = field(repr=False)
    punctures: Tuple[Puncture, ...] = ()
    orientation: int = 1
    conformal: bool = False
    willmore: Optional[bool] = None
    r_min: Optional[float] = None

    @property
    def exclusion_radius(self) -> float:
        return self.r_min if self.r_min is not None else get_settings().r_min

    def check_points(self, u: np.ndarray, v: np.ndarray) -> None:
        limit = self.exclusion_radius
        for puncture in self.punctures:
            r = puncture.local_radius(u, v)
            if np.any(r < limit):
                raise PunctureProximityError(
                    f"{self.label}: evaluation within r_min={limit:g} of puncture "
                    f"{puncture.label or puncture.side or puncture.center} (closest r={float(np.min(r)):.3g})",
                    {"r_min": limit, "r": float(np.min(r))},
                )

    def evaluate(self, u, v, order: int, dtype=None) -> Vec3:
        """Order-``order`` jets of the three components of Φ at the points (u, v)."""
        u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        self.check_points(u, v)
        U, V = Jet2.coordinates(u, v, order, dtype)
        return self.evaluate_jets(U, V)

    def evaluate_jets(self, U: Jet2, V: Jet2) -> Vec3:
        components = self.evaluator(U, V)
        if len(components) != 3:
            raise InvalidParameterError(f"{self.label}: evaluator returned {len(components)} components")
        return tuple(_as_jet(c, U) for c in components)

    def point(self, u, v) -> np.ndarray:
        """Φ(u, v) as an array of shape (3, ...)."""
        return values(self.evaluate(u, v, 0))

    def with_punctures(self, punctures: Sequence[Puncture]) -> "ImmersionChart":
        return replace(self, punctures=tuple(punctures))


@dataclass(frozen=True)
class ImmersionCheck:
    min_area_element: float
    passed: bool
    samples: int


def immersion_check(chart: ImmersionChart, samples: Tuple[int, int] = (48, 32),
                    threshold: float = 1e-12, exclusion: float = 1e-2) -> ImmersionCheck:
    """min |Φ_u × Φ_v| over a sample grid, skipping the local disks of radius ``exclusion`` at punctures."""
    domain = chart.domain
    us = np.linspace(*domain.u_range, samples[0], endpoint=not domain.periodic[0])
    vs = np.linspace(*domain.v_range, samples[1], endpoint=not domain.periodic[1])
    u, v = (a.ravel() for a in np.meshgrid(us, vs, indexing="ij"))
    keep = np.ones(u.shape, dtype=bool)
    for puncture in chart.punctures:
        keep &= puncture.local_radius(u, v) >= max(exclusion, chart.exclusion_radius)
    phi = chart.evaluate(u[keep], v[keep], 1)
    normal = cross3([c.dx() for c in phi], [c.dy() for c in phi])
    area = np.sqrt(np.sum(values(normal) ** 2, axis=0))
    min_area = float(np.min(area))
    return ImmersionCheck(min_area, bool(min_area > threshold), int(keep.sum()))


# Conformal maps of R³

@dataclass(frozen=True)
class Translation:
    vector: Point3

    def apply(self, x: Sequence) -> Tuple:
        return tuple(x[i] + self.vector[i] for i in range(3))

    def map_point(self, p: Optional[Point3]) -> Optional[Point3]:
        return None if p is None else tuple(float(p[i] + self.vector[i]) for i in range(3))


@dataclass(frozen=True)
class Dilation:
    factor: float

    def __post_init__(self):
        if not self.factor > 0:
            raise InvalidParameterError(f"Dilation factor must be positive, got {self.factor}")

    def apply(self, x: Sequence) -> Tuple:
        return tuple(self.factor * c for c in x)

    def map_point(self, p: Optional[Point3]) -> Optional[Point3]:
        return None if p is None else tuple(float(self.factor * c) for c in p)


@dataclass(frozen=True)
class Rotation:
    matrix: Tuple[Tuple[float, float, float], ...]

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (3, 3) or not np.allclose(m.T @ m, np.eye(3), atol=1e-12) \
                or np.linalg.det(m) < 0:
            raise InvalidParameterError("Rotation matrix must be a proper orthogonal 3x3 matrix")

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "Rotation":
        return cls(tuple(tuple(float(x) for x in row) for row in np.asarray(m)))

    def apply(self, x: Sequence) -> Tuple:
        m = self.matrix
        return tuple(m[i][0] * x[0] + m[i][1] * x[1] + m[i][2] * x[2] for i in range(3))

    def map_point(self, p: Optional[Point3]) -> Optional[Point3]:
        return None if p is None else tuple(float(c) for c in np.asarray(self.matrix) @ np.asarray(p))


@dataclass(frozen=True)
class Inversion:
    """x -> (x - c) / |x - c|² + c."""
    center: Point3 = (0.0, 0.0, 0.0)
    collision_tol: float = 1e-24

    def apply(self, x: Sequence) -> Tuple:
        d = tuple(x[i] - self.center[i] for i in range(3))
        r2 = dot(d, d)
        base = r2.value if isinstance(r2, Jet2) else np.asarray(r2)
        if np.any(base <= self.collision_tol):
            raise InversionCollisionError(
                f"Sample point coincides with the inversion center {self.center}",
                {"center": list(self.center)},
            )
        return tuple(d[i] / r2 + self.center[i] for i in range(3))

    def map_point(self, p: Optional[Point3]) -> Optional[Point3]:
        if p is None:
            return tuple(float(c) for c in self.center)
        d = np.asarray(p, dtype=float) - np.asarray(self.center)
        r2 = float(d @ d)
        if r2 <= self.collision_tol:
            return None
        return tuple(float(c) for c in d / r2 + np.asarray(self.center))


ConformalFactor = Union[Translation, Dilation, Rotation, Inversion]


@dataclass(frozen=True)
class ConformalMap3:
    """A composition of Möbius factors, applied left to right."""
    factors: Tuple[ConformalFactor, ...] = ()

    @classmethod
    def identity(cls) -> "ConformalMap3":
        return cls(())

    @classmethod
    def of(cls, *factors: ConformalFactor) -> "ConformalMap3":
        return cls(tuple(factors))

    def __call__(self, x: Sequence) -> Tuple:
        for factor in self.factors:
            x = factor.apply(x)
        return tuple(x)

    def map_point(self, p: Optional[Point3]) -> Optional[Point3]:
        for factor in self.factors:
            p = factor.map_point(p)
        return p

    def then(self, other: "ConformalMap3") -> "ConformalMap3":
        """The map x -> other(self(x))."""
        return ConformalMap3(self.factors + other.factors)

    @property
    def label(self) -> str:
        return "∘".join(type(f).__name__.lower() for f in reversed(self.factors)) or "identity"


def compose(outer: ConformalMap3, inner: ConformalMap3) -> ConformalMap3:
    """outer ∘ inner."""
    return inner.then(outer)


def random_conformal_map(rng: np.random.Generator, avoid_radius: float,
                         center: Point3 = (0.0, 0.0, 0.0)) -> ConformalMap3:
    """Rotation, dilation, translation and an inversion whose center stays outside
    the ball of radius ``avoid_radius`` about ``center``."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    inversion_center = np.asarray(center) + direction * avoid_radius * rng.uniform(1.5, 2.5)
    return ConformalMap3.of(
        Rotation.from_matrix(q),
        Inversion(tuple(float(c) for c in inversion_center)),
        Dilation(float(rng.uniform(0.5, 2.0))),
        Translation(tuple(float(c) for c in rng.uniform(-1.0, 1.0, size=3))),
    )


def _transform_puncture(theta_map: ConformalMap3, puncture: Puncture) -> Puncture:
    image = theta_map.map_point(puncture.image)
    if puncture.image is None and image is not None:
        # An end of multiplicity m through an inversion center becomes a branch point of order m - 1.
        return replace(puncture, image=image, theta=puncture.multiplicity - 1)
    if puncture.image is not None and image is None:
        return replace(puncture, image=None, multiplicity=(puncture.theta or 0) + 1)
    return replace(puncture, image=image)


def apply_conformal(theta_map: ConformalMap3, chart: ImmersionChart,
                    label: Optional[str] = None) -> ImmersionChart:
    base = chart.evaluator
    return replace(
        chart,
        label=label or f"{theta_map.label}({chart.label})",
        evaluator=lambda U, V: theta_map(base(U, V)),
        punctures=tuple(_transform_puncture(theta_map, p) for p in chart.punctures),
    )


# Reparametrizations

def rescale_chart(chart: ImmersionChart, s: float) -> ImmersionChart:
    """Φ_s(w) = Φ(w / s) on the dilated parameter domain."""
    if s <= 0:
        raise InvalidParameterError(f"Chart rescaling needs s > 0, got {s}")
    base = chart.evaluator
    return replace(
        chart,
        label=f"{chart.label}(z/{s:g})",
        domain=chart.domain.scaled(s),
        evaluator=lambda U, V: base(U * (1.0 / s), V * (1.0 / s)),
        punctures=tuple(
            p if p.center is None else replace(p, center=(s * p.center[0], s * p.center[1]))
            for p in chart.punctures
        ),
    )


def _primary_puncture(chart: ImmersionChart, side: Optional[str] = None) -> Puncture:
    for p in chart.punctures:
        if p.side is not None and (side is None or p.side == side):
            return p
    raise DomainRangeError(f"{chart.label} has no cylinder-end puncture to zoom into")


def blowup_sequence(chart: ImmersionChart, radii: Sequence[float],
                    side: str = "+") -> List[ImmersionChart]:
    """Φ_k(z) = Φ(r_k / z) on |z| >= 1, in cylinder coordinates z = e^{s + iψ}.

    On the '+' end x = e^{-t+iφ}, so Φ_k(s, ψ) = Φ(s - log r_k, -ψ). The ψ
    reflection reverses orientation; the blown-up charts carry the opposite
    orientation sign so that their Gauss maps agree with Φ's.
    """
    puncture = _primary_puncture(chart, side)
    t_min, t_max = chart.domain.u_range
    charts = []
    for r in radii:
        if puncture.side == "+":
            shift = -math.log(r)
            if not (t_min <= shift < t_max - math.log(2.0)):
                raise DomainRangeError(
                    f"Blow-up radius {r:g} lies outside the chart's punctured disk "
                    f"(needs {math.exp(-(t_max - math.log(2.0))):.3g} < r <= {math.exp(-t_min):.3g})"
                )
            evaluator = (lambda base, c: lambda S, P: base(S + c, -P))(chart.evaluator, shift)
            span = t_max - shift
        else:
            shift = math.log(r)
            if not (t_min + math.log(2.0) < shift <= t_max):
                raise DomainRangeError(f"Blow-up radius {r:g} lies outside the chart's punctured disk")
            evaluator = (lambda base, c: lambda S, P: base(c - S, P))(chart.evaluator, shift)
            span = shift - t_min
        charts.append(ImmersionChart(
            label=f"{chart.label}[r={r:.3g}]",
            domain=Domain2.cylinder(0.0, span),
            evaluator=evaluator,
            punctures=(replace(puncture, side="+"),),
            orientation=-chart.orientation,
            conformal=chart.conformal,
            willmore=chart.willmore,
            r_min=chart.r_min,
        ))
    return charts


# The zoo

def _sphere(params: Sequence[float]) -> ImmersionChart:
    def evaluator(t, p):
        sech = t.cosh().recip()
        return p.cos() * sech, p.sin() * sech, -(t.sinh() * sech)
    return ImmersionChart("sphere", Domain2.cylinder(), evaluator, conformal=True, willmore=True)


def _ellipsoid(params: Sequence[float]) -> ImmersionChart:
    a, b, c = params

    def evaluator(t, p):
        sech = t.cosh().recip()
        return a * p.cos() * sech, b * p.sin() * sech, -c * (t.sinh() * sech)
    willmore = bool(np.allclose([a, b], c))
    return ImmersionChart(f"ellipsoid({a:g},{b:g},{c:g})", Domain2.cylinder(), evaluator,
                          conformal=willmore, willmore=willmore)


def _catenoid(params: Sequence[float]) -> ImmersionChart:
    def evaluator(t, p):
        ch = t.cosh()
        return ch * p.cos(), ch * p.sin(), t
    ends = (Puncture(side="+", multiplicity=1, label="upper end"),
            Puncture(side="-", multiplicity=1, label="lower end"))
    return ImmersionChart("catenoid", Domain2.cylinder(), evaluator, ends, conformal=True, willmore=True)


def _enneper(params: Sequence[float]) -> ImmersionChart:
    # z = e^{t - iφ}; the end z -> ∞ sits at t -> +∞ and winds three times.
    def evaluator(t, p):
        et = t.exp()
        u, v = et * p.cos(), -(et * p.sin())
        uu, vv = u * u, v * v
        return (u - u * uu * (1.0 / 3.0) + u * vv,
                -v + v * vv * (1.0 / 3.0) - uu * v,
                uu - vv)
    end = (Puncture(side="+", multiplicity=3, label="end"),)
    return ImmersionChart("enneper", Domain2.cylinder(ENNEPER_T_MIN), evaluator, end,
                          conformal=True, willmore=True)


def _inverted_catenoid(params: Sequence[float]) -> ImmersionChart:
    return apply_conformal(ConformalMap3.of(Inversion()), _catenoid(()), label="inverted-catenoid")


def _inverted_enneper(params: Sequence[float]) -> ImmersionChart:
    (h,) = params
    # Enneper meets the vertical axis only at heights 0 and ±3.
    if min(abs(h), abs(abs(h) - 3.0)) < 0.05:
        raise InvalidParameterError(f"inverted-enneper offset h={h} puts the inversion center on the surface")
    theta_map = ConformalMap3.of(Translation((0.0, 0.0, -h)), Inversion())
    return apply_conformal(theta_map, _enneper(()), label="inverted-enneper")


def _clifford_torus_projected(params: Sequence[float]) -> ImmersionChart:
    root2 = math.sqrt(2.0)

    def evaluator(u, v):
        scale = (root2 - v.sin()).recip()
        return u.cos() * scale, u.sin() * scale, v.cos() * scale
    return ImmersionChart("clifford-torus-projected", Domain2.flat_torus(), evaluator,
                          conformal=True, willmore=True)


def _torus_of_revolution(params: Sequence[float]) -> ImmersionChart:
    big, small = params
    if not big > small:
        raise InvalidParameterError(f"torus-of-revolution needs R > r, got R={big}, r={small}")

    def evaluator(phi, theta):
        ring = big + small * theta.cos()
        return ring * phi.cos(), ring * phi.sin(), small * theta.sin()
    willmore = bool(abs(big / small - math.sqrt(2.0)) < 1e-12)
    return ImmersionChart(f"torus-of-revolution({big:g},{small:g})", Domain2.flat_torus(), evaluator,
                          willmore=willmore)


def _cubic_graph(params: Sequence[float]) -> ImmersionChart:
    (eps,) = params

    def evaluator(t, p):
        r = (-t).exp()
        return r * p.cos(), r * p.sin(), eps * (r * r * r) * (3.0 * p).cos()
    marker = (Puncture(side="+", theta=0, image=(0.0, 0.0, 0.0), label="synthetic marker"),)
    return ImmersionChart(f"cubic-graph({eps:g})", Domain2.punctured_disk(), evaluator, marker,
                          conformal=False, willmore=False)


@dataclass(frozen=True)
class ZooEntry:
    build: Callable[[Sequence[float]], ImmersionChart]
    defaults: Tuple[float, ...] = ()
    positive: bool = False
    description: str = ""


ZOO: Dict[str, ZooEntry] = {
    "sphere": ZooEntry(_sphere, description="unit sphere, stereographic cylinder chart"),
    "ellipsoid": ZooEntry(_ellipsoid, (1.0, 1.0, 2.0), positive=True, description="axes a, b, c"),
    "catenoid": ZooEntry(_catenoid, description="minimal, two ends"),
    "enneper": ZooEntry(_enneper, description="minimal, one end of multiplicity 3"),
    "inverted-catenoid": ZooEntry(_inverted_catenoid, description="catenoid inverted about the origin"),
    "inverted-enneper": ZooEntry(_inverted_enneper, (1.0,), description="Enneper shifted by -h e3, inverted"),
    "clifford-torus-projected": ZooEntry(_clifford_torus_projected, description="stereographic Clifford torus"),
    "torus-of-revolution": ZooEntry(_torus_of_revolution, (2.0, 1.0), positive=True, description="radii R > r"),
    "cubic-graph": ZooEntry(_cubic_graph, (0.1,), description="graph of eps Re z³ with a marker at 0 (control)"),
}

ZOO_SURFACES = (
    "sphere", "ellipsoid", "catenoid", "enneper", "inverted-catenoid", "inverted-enneper",
    "clifford-torus-projected", "torus-of-revolution",
)


def zoo(name: str, params: Sequence[float] = ()) -> ImmersionChart:
    try:
        entry = ZOO[name]
    except KeyError:
        raise UnknownSurfaceError(f"Unknown surface {name!r}; known surfaces: {', '.join(ZOO)}")
    params = tuple(float(p) for p in params) or entry.defaults
    if len(params) != len(entry.defaults):
        raise InvalidParameterError(
            f"{name} takes {len(entry.defaults)} parameter(s), got {len(params)}",
            {"surface": name, "params": list(params)},
        )
    if not all(math.isfinite(p) for p in params):
        raise InvalidParameterError(f"{name} parameters must be finite, got {list(params)}")
    if entry.positive and any(p <= 0 for p in params):
        raise InvalidParameterError(f"{name} parameters must be positive, got {list(params)}")
    logger.debug("Building zoo chart %s with params %s", name, params)
    return entry.build(params)


def mark_interior_point(chart: ImmersionChart, u0: float, v0: float, theta: int = 0,
                        label: str = "marker") -> ImmersionChart:
    """Add a marker at an interior parameter point (its image is Φ(u0, v0))."""
    image = tuple(float(c) for c in chart.point(u0, v0))
    marker = Puncture(center=(u0, v0), theta=theta, image=image, label=label)
    return chart.with_punctures(chart.punctures + (marker,))
