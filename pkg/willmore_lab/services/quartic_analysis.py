"""Bryant's quartic q = ⟨Y_zz, Y_zz⟩_η and the diagnostics around marked punctures.

q and ∂z̄q are computed inside jet arithmetic: Φ to order 5 gives Y to order 3,
Y_zz to order 1, and ∂z̄q to order 0. The coordinate z is the chart coordinate
u + iv; near a cylinder-end puncture the local disk coordinate x has
|dz/dx| = 1/|x|, so magnitudes convert with a factor |x|⁻⁴.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from willmore_lab.exceptions import (
    DegenerateFitError,
    DomainRangeError,
    InvalidParameterError,
    JetOrderError,
    NonConformalChartError,
)
from willmore_lab.services.conformal_gauss import cgm_from_shape
from willmore_lab.services.geometry_kernel import ShapeData, sample_points, shape_at
from willmore_lab.services.jet_engine import ComplexJet2, values, wirtinger_dz, wirtinger_dzbar
from willmore_lab.services.minkowski import eta_inner
from willmore_lab.services.parallel import evaluate_fields
from willmore_lab.services.surface_catalog import ImmersionChart, Puncture, rescale_chart
from willmore_lab.utils.logger import lab_logger

logger = logging.getLogger(__name__)

QUARTIC_ORDER = 5
ANISOTROPY_LIMIT = 1e-6
SCALE_FLOOR = 1e-14
VACUOUS_LEVEL = 1e-8
EXTENDED_BELOW = 1e-3
PRECISION_LOSS = 1e-6
CIRCLE_SAMPLES = 256
REFINED_SAMPLES = 2048
SUP_TOLERANCE = 0.01
LOG_BAND = 0.05
POOR_FIT = 0.1

POLE_FIT_RADII = tuple(2.0 ** -k for k in range(5, 13))
BRANCH_RADII = tuple(1e-2 * 10.0 ** (-0.25 * k) for k in range(9))

PRECISIONS = {"double": np.float64, "extended": np.longdouble}


def precision_dtype(precision: str):
    try:
        return PRECISIONS[precision]
    except KeyError:
        raise InvalidParameterError(f"Precision must be one of {sorted(PRECISIONS)}, got {precision!r}")


# Quartic samples

@dataclass(frozen=True)
class QuarticSample:
    z: np.ndarray
    q: np.ndarray
    dzbar_q: np.ndarray
    residual_scale: np.ndarray
    q_scale: np.ndarray
    conformality: np.ndarray
    local_radius: Optional[np.ndarray] = None
    disk_factor: Optional[np.ndarray] = None

    @property
    def abs_q(self) -> np.ndarray:
        return np.abs(self.q)

    @property
    def arg_q(self) -> np.ndarray:
        return np.angle(self.q)

    @property
    def abs_dzbar_q(self) -> np.ndarray:
        return np.abs(self.dzbar_q)

    def normalized_residual(self, floor: float = SCALE_FLOOR) -> np.ndarray:
        """|∂z̄q| over the size of the terms it is assembled from."""
        return self.abs_dzbar_q / np.maximum(self.residual_scale, floor)

    def relative_residual(self, floor: float = SCALE_FLOOR) -> np.ndarray:
        """|∂z̄q| / max(|q|, floor)."""
        return self.abs_dzbar_q / np.maximum(self.abs_q, floor)

    def q_normalized(self, floor: float = SCALE_FLOOR) -> np.ndarray:
        return self.abs_q / np.maximum(self.q_scale, floor)

    @property
    def radius(self) -> np.ndarray:
        return self.local_radius if self.local_radius is not None else np.abs(self.z)

    @property
    def disk_abs_q(self) -> np.ndarray:
        """|q| in the local disk coordinate of the puncture (the chart coordinate otherwise)."""
        return self.abs_q if self.disk_factor is None else self.abs_q * self.disk_factor

    def weights(self) -> Dict[str, np.ndarray]:
        r, q = self.radius, self.disk_abs_q
        return {"weight_z4": r ** 4 * q, "weight_z2": r ** 2 * q, "weight_z1": r * q}


def quartic_from_shape(shape: ShapeData) -> Dict[str, np.ndarray]:
    if shape.order < 3:
        raise JetOrderError(f"The quartic needs Φ jets of order >= {QUARTIC_ORDER}")
    Y = cgm_from_shape(shape)
    yz = tuple(wirtinger_dz(ComplexJet2(c)) for c in Y)
    yzz = tuple(wirtinger_dz(c) for c in yz)
    q = eta_inner(yzz, yzz)
    dq = wirtinger_dzbar(q)
    dyzz = tuple(wirtinger_dzbar(c) for c in yzz)
    yzz_abs = [np.sqrt(c.abs2().value) for c in yzz]
    dyzz_abs = [np.sqrt(c.abs2().value) for c in dyzz]
    yz_yz = eta_inner(yz, yz)
    yz_abs2 = np.sum([c.abs2().value for c in yz], axis=0)
    return {
        "q": np.asarray(q.value, dtype=complex),
        "dzbar_q": np.asarray(dq.value, dtype=complex),
        "residual_scale": np.asarray(2.0 * np.sum([a * b for a, b in zip(yzz_abs, dyzz_abs)], axis=0), dtype=float),
        "q_scale": np.asarray(np.sum([a * a for a in yzz_abs], axis=0), dtype=float),
        "conformality": np.asarray(np.abs(yz_yz.value) / np.maximum(yz_abs2, 1e-300), dtype=float),
    }


def _check_conformal(chart: ImmersionChart, shape: ShapeData) -> None:
    worst = float(np.max(shape.anisotropy))
    if worst > ANISOTROPY_LIMIT:
        raise NonConformalChartError(
            f"{chart.label}: the quartic needs a conformal chart (metric anisotropy {worst:.3g})",
            {"anisotropy": worst},
        )


def quartic_at(chart: ImmersionChart, u, v, order: int = QUARTIC_ORDER, dtype=None,
               puncture: Optional[Puncture] = None, strict: bool = True) -> QuarticSample:
    """q and ∂z̄q at the points (u, v). ``strict=False`` skips the conformality check,
    for control charts that are conformal only to leading order."""
    if order < QUARTIC_ORDER:
        raise JetOrderError(f"The quartic needs jet order >= {QUARTIC_ORDER}, got {order}")
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    shape = shape_at(chart, u, v, order, dtype)
    if strict:
        _check_conformal(chart, shape)
    fields = quartic_from_shape(shape)
    radius = factor = None
    if puncture is not None:
        radius = puncture.local_radius(u, v)
        factor = radius ** -4.0 if puncture.side is not None else np.ones_like(radius)
    return QuarticSample(z=u + 1j * v, local_radius=radius, disk_factor=factor, **fields)


# Holomorphicity

@dataclass(frozen=True)
class HolomorphicityScan:
    max_normalized: float
    max_relative: float
    max_q_normalized: float
    q_variation: float
    max_conformality: float
    points: int
    sample: QuarticSample = field(repr=False)
    measure: str = "normalized"

    @property
    def max_residual(self) -> float:
        """The gated holomorphicity measure: relative to |q| where q stays away from zero."""
        return self.max_relative if self.measure == "relative" else self.max_normalized


def holomorphicity_scan(chart: ImmersionChart, counts: Tuple[int, int] = (48, 32), exclusion: float = 1e-2,
                        order: int = QUARTIC_ORDER, dtype=None) -> HolomorphicityScan:
    """∂z̄q over a sample grid that keeps ``exclusion`` away from the punctures.

    Where |q| never drops below ``VACUOUS_LEVEL`` of its scale the gated measure is
    |∂z̄q| / |q|; otherwise q is (numerically) zero somewhere and |∂z̄q| is compared
    with the terms it is assembled from.
    """
    u, v = sample_points(chart, counts, exclusion)

    def chunk(uc, vc):
        s = quartic_at(chart, uc, vc, order, dtype)
        return {"q": s.q, "dzbar_q": s.dzbar_q, "residual_scale": s.residual_scale,
                "q_scale": s.q_scale, "conformality": s.conformality}

    fields = evaluate_fields(chunk, [u, v])
    sample = QuarticSample(z=u + 1j * v, **fields)
    abs_q = sample.abs_q
    peak = float(np.max(abs_q))
    variation = float(np.max(np.abs(sample.q - np.mean(sample.q)))) / peak if peak > SCALE_FLOOR else 0.0
    nonvanishing = float(np.min(abs_q)) > VACUOUS_LEVEL * max(float(np.max(sample.q_scale)), SCALE_FLOOR)
    return HolomorphicityScan(
        max_normalized=float(np.max(sample.normalized_residual())),
        max_relative=float(np.max(sample.relative_residual())),
        max_q_normalized=float(np.max(sample.q_normalized())),
        q_variation=variation,
        max_conformality=float(np.max(sample.conformality)),
        points=len(u),
        sample=sample,
        measure="relative" if nonvanishing else "normalized",
    )


@dataclass(frozen=True)
class FiniteDifferenceCheck:
    jet: complex
    finite_difference: complex
    error: float
    budget: float

    @property
    def agrees(self) -> bool:
        return self.error <= self.budget


def _central_fd(f: Callable[[float], complex], h: float) -> complex:
    return (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h)


def dzbar_q_finite_difference(chart: ImmersionChart, u0: float, v0: float, h: float = 1e-2,
                              order: int = QUARTIC_ORDER) -> FiniteDifferenceCheck:
    """∂z̄q = ½(q_u + i q_v) by fourth-order central differences against the jet value.

    The budget is the spread between steps h and 2h plus the rounding term."""
    def q_at(du: float, dv: float) -> complex:
        return complex(quartic_at(chart, np.array([u0 + du]), np.array([v0 + dv]), order).q[0])

    def estimate(step: float) -> complex:
        qu = _central_fd(lambda s: q_at(s, 0.0), step)
        qv = _central_fd(lambda s: q_at(0.0, s), step)
        return 0.5 * (qu + 1j * qv)

    jet = complex(quartic_at(chart, np.array([u0]), np.array([v0]), order).dzbar_q[0])
    fine, coarse = estimate(h), estimate(2.0 * h)
    rounding = 10.0 * np.finfo(float).eps * max(abs(q_at(0.0, 0.0)), SCALE_FLOOR) / h
    return FiniteDifferenceCheck(jet, fine, abs(fine - jet), abs(fine - coarse) + rounding)


def rescaling_defect(chart: ImmersionChart, u, v, s: float = 2.0, order: int = QUARTIC_ORDER) -> float:
    """max |q_s(w) - s⁻⁴ q(w/s)| / max |q| for the chart rescaled by w = s z."""
    u, v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
    old = quartic_at(chart, u, v, order).q
    new = quartic_at(rescale_chart(chart, s), s * u, s * v, order).q
    return float(np.max(np.abs(new - old * s ** -4.0)) / max(float(np.max(np.abs(old))), SCALE_FLOOR))


# Power-law fits

@dataclass(frozen=True)
class ExponentFit:
    radii: Tuple[float, ...]
    values: Tuple[float, ...]
    slope: float
    intercept: float
    residual: float
    window: Tuple[float, float]
    status: str
    log_coefficients: Optional[Tuple[float, float]] = None
    log_residual: Optional[float] = None

    @property
    def meaningful(self) -> bool:
        return self.residual < POOR_FIT

    def as_dict(self) -> Dict[str, object]:
        return {
            "radii": list(self.radii), "values": list(self.values), "slope": self.slope,
            "intercept": self.intercept, "residual": self.residual, "window": list(self.window),
            "status": self.status,
            "log_coefficients": list(self.log_coefficients) if self.log_coefficients else None,
            "log_residual": self.log_residual,
        }


def _log_model(radii: np.ndarray, vals: np.ndarray) -> Tuple[Tuple[float, float], Optional[float]]:
    a, b = np.polyfit(np.log(radii), vals, 1)
    model = a * np.log(radii) + b
    if np.any(model <= 0):
        return (float(a), float(b)), None
    return (float(a), float(b)), float(np.sqrt(np.mean((np.log(vals) - np.log(model)) ** 2)))


def fit_power_law(radii: Sequence[float], vals: Sequence[float]) -> ExponentFit:
    """Least-squares slope of log value against log r.

    Slopes inside the band ±0.05, or data that a·log r + b explains ten times
    better than any power, are reported with status "log" and the coefficients
    (a, b)."""
    r = np.asarray(radii, dtype=float)
    y = np.asarray(vals, dtype=float)
    if len(r) < 2 or len(r) != len(y):
        raise DegenerateFitError(f"A power-law fit needs at least two radii with values, got {len(r)}")
    if np.any(~np.isfinite(y)) or np.any(y <= 0) or np.any(r <= 0):
        raise DegenerateFitError("A power-law fit needs positive finite radii and values",
                                 {"values": [float(x) for x in y]})
    order = np.argsort(-r)
    r, y = r[order], y[order]
    slope, intercept = np.polyfit(np.log(r), np.log(y), 1)
    residual = float(np.sqrt(np.mean((np.log(y) - (slope * np.log(r) + intercept)) ** 2))) if len(r) > 2 else 0.0
    status = "ok" if residual < POOR_FIT else "poor-fit"
    log_coefficients = log_residual = None
    if len(r) > 2:
        log_coefficients, log_residual = _log_model(r, y)
        in_band = -LOG_BAND < slope < LOG_BAND
        better = log_residual is not None and residual > 1e-6 and log_residual < 0.1 * residual
        if in_band or better:
            status = "log"
    return ExponentFit(
        radii=tuple(float(x) for x in r), values=tuple(float(x) for x in y),
        slope=float(slope), intercept=float(intercept), residual=residual,
        window=(float(r[-1]), float(r[0])), status=status,
        log_coefficients=log_coefficients, log_residual=log_residual,
    )


# Circles around punctures

def circle_angles(count: int) -> np.ndarray:
    return np.linspace(0.0, 2.0 * math.pi, count, endpoint=False)


def circle_sup(values_at: Callable[[np.ndarray], np.ndarray], floor: float = 1e-300,
               label: str = "") -> Tuple[float, int]:
    """sup over a circle from 512 equispaced angles, refined to 2048 when the
    256-angle subset misses the maximum by more than 1%."""
    fine = np.asarray(values_at(circle_angles(2 * CIRCLE_SAMPLES)))
    coarse_sup, fine_sup = float(np.max(fine[::2])), float(np.max(fine))
    if fine_sup <= floor or fine_sup - coarse_sup <= SUP_TOLERANCE * fine_sup:
        return fine_sup, 2 * CIRCLE_SAMPLES
    lab_logger.log_numerical_event("sup_refinement", {"circle": label, "sup_256": coarse_sup,
                                                       "sup_512": fine_sup})
    refined = float(np.max(values_at(circle_angles(REFINED_SAMPLES))))
    return max(refined, fine_sup), REFINED_SAMPLES


def _check_radii(chart: ImmersionChart, puncture: Puncture, radii: Sequence[float]) -> None:
    t_min, t_max = chart.domain.u_range
    for r in radii:
        if not r > chart.exclusion_radius:
            raise DomainRangeError(f"Radius {r:g} is inside the exclusion radius {chart.exclusion_radius:g}",
                                   {"radius": r})
        if puncture.side is not None:
            t = -math.log(r) if puncture.side == "+" else math.log(r)
            if not t_min <= t <= t_max:
                raise DomainRangeError(
                    f"Radius {r:g} lies outside {chart.label}'s chart [{t_min}, {t_max}]", {"radius": r})
        else:
            u, v = puncture.circle(r, circle_angles(8))
            if not np.all(chart.domain.contains(*chart.domain.wrap(u, v))):
                raise DomainRangeError(f"Circle of radius {r:g} leaves {chart.label}'s domain", {"radius": r})


def _primary(chart: ImmersionChart, puncture: Optional[Puncture]) -> Puncture:
    if puncture is not None:
        return puncture
    if not chart.punctures:
        raise DomainRangeError(f"{chart.label} has no marked puncture")
    return chart.punctures[0]


# Pole order

@dataclass(frozen=True)
class PoleOrderFit:
    puncture: str
    radii: Tuple[float, ...]
    sup_q: Tuple[float, ...]
    sup_q_normalized: Tuple[float, ...]
    status: str
    fit: Optional[ExponentFit] = None
    trimmed: bool = False

    @property
    def vacuous(self) -> bool:
        return self.status == "vacuous"

    @property
    def slope(self) -> Optional[float]:
        return None if self.fit is None else self.fit.slope

    @property
    def bounded(self) -> Optional[bool]:
        """q bounded at the puncture: slope >= -0.1."""
        return None if self.fit is None else self.fit.slope >= -0.1

    @property
    def within_generic_bound(self) -> Optional[bool]:
        """Pole of order at most 2: slope >= -2.1."""
        return None if self.fit is None else self.fit.slope >= -2.1


def _circle_quartic(chart: ImmersionChart, puncture: Puncture, r: float, order: int, dtype, strict: bool):
    def fields(angles):
        u, v = puncture.circle(r, angles)
        s = quartic_at(chart, u, v, order, dtype, puncture, strict)
        return s.disk_abs_q, s.q_normalized()
    return fields


def _radius_sup(chart: ImmersionChart, puncture: Puncture, r: float, order: int, dtype, strict: bool):
    fields = _circle_quartic(chart, puncture, r, order, dtype, strict)
    sup_q, _ = circle_sup(lambda a: fields(a)[0], label=f"{chart.label} r={r:.3g}")
    sup_norm = float(np.max(fields(circle_angles(2 * CIRCLE_SAMPLES))[1]))
    return sup_q, sup_norm


def pole_order_fit(chart: ImmersionChart, radii: Sequence[float] = POLE_FIT_RADII,
                   puncture: Optional[Puncture] = None, order: int = QUARTIC_ORDER,
                   precision: str = "double", strict: Optional[bool] = None) -> PoleOrderFit:
    """Slope of log sup_{|x|=r}|q| against log r at a puncture.

    Below r = 1e-3 the double-precision values are checked against extended
    precision; a relative disagreement above 1e-6 drops the two smallest radii
    from the fit window.
    """
    puncture = _primary(chart, puncture)
    radii = sorted((float(r) for r in radii), reverse=True)
    if len(radii) < 6:
        raise InvalidParameterError(f"A pole-order fit needs at least 6 radii, got {len(radii)}")
    _check_radii(chart, puncture, radii)
    strict = chart.conformal if strict is None else strict
    base = precision_dtype(precision)
    sups, norms, lossy = [], [], False
    for r in radii:
        dtype = base
        if base is np.float64 and r < EXTENDED_BELOW:
            dtype = np.longdouble
        sup_q, sup_norm = _radius_sup(chart, puncture, r, order, dtype, strict)
        if dtype is not base and sup_norm > VACUOUS_LEVEL:
            sup_double, _ = _radius_sup(chart, puncture, r, order, base, strict)
            if abs(sup_double - sup_q) > PRECISION_LOSS * sup_q:
                lossy = True
        sups.append(sup_q)
        norms.append(sup_norm)

    label = puncture.label or puncture.side or str(puncture.center)
    if all(n <= VACUOUS_LEVEL for n in norms):
        logger.info("Quartic of %s vanishes to rounding at %s; pole order is vacuous", chart.label, label)
        return PoleOrderFit(label, tuple(radii), tuple(sups), tuple(norms), "vacuous")
    window = slice(None)
    if lossy:
        window = slice(0, len(radii) - 2)
        lab_logger.log_numerical_event("fit_window_trimmed", {"chart": chart.label, "puncture": label,
                                                               "dropped": radii[-2:]})
    fit = fit_power_law(radii[window], sups[window])
    return PoleOrderFit(label, tuple(radii), tuple(sups), tuple(norms), "fitted", fit, lossy)


# Scaling

@dataclass(frozen=True)
class ScalingTable:
    radii: Tuple[float, ...]
    entries: Tuple[float, ...]
    normalized: Optional[Tuple[float, ...]]
    verdict: str
    passed: bool

    def as_dict(self) -> Dict[str, object]:
        return {"radii": list(self.radii), "entries": list(self.entries),
                "normalized": list(self.normalized) if self.normalized is not None else None,
                "verdict": self.verdict, "passed": self.passed}


def scaling_verdict(entries: Sequence[float], normalized: Optional[Sequence[float]] = None) -> Tuple[str, bool]:
    """'vacuous' when q vanishes to rounding, else 'decaying' when the sequence is
    non-increasing within 1% and ends at most half its first value."""
    probe = normalized if normalized is not None else entries
    if all(x <= VACUOUS_LEVEL for x in probe):
        return "vacuous", True
    seq = list(entries)
    monotone = all(b <= a * (1.0 + SUP_TOLERANCE) for a, b in zip(seq, seq[1:]))
    if monotone and seq[-1] <= 0.5 * seq[0]:
        return "decaying", True
    return "not-decaying", False


def scaling_estimate(chart: ImmersionChart, radii: Sequence[float] = POLE_FIT_RADII,
                     puncture: Optional[Puncture] = None, order: int = QUARTIC_ORDER,
                     precision: str = "double", rings: int = 5) -> ScalingTable:
    """|z_k| · sup over the annulus |z_k|/2 <= |x| <= 2|z_k| of |q|, largest radius first."""
    puncture = _primary(chart, puncture)
    radii = sorted((float(r) for r in radii), reverse=True)
    _check_radii(chart, puncture, [x for r in radii for x in (0.5 * r, 2.0 * r)])
    dtype = precision_dtype(precision)
    strict = chart.conformal
    entries, normalized = [], []
    for r in radii:
        sup_q = sup_norm = 0.0
        for ring in np.geomspace(0.5 * r, 2.0 * r, rings):
            q, n = _radius_sup(chart, puncture, float(ring), order, dtype, strict)
            sup_q, sup_norm = max(sup_q, q), max(sup_norm, n)
        entries.append(r * sup_q)
        normalized.append(sup_norm)
    verdict, passed = scaling_verdict(entries, normalized)
    return ScalingTable(tuple(radii), tuple(entries), tuple(normalized), verdict, passed)


def synthetic_scaling_control(radii: Sequence[float] = POLE_FIT_RADII, power: float = -1.0) -> ScalingTable:
    """The table of q = z^power; for z⁻¹ the entries stay at 1 and the verdict fails."""
    radii = sorted((float(r) for r in radii), reverse=True)
    entries = [r * r ** power for r in radii]
    verdict, passed = scaling_verdict(entries)
    return ScalingTable(tuple(radii), tuple(entries), None, verdict, passed)


def quartic_table(chart: ImmersionChart, radii: Sequence[float], puncture: Optional[Puncture] = None,
                  angles: int = 16, order: int = QUARTIC_ORDER) -> QuarticSample:
    """Samples on circles around a puncture (or along the chart diagonal without one)."""
    if puncture is None and chart.punctures:
        puncture = chart.punctures[0]
    theta = circle_angles(angles)
    if puncture is None:
        u0, v0 = chart.domain.center
        u = np.concatenate([u0 + r * np.cos(theta) for r in radii])
        v = np.concatenate([v0 + r * np.sin(theta) for r in radii])
    else:
        parts = [puncture.circle(float(r), theta) for r in radii]
        u = np.concatenate([p[0] for p in parts])
        v = np.concatenate([p[1] for p in parts])
    return quartic_at(chart, u, v, order, puncture=puncture, strict=chart.conformal)


# Branch exponents

@dataclass(frozen=True)
class PunctureExponents:
    label: str
    image: Optional[Tuple[float, float, float]]
    theta_declared: Optional[int]
    phi_fit: Optional[ExponentFit]
    grad_fit: ExponentFit
    h_fit: Optional[ExponentFit]

    @property
    def theta_from_phi(self) -> Optional[float]:
        return None if self.phi_fit is None else self.phi_fit.slope - 1.0

    @property
    def theta_from_gradient(self) -> float:
        return self.grad_fit.slope

    @property
    def theta(self) -> float:
        return self.theta_from_phi if self.phi_fit is not None else self.theta_from_gradient

    @property
    def consistent(self) -> bool:
        """Both θ estimates within 0.1 of each other."""
        if self.phi_fit is None:
            return True
        return abs(self.theta_from_phi - self.theta_from_gradient) <= 0.1

    @property
    def alpha(self) -> Optional[float]:
        if self.h_fit is None or self.h_fit.status == "log":
            return None
        return -self.h_fit.slope

    @property
    def gamma(self) -> Optional[float]:
        if self.h_fit is None or self.h_fit.status != "log":
            return None
        return self.h_fit.log_coefficients[0]


@dataclass(frozen=True)
class ImageGroup:
    image: Tuple[float, float, float]
    punctures: Tuple[str, ...]
    thetas: Tuple[int, ...]
    fitted: Tuple[float, ...] = ()

    @property
    def image_order(self) -> int:
        return sum(1 + t for t in self.thetas) - 1

    @property
    def fitted_order(self) -> float:
        """Σ(1 + θ_i) - 1 over the unrounded fits."""
        return sum(1.0 + t for t in self.fitted) - 1.0


@dataclass(frozen=True)
class BranchReport:
    punctures: Tuple[PunctureExponents, ...]
    groups: Tuple[ImageGroup, ...]

    def _merged_group(self) -> Optional[ImageGroup]:
        first = self.punctures[0]
        group = next((g for g in self.groups if first.label in g.punctures), None)
        return group if group is not None and len(group.punctures) > 1 else None

    @property
    def theta(self) -> float:
        """Branch order at the image of the first puncture; a single unmerged puncture
        keeps its fitted (non-integer) value."""
        group = self._merged_group()
        return self.punctures[0].theta if group is None else float(group.image_order)

    @property
    def fitted_theta(self) -> float:
        """Like ``theta``, but merged groups add up their unrounded exponents."""
        group = self._merged_group()
        return self.punctures[0].theta if group is None else group.fitted_order

    @property
    def consistent(self) -> bool:
        return all(p.consistent for p in self.punctures)


def _puncture_fields(chart: ImmersionChart, puncture: Puncture, r: float, dtype) -> Callable:
    p = None if puncture.image is None else np.asarray(puncture.image, dtype=float).reshape(3, 1)

    def fields(angles):
        u, v = puncture.circle(r, angles)
        shape = shape_at(chart, u, v, 2, dtype)
        phi = np.asarray(values(shape.phi), dtype=float)
        grad = np.sqrt(np.sum(np.asarray(values(shape.dphi[0]), dtype=float) ** 2
                              + np.asarray(values(shape.dphi[1]), dtype=float) ** 2, axis=0))
        out = {"grad": grad * puncture.gradient_factor(np.full_like(grad, r)),
               "H": np.abs(np.asarray(shape.H.value, dtype=float))}
        if p is not None:
            out["dist"] = np.sqrt(np.sum((phi - p) ** 2, axis=0))
        return out
    return fields


def puncture_exponents(chart: ImmersionChart, puncture: Puncture, radii: Sequence[float] = BRANCH_RADII,
                       precision: str = "double") -> PunctureExponents:
    radii = sorted((float(r) for r in radii), reverse=True)
    _check_radii(chart, puncture, radii)
    dtype = precision_dtype(precision)
    label = puncture.label or puncture.side or str(puncture.center)
    sups: Dict[str, List[float]] = {}
    for r in radii:
        fields = _puncture_fields(chart, puncture, r, dtype)
        cache: Dict[int, Dict[str, np.ndarray]] = {}

        def at(angles, key):
            n = len(angles)
            if n not in cache:
                cache[n] = fields(angles)
            return cache[n][key]

        for key in ("dist", "grad", "H"):
            if key == "dist" and puncture.image is None:
                continue
            sup, _ = circle_sup(lambda a, k=key: at(a, k), label=f"{label} {key} r={r:.3g}")
            sups.setdefault(key, []).append(sup)
    phi_fit = fit_power_law(radii, sups["dist"]) if "dist" in sups else None
    grad_fit = fit_power_law(radii, sups["grad"])
    h_vals = sups["H"]
    h_fit = fit_power_law(radii, h_vals) if all(h > 0 for h in h_vals) else None
    return PunctureExponents(label, puncture.image, puncture.theta, phi_fit, grad_fit, h_fit)


def _group_by_image(exponents: Sequence[PunctureExponents], tol: float = 1e-9) -> Tuple[ImageGroup, ...]:
    groups: List[ImageGroup] = []
    for e in exponents:
        if e.image is None:
            continue
        theta = int(round(e.theta))
        for i, g in enumerate(groups):
            if np.linalg.norm(np.subtract(g.image, e.image)) <= tol * max(1.0, np.linalg.norm(e.image)):
                groups[i] = ImageGroup(g.image, g.punctures + (e.label,), g.thetas + (theta,),
                                       g.fitted + (float(e.theta),))
                break
        else:
            groups.append(ImageGroup(tuple(e.image), (e.label,), (theta,), (float(e.theta),)))
    return tuple(groups)


def branch_exponents(chart: ImmersionChart, radii: Sequence[float] = BRANCH_RADII,
                     precision: str = "double") -> BranchReport:
    """θ from |Φ - p| ~ r^{1+θ} and |∇Φ| ~ r^θ, and α from sup|H| ~ r^{-α}, at every puncture.

    Punctures sharing an image point are merged into one branch point of order
    Σ(1 + θ_i) - 1.
    """
    if not chart.punctures:
        raise DomainRangeError(f"{chart.label} has no marked puncture")
    exponents = tuple(puncture_exponents(chart, p, radii, precision) for p in chart.punctures)
    for e in exponents:
        if not e.consistent:
            logger.warning("Inconsistent θ fits at %s of %s: %.3f from |Φ-p|, %.3f from |∇Φ|",
                           e.label, chart.label, e.theta_from_phi, e.theta_from_gradient)
    return BranchReport(exponents, _group_by_image(exponents))
