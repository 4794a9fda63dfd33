"""The conformal Gauss map in the R³ and the S³ models.

R³:  Y = H·(Φ, (|Φ|²-1)/2, (|Φ|²+1)/2) + (n, ⟨n,Φ⟩, ⟨n,Φ⟩)
S³:  Y = H_Ψ·(Ψ, 1) + (N, 0)

Both are computed by substituting jets; the derivative formulas are kept as
separate code paths for cross-checking.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from willmore_lab.exceptions import (
    DegenerateMetricError,
    DomainRangeError,
    InvalidParameterError,
    JetOrderError,
    NorthPoleError,
    UnknownSurfaceError,
)
from willmore_lab.services.geometry_kernel import ShapeData, _trunc, shape_at
from willmore_lab.services.jet_engine import (
    DEFAULT_ORDER,
    ComplexJet2,
    Jet2,
    dot,
    values,
    wirtinger_dz,
)
from willmore_lab.services.minkowski import LorentzMatrix, eta_inner, matrix_apply
from willmore_lab.services.parallel import evaluate_fields
from willmore_lab.services.surface_catalog import Domain2, ImmersionChart, Puncture, zoo

logger = logging.getLogger(__name__)

LorentzJet = Tuple[Jet2, Jet2, Jet2, Jet2, Jet2]


def light_cone_lift(phi: Sequence[Jet2]) -> LorentzJet:
    r2 = dot(phi, phi)
    return tuple(phi) + ((r2 - 1.0) * 0.5, (r2 + 1.0) * 0.5)


def cgm_from_shape(shape: ShapeData) -> LorentzJet:
    k = shape.order
    phi = _trunc(shape.phi, k)
    n = _trunc(shape.n, k)
    lift = light_cone_lift(phi)
    support = dot(n, phi)
    tail = tuple(n) + (support, support)
    return tuple(shape.H * lift[a] + tail[a] for a in range(5))


@dataclass(frozen=True)
class CgmSample:
    Y: LorentzJet
    model: str
    u: np.ndarray
    v: np.ndarray
    shape: Optional[ShapeData] = field(default=None, repr=False)

    @property
    def order(self) -> int:
        return self.Y[0].order

    @property
    def values(self) -> np.ndarray:
        return values(self.Y)

    @property
    def H_from_Y(self) -> np.ndarray:
        return self.Y[4].value - self.Y[3].value


def cgm_r3(chart: ImmersionChart, u, v, order: int = DEFAULT_ORDER, dtype=None) -> CgmSample:
    if order < 2:
        raise JetOrderError(f"The conformal Gauss map needs jet order >= 2, got {order}")
    shape = shape_at(chart, u, v, order, dtype)
    return CgmSample(cgm_from_shape(shape), "R3", np.asarray(u), np.asarray(v), shape)


def grad_cgm(sample: CgmSample) -> Tuple[LorentzJet, LorentzJet]:
    if sample.order < 1:
        raise JetOrderError("Differentiating Y needs at least one remaining jet order")
    return tuple(c.dx() for c in sample.Y), tuple(c.dy() for c in sample.Y)


def grad_cgm_closed_form(shape: ShapeData) -> Tuple[np.ndarray, np.ndarray]:
    """∂_iY = ∂_iH·(Φ, …) - (a_i, ⟨a_i,Φ⟩, ⟨a_i,Φ⟩) with a_i = Å_ij g^{jk}∂_kΦ (values)."""
    if shape.order < 1:
        raise JetOrderError("The closed-form gradient needs H as a jet of order >= 1")
    lift = values(light_cone_lift(_trunc(shape.phi, 0)))
    phi = values(shape.phi)
    tangent = shape.shape_operator_on_tangent()
    out = []
    for i, dh in enumerate((shape.H.dx().value, shape.H.dy().value)):
        a = values(tangent[i])
        s = np.sum(a * phi, axis=0)
        out.append(dh * lift - np.concatenate([a, s[None], s[None]]))
    return out[0], out[1]


def _eta_values(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(a[:4] * b[:4], axis=0) - a[4] * b[4]


@dataclass(frozen=True)
class IdentityResiduals:
    norm: float
    h_from_y: float
    orthogonality: float
    pullback: float
    closed_form_gradient: float
    conformality: Optional[float]
    second_conformality: Optional[float]
    points: int

    def as_dict(self) -> Dict[str, Optional[float]]:
        return {
            "norm": self.norm,
            "h_from_y": self.h_from_y,
            "orthogonality": self.orthogonality,
            "pullback": self.pullback,
            "closed_form_gradient": self.closed_form_gradient,
            "conformality": self.conformality,
            "second_conformality": self.second_conformality,
        }


def _identity_fields(chart: ImmersionChart, order: int, dtype=None):
    def chunk(u, v):
        sample = cgm_r3(chart, u, v, order, dtype)
        shape = sample.shape
        y = sample.values
        scale = np.maximum(1.0, np.sum(y * y, axis=0))
        dy_u, dy_v = (values(d) for d in grad_cgm(sample))
        g11, g12, g22 = (c.value for c in shape.g)
        # ∂Y is assembled from ∂H·P and A∇Φ; |A|² tr g sizes the second part when Y is constant.
        ref = np.sum(dy_u ** 2 + dy_v ** 2, axis=0) + shape.A_norm2.value * (g11 + g22) + 1e-300
        h = shape.H.value
        out = {
            "norm": np.abs(_eta_values(y, y) - 1.0) / scale,
            "h_from_y": np.abs(sample.H_from_Y - h) / np.maximum(1.0, np.abs(h)),
            "orthogonality": np.maximum(np.abs(_eta_values(y, dy_u)), np.abs(_eta_values(y, dy_v)))
            / np.sqrt(scale * ref),
        }
        cu, cv = grad_cgm_closed_form(shape)
        out["closed_form_gradient"] = np.sqrt(np.sum((cu - dy_u) ** 2 + (cv - dy_v) ** 2, axis=0) / ref)
        half = 0.5 * shape.A0_norm2.value
        pull = (np.abs(_eta_values(dy_u, dy_u) - half * g11)
                + np.abs(_eta_values(dy_u, dy_v) - half * g12)
                + np.abs(_eta_values(dy_v, dy_v) - half * g22))
        out["pullback"] = pull / ref
        if chart.conformal:
            yz = tuple(wirtinger_dz(ComplexJet2(c)) for c in sample.Y)
            yz_yz = eta_inner(yz, yz)
            quarter = 0.25 * ref
            out["conformality"] = np.hypot(yz_yz.re.value, yz_yz.im.value) / quarter
            if sample.order >= 2:
                yzz = tuple(wirtinger_dz(c) for c in yz)
                yz1 = tuple(c.truncate(yzz[0].order) for c in yz)
                mixed = eta_inner(yzz, yz1)
                yzz_abs = np.sum([c.abs2().value for c in yzz], axis=0)
                out["second_conformality"] = np.hypot(mixed.re.value, mixed.im.value) \
                    / (np.sqrt(quarter) * np.sqrt(np.maximum(yzz_abs, quarter)))
        return {k: np.asarray(val, dtype=float) for k, val in out.items()}
    return chunk


def identity_residuals(chart: ImmersionChart, u: np.ndarray, v: np.ndarray, order: int = 4,
                       dtype=None) -> IdentityResiduals:
    """Worst relative residual of each conformal-Gauss-map identity over the points."""
    fields = evaluate_fields(_identity_fields(chart, order, dtype), [u, v])
    worst = {k: float(np.max(a)) for k, a in fields.items()}
    return IdentityResiduals(
        norm=worst["norm"], h_from_y=worst["h_from_y"], orthogonality=worst["orthogonality"],
        pullback=worst["pullback"], closed_form_gradient=worst["closed_form_gradient"],
        conformality=worst.get("conformality"), second_conformality=worst.get("second_conformality"),
        points=len(u),
    )


# Stereographic projection

def stereographic_inverse(x: Sequence):
    """ω(x) = (2x, |x|²-1)/(|x|²+1), for arrays (components first) or jets."""
    r2 = dot(x, x)
    inv = 1.0 / (r2 + 1.0) if not isinstance(r2, Jet2) else (r2 + 1.0).recip()
    return tuple(2.0 * c * inv for c in x) + ((r2 - 1.0) * inv,)


def stereographic(y: Sequence, tol: float = 1e-12):
    """π(y) = (y1, y2, y3)/(1 - y4); raises at the north pole."""
    denom = 1.0 - y[3]
    base = denom.value if isinstance(denom, Jet2) else np.asarray(denom)
    if np.any(base <= tol):
        raise NorthPoleError("Stereographic projection of the north pole (0, 0, 0, 1)")
    inv = denom.recip() if isinstance(denom, Jet2) else 1.0 / denom
    return tuple(y[i] * inv for i in range(3))


def conformal_factor(x: np.ndarray) -> np.ndarray:
    """ω*g_{S³} = 4/(1+|x|²)² · g_{R³}."""
    x = np.asarray(x, dtype=float)
    return 4.0 / (1.0 + np.sum(x * x, axis=0)) ** 2


# The S³ model

@dataclass(frozen=True)
class S3Chart:
    label: str
    domain: Domain2
    evaluator: Callable[[Jet2, Jet2], Sequence[Jet2]] = field(repr=False)
    orientation: int = 1
    conformal: bool = False
    mean_curvature: Optional[float] = None

    def evaluate(self, u, v, order: int, dtype=None) -> Tuple[Jet2, Jet2, Jet2, Jet2]:
        U, V = Jet2.coordinates(np.asarray(u, dtype=float), np.asarray(v, dtype=float), order, dtype)
        return tuple(self.evaluator(U, V))


def _det3(rows: Sequence[Sequence[Jet2]]) -> Jet2:
    (a, b, c), (d, e, f), (g, h, i) = rows
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


def cross4(a: Sequence[Jet2], b: Sequence[Jet2], c: Sequence[Jet2]) -> Tuple[Jet2, ...]:
    """The vector v with ⟨v, w⟩ = det[a; b; c; w] for all w."""
    out = []
    for i in range(4):
        cols = [j for j in range(4) if j != i]
        minor = _det3([[row[j] for j in cols] for row in (a, b, c)])
        out.append(minor * (-1.0) ** (3 + i))
    return tuple(out)


@dataclass(frozen=True)
class S3Shape:
    psi: Tuple[Jet2, ...]
    N: Tuple[Jet2, ...]
    H: Jet2
    A0: Tuple[Jet2, Jet2, Jet2]
    g_inv: Tuple[Jet2, Jet2, Jet2]
    dpsi: Tuple[Tuple[Jet2, ...], Tuple[Jet2, ...]]


def s3_shape(psi: Sequence[Jet2], orientation: int = 1) -> S3Shape:
    order = min(c.order for c in psi)
    if order < 2:
        raise JetOrderError(f"S³ shape data needs jets of order >= 2, got {order}")
    psi = _trunc(psi, order)
    pu = tuple(c.dx() for c in psi)
    pv = tuple(c.dy() for c in psi)
    g11, g12, g22 = dot(pu, pu), dot(pu, pv), dot(pv, pv)
    det = g11 * g22 - g12 * g12
    if np.any(~(det.value > 0)):
        worst = float(np.min(det.value))
        raise DegenerateMetricError(f"Degenerate S³ chart: det g = {worst:.3e}", {"det_g": worst})
    inv_det = det.recip()
    g_inv = (g22 * inv_det, -(g12 * inv_det), g11 * inv_det)
    v = cross4(_trunc(psi, order - 1), pu, pv)
    scale = dot(v, v).power(-0.5) * float(orientation)
    N = tuple(c * scale for c in v)
    k = order - 2
    second = (tuple(c.dx() for c in pu), tuple(c.dy() for c in pu), tuple(c.dy() for c in pv))
    Nk = _trunc(N, k)
    A = tuple(dot(s, Nk) for s in second)
    ik = _trunc(g_inv, k)
    H = (ik[0] * A[0] + 2.0 * ik[1] * A[1] + ik[2] * A[2]) * 0.5
    gk = _trunc((g11, g12, g22), k)
    A0 = tuple(A[i] - H * gk[i] for i in range(3))
    return S3Shape(psi, N, H, A0, g_inv, (pu, pv))


def cgm_s3_from_shape(shape: S3Shape) -> LorentzJet:
    k = shape.H.order
    psi = _trunc(shape.psi, k)
    N = _trunc(shape.N, k)
    return tuple(shape.H * psi[a] + N[a] for a in range(4)) + (shape.H,)


def cgm_s3(chart: S3Chart, u, v, order: int = DEFAULT_ORDER, dtype=None) -> CgmSample:
    shape = s3_shape(chart.evaluate(u, v, order, dtype), chart.orientation)
    return CgmSample(cgm_s3_from_shape(shape), "S3", np.asarray(u), np.asarray(v))


def grad_cgm_s3_closed_form(shape: S3Shape) -> Tuple[np.ndarray, np.ndarray]:
    """∂_iY = (∂_iH_Ψ Ψ - Å_ij g^{jk}∂_kΨ, ∂_iH_Ψ) (values)."""
    k = shape.H.order
    if k < 1:
        raise JetOrderError("The closed-form S³ gradient needs H_Ψ as a jet of order >= 1")
    psi = values(shape.psi)
    i11, i12, i22 = (c.value for c in shape.g_inv)
    a11, a12, a22 = (c.value for c in shape.A0)
    pu, pv = values(shape.dpsi[0]), values(shape.dpsi[1])
    coeff = (((a11 * i11 + a12 * i12), (a11 * i12 + a12 * i22)),
             ((a12 * i11 + a22 * i12), (a12 * i12 + a22 * i22)))
    out = []
    for i, dh in enumerate((shape.H.dx().value, shape.H.dy().value)):
        tangent = coeff[i][0] * pu + coeff[i][1] * pv
        out.append(np.concatenate([dh * psi - tangent, dh[None]]))
    return out[0], out[1]


def _great_sphere(params: Sequence[float]) -> S3Chart:
    base = zoo("sphere")

    def evaluator(U, V):
        x, y, z = base.evaluate_jets(U, V)
        return x, y, z, 0.0 * U
    return S3Chart("great-sphere", base.domain, evaluator, conformal=True, mean_curvature=0.0)


def _latitude_sphere(params: Sequence[float]) -> S3Chart:
    (c,) = params
    if not -1.0 < c < 1.0:
        raise InvalidParameterError(f"latitude-sphere height must lie in (-1, 1), got {c}")
    s = math.sqrt(1.0 - c * c)
    base = zoo("sphere")

    def evaluator(U, V):
        x, y, z = base.evaluate_jets(U, V)
        return x * s, y * s, z * s, 0.0 * U + c
    return S3Chart(f"latitude-sphere({c:g})", base.domain, evaluator, conformal=True, mean_curvature=c / s)


def _clifford_torus(params: Sequence[float]) -> S3Chart:
    r = 1.0 / math.sqrt(2.0)

    def evaluator(U, V):
        return U.cos() * r, U.sin() * r, V.cos() * r, V.sin() * r
    return S3Chart("clifford-torus", Domain2.flat_torus(), evaluator, conformal=True, mean_curvature=0.0)


def _clifford_family(params: Sequence[float]) -> S3Chart:
    (a,) = params
    if not 0.0 < a < math.pi / 2.0:
        raise InvalidParameterError(f"clifford-family angle must lie in (0, π/2), got {a}")
    ca, sa = math.cos(a), math.sin(a)

    def evaluator(U, V):
        return U.cos() * ca, U.sin() * ca, V.cos() * sa, V.sin() * sa
    return S3Chart(f"clifford-family({a:g})", Domain2.flat_torus(), evaluator,
                   conformal=abs(ca - sa) < 1e-14)


S3_ZOO: Dict[str, Tuple[Callable[[Sequence[float]], S3Chart], Tuple[float, ...]]] = {
    "great-sphere": (_great_sphere, ()),
    "latitude-sphere": (_latitude_sphere, (0.5,)),
    "clifford-torus": (_clifford_torus, ()),
    "clifford-family": (_clifford_family, (math.pi / 6.0,)),
}


def s3_zoo(name: str, params: Sequence[float] = ()) -> S3Chart:
    try:
        build, defaults = S3_ZOO[name]
    except KeyError:
        raise UnknownSurfaceError(f"Unknown S³ surface {name!r}; known: {', '.join(S3_ZOO)}")
    params = tuple(float(p) for p in params) or defaults
    if len(params) != len(defaults):
        raise InvalidParameterError(f"{name} takes {len(defaults)} parameter(s), got {len(params)}")
    return build(params)


def project_s3_chart(chart: S3Chart) -> ImmersionChart:
    """π∘Ψ as an R³ chart with the same orientation."""
    base = chart.evaluator
    return ImmersionChart(
        label=f"π({chart.label})",
        domain=chart.domain,
        evaluator=lambda U, V: stereographic(base(U, V)),
        orientation=chart.orientation,
        conformal=chart.conformal,
    )


def model_deviation(chart: S3Chart, u, v, order: int = 3) -> float:
    """max |cgm_r3(π∘Ψ) - cgm_s3(Ψ)| relative to |Y|."""
    y_s3 = cgm_s3(chart, u, v, order).values
    y_r3 = cgm_r3(project_s3_chart(chart), u, v, order).values
    scale = np.maximum(1.0, np.sqrt(np.sum(y_s3 ** 2, axis=0)))
    return float(np.max(np.sqrt(np.sum((y_r3 - y_s3) ** 2, axis=0)) / scale))


# Oscillation

@dataclass(frozen=True)
class Oscillation:
    diameter: float
    envelope: float
    points: int


def oscillation(y: np.ndarray, m: Optional[LorentzMatrix] = None, chunk: int = 512) -> Oscillation:
    """sup |MY(x) - MY(y)| in the Euclidean norm of R⁵ over the sample cloud.

    ``envelope`` is the norm of the per-component ranges, an upper bound.
    """
    y = np.asarray(y, dtype=float).reshape(5, -1)
    if y.shape[1] == 0:
        raise DomainRangeError("Oscillation over an empty region")
    if m is not None:
        y = matrix_apply(m, y)
    pts = y.T
    diameter = 0.0
    for start in range(0, len(pts), chunk):
        diameter = max(diameter, float(np.max(cdist(pts[start:start + chunk], pts))))
    envelope = float(np.linalg.norm(np.ptp(y, axis=1)))
    return Oscillation(diameter, envelope, len(pts))


def annulus_cgm_values(chart: ImmersionChart, puncture: Puncture, r_outer: float, r_inner: float,
                       per_unit: int = 8, angles: int = 32) -> np.ndarray:
    """Y at sample points of the annulus r_inner <= |x| <= r_outer around a puncture."""
    if not 0 < r_inner < r_outer:
        raise DomainRangeError(f"Annulus needs 0 < r_inner < r_outer, got {r_inner}, {r_outer}")
    count = max(2, int(math.ceil(per_unit * math.log(r_outer / r_inner))) + 1)
    radii = np.exp(np.linspace(math.log(r_outer), math.log(r_inner), count))
    theta = np.linspace(0.0, 2.0 * math.pi, angles, endpoint=False)
    us, vs = [], []
    for r in radii:
        u, v = puncture.circle(float(r), theta)
        us.append(u)
        vs.append(v)
    u, v = np.concatenate(us), np.concatenate(vs)
    fields = evaluate_fields(lambda uc, vc: {"y": np.asarray(cgm_r3(chart, uc, vc, 2).values, dtype=float)},
                             [u, v])
    return fields["y"]


def oscillation_sweep(chart: ImmersionChart, s1: float, levels: Sequence[int],
                      puncture: Optional[Puncture] = None,
                      m: Optional[LorentzMatrix] = None) -> List[Tuple[float, Oscillation]]:
    """osc over B_{s1}∖B_s for s = 2^{-j}, j in ``levels``."""
    if puncture is None:
        puncture = next((p for p in chart.punctures if p.side is not None), None)
        if puncture is None:
            raise DomainRangeError(f"{chart.label} has no cylinder-end puncture")
    out = []
    for j in levels:
        s = 2.0 ** -j
        out.append((s, oscillation(annulus_cgm_values(chart, puncture, s1, s), m)))
    return out


def light_like_ratio(chart: ImmersionChart, u, v) -> np.ndarray:
    """|∇Y|_η / |∇Y|_ξ per point; tends to 0 where Y degenerates toward a null line."""
    sample = cgm_r3(chart, u, v, 3)
    du, dv = (values(d) for d in grad_cgm(sample))
    eta = np.abs(_eta_values(du, du) + _eta_values(dv, dv))
    xi = np.sum(du ** 2 + dv ** 2, axis=0)
    return np.sqrt(eta / np.maximum(xi, 1e-300))
