"""Fundamental forms, curvatures, energies and first-variation checks of a chart.

Conventions: n = orientation · (Φ_u × Φ_v)/|Φ_u × Φ_v|, A_ij = ⟨∂_ijΦ, n⟩,
H = ½ g^{ij} A_ij, Å = A - H g. The outward unit sphere has H = -1.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from willmore_lab.exceptions import (
    DegenerateMetricError,
    GridTooCoarseError,
    InvalidParameterError,
    JetOrderError,
    NonConformalChartError,
    OverflowGuardError,
    SupportError,
    DomainRangeError,
)
from willmore_lab.services.jet_engine import (
    DEFAULT_ORDER,
    Jet2,
    cross3,
    dot,
    laplacian_flat,
    values,
)
from willmore_lab.services.parallel import evaluate_fields
from willmore_lab.services.quadrature import (
    QuadratureGrid,
    axis_rule,
    build_grid,
    cell_edges,
    gauss_legendre_pieces,
    gauss_legendre_rule,
)
from willmore_lab.services.surface_catalog import ImmersionChart, Puncture

logger = logging.getLogger(__name__)

CONFORMAL_ANISOTROPY = 1e-8
OVERFLOW_GUARD = 1e200
SCAN_FLOOR = 1e-10
RAW_TOLERANCE = 1e-12

Vec3 = Tuple[Jet2, Jet2, Jet2]
Sym2 = Tuple[Jet2, Jet2, Jet2]


def _trunc(jets: Iterable[Jet2], order: int) -> Tuple[Jet2, ...]:
    return tuple(j.truncate(order) for j in jets)


def _sym_product_trace(m: Sym2, g_inv: Sym2, other: Sym2) -> Jet2:
    """tr(g⁻¹ M g⁻¹ N) for symmetric M, N stored as (11, 12, 22)."""
    i11, i12, i22 = g_inv
    a11 = i11 * m[0] + i12 * m[1]
    a12 = i11 * m[1] + i12 * m[2]
    a21 = i12 * m[0] + i22 * m[1]
    a22 = i12 * m[1] + i22 * m[2]
    b11 = i11 * other[0] + i12 * other[1]
    b12 = i11 * other[1] + i12 * other[2]
    b21 = i12 * other[0] + i22 * other[1]
    b22 = i12 * other[1] + i22 * other[2]
    return a11 * b11 + a12 * b21 + a21 * b12 + a22 * b22


def _raise_both(m: Sym2, g_inv: Sym2) -> Sym2:
    """M^{ij} = g^{ik} M_kl g^{lj}."""
    i11, i12, i22 = g_inv
    a11 = i11 * m[0] + i12 * m[1]
    a12 = i11 * m[1] + i12 * m[2]
    a22 = i12 * m[1] + i22 * m[2]
    a21 = i12 * m[0] + i22 * m[1]
    return (a11 * i11 + a12 * i12, a11 * i12 + a12 * i22, a21 * i12 + a22 * i22)


@dataclass(frozen=True)
class ShapeData:
    """Pointwise geometry of a chart as jets.

    ``phi`` keeps the input order K; first derivatives, the metric and n have
    order K-1; second-fundamental-form quantities have order K-2.
    """
    phi: Vec3
    dphi: Tuple[Vec3, Vec3]
    g: Sym2
    det_g: Jet2
    g_inv: Sym2
    n: Vec3
    second: Tuple[Vec3, Vec3, Vec3]
    A: Sym2
    H: Jet2
    A0: Sym2
    A0_norm2: Jet2
    A_norm2: Jet2
    gauss: Jet2
    anisotropy: np.ndarray
    lam: Optional[Jet2]
    orientation: int = 1

    @property
    def order(self) -> int:
        return self.H.order

    @property
    def area_element(self) -> Jet2:
        return self.det_g.sqrt()

    @property
    def is_conformal(self) -> bool:
        return self.lam is not None

    def mean_curvature_vector(self) -> Vec3:
        n = _trunc(self.n, self.order)
        return tuple(self.H * c for c in n)

    def raised_traceless(self) -> Sym2:
        return _raise_both(self.A0, _trunc(self.g_inv, self.order))

    def shape_operator_on_tangent(self) -> Tuple[Vec3, Vec3]:
        """(Å∇Φ)_i = Å_ij g^{jk} ∂_kΦ, order K-2."""
        k = self.order
        i11, i12, i22 = _trunc(self.g_inv, k)
        pu, pv = _trunc(self.dphi[0], k), _trunc(self.dphi[1], k)
        a11, a12, a22 = self.A0
        c1 = (a11 * i11 + a12 * i12, a11 * i12 + a12 * i22)
        c2 = (a12 * i11 + a22 * i12, a12 * i12 + a22 * i22)
        return (
            tuple(c1[0] * pu[m] + c1[1] * pv[m] for m in range(3)),
            tuple(c2[0] * pu[m] + c2[1] * pv[m] for m in range(3)),
        )


def shape_from_jets(phi: Sequence[Jet2], orientation: int = 1) -> ShapeData:
    order = min(c.order for c in phi)
    if order < 2:
        raise JetOrderError(f"Shape data needs jets of order >= 2, got {order}")
    phi = _trunc(phi, order)
    pu = tuple(c.dx() for c in phi)
    pv = tuple(c.dy() for c in phi)
    g11, g12, g22 = dot(pu, pu), dot(pu, pv), dot(pv, pv)
    det = g11 * g22 - g12 * g12
    if np.any(~(det.value > 0)):
        worst = float(np.nanmin(det.value))
        raise DegenerateMetricError(f"Degenerate metric: det g = {worst:.3e}", {"det_g": worst})
    inv_det = det.recip()
    g_inv = (g22 * inv_det, -(g12 * inv_det), g11 * inv_det)
    normal = cross3(pu, pv)
    scale = inv_det.sqrt() * float(orientation)
    n = tuple(c * scale for c in normal)

    k = order - 2
    second = (
        tuple(c.dx() for c in pu),
        tuple(c.dy() for c in pu),
        tuple(c.dy() for c in pv),
    )
    n_k = _trunc(n, k)
    A = tuple(dot(s, n_k) for s in second)
    gk = _trunc((g11, g12, g22), k)
    ik = _trunc(g_inv, k)
    H = (ik[0] * A[0] + 2.0 * ik[1] * A[1] + ik[2] * A[2]) * 0.5
    A0 = tuple(A[i] - H * gk[i] for i in range(3))
    A0_norm2 = _sym_product_trace(A0, ik, A0)
    A_norm2 = _sym_product_trace(A, ik, A)
    gauss = (A[0] * A[2] - A[1] * A[1]) * inv_det.truncate(k)

    g11v, g12v, g22v = g11.value, g12.value, g22.value
    anisotropy = (np.abs(g11v - g22v) + 2.0 * np.abs(g12v)) / (g11v + g22v)
    lam = None
    if np.all(anisotropy <= CONFORMAL_ANISOTROPY):
        lam = ((g11 + g22) * 0.5).log() * 0.5
    return ShapeData(
        phi=phi, dphi=(pu, pv), g=(g11, g12, g22), det_g=det, g_inv=g_inv, n=n,
        second=second, A=A, H=H, A0=A0, A0_norm2=A0_norm2, A_norm2=A_norm2, gauss=gauss,
        anisotropy=anisotropy, lam=lam, orientation=orientation,
    )


def shape_at(chart: ImmersionChart, u, v, order: int = DEFAULT_ORDER, dtype=None) -> ShapeData:
    if order < 2:
        raise JetOrderError(f"shape_at needs order >= 2, got {order}")
    return shape_from_jets(chart.evaluate(u, v, order, dtype), chart.orientation)


# Second-order operators

def laplace_beltrami(f: Jet2, shape: ShapeData) -> Jet2:
    """(1/√g) ∂_i(√g g^{ij} ∂_j f) for any chart."""
    if f.order < 2:
        raise JetOrderError(f"Laplace-Beltrami needs a jet of order >= 2, got {f.order}")
    m = f.order - 1
    sqrt_g = shape.area_element.truncate(m)
    i11, i12, i22 = _trunc(shape.g_inv, m)
    fx, fy = f.dx(), f.dy()
    flux_x = sqrt_g * (i11 * fx + i12 * fy)
    flux_y = sqrt_g * (i12 * fx + i22 * fy)
    return (flux_x.dx() + flux_y.dy()) / sqrt_g.truncate(m - 1)


def conformal_laplacian(f: Jet2, shape: ShapeData) -> Jet2:
    """e^{-2λ} Δ_flat f on a conformal chart."""
    if shape.lam is None:
        raise NonConformalChartError("Conformal Laplacian on a chart that is not conformal")
    lap = laplacian_flat(f)
    return lap * (shape.lam.truncate(lap.order) * -2.0).exp()


@dataclass(frozen=True)
class WillmoreResidual:
    raw: np.ndarray
    scale: np.ndarray
    laplacian_H: np.ndarray

    def normalized(self, floor: float = 1e-14) -> np.ndarray:
        return np.abs(self.raw) / np.maximum(self.scale, floor)


def willmore_residual_from_shape(shape: ShapeData, conformal: bool = False) -> WillmoreResidual:
    if shape.order < 2:
        raise JetOrderError("The Willmore residual needs Φ jets of order >= 4")
    if conformal and shape.lam is not None:
        lap_h = conformal_laplacian(shape.H, shape)
    else:
        lap_h = laplace_beltrami(shape.H, shape)
    h, a0 = shape.H.value, shape.A0_norm2.value
    raw = lap_h.value + a0 * h
    return WillmoreResidual(raw, np.abs(lap_h.value) + np.abs(a0 * h), lap_h.value)


def willmore_residual(chart: ImmersionChart, u, v, order: int = DEFAULT_ORDER, dtype=None) -> WillmoreResidual:
    """Δ_gH + |Å|²H at the points (u, v)."""
    if order < 4:
        raise JetOrderError(f"The Willmore residual needs jet order >= 4, got {order}")
    return willmore_residual_from_shape(shape_at(chart, u, v, order, dtype), chart.conformal)


def sample_points(chart: ImmersionChart, counts: Tuple[int, int], exclusion: float = 1e-2,
                  rng: Optional[np.random.Generator] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Grid (or uniformly random, when ``rng`` is given) points outside the local
    disks of radius ``exclusion`` around the chart's punctures."""
    domain = chart.domain
    if rng is None:
        us = np.linspace(*domain.u_range, counts[0], endpoint=not domain.periodic[0])
        vs = np.linspace(*domain.v_range, counts[1], endpoint=not domain.periodic[1])
        u, v = (a.ravel() for a in np.meshgrid(us, vs, indexing="ij"))
    else:
        total = counts[0] * counts[1]
        u = rng.uniform(*domain.u_range, size=total)
        v = rng.uniform(*domain.v_range, size=total)
    keep = np.ones(u.shape, dtype=bool)
    for puncture in chart.punctures:
        keep &= puncture.local_radius(u, v) >= exclusion
    return u[keep], v[keep]


@dataclass(frozen=True)
class ResidualScan:
    max_normalized: float
    max_raw: float
    points: int
    normalized: np.ndarray = field(repr=False)


def willmore_scan(chart: ImmersionChart, counts: Tuple[int, int] = (48, 32), exclusion: float = 1e-2,
                  order: int = DEFAULT_ORDER, dtype=None) -> ResidualScan:
    """Residual over a sample grid away from punctures.

    Scales are floored at ``SCAN_FLOOR`` of the largest scale, and raw residuals below
    ``RAW_TOLERANCE`` of it count as zero.
    """
    u, v = sample_points(chart, counts, exclusion)

    def chunk(uc, vc):
        res = willmore_residual(chart, uc, vc, order, dtype)
        return {"raw": np.asarray(res.raw, dtype=float), "scale": np.asarray(res.scale, dtype=float)}

    fields = evaluate_fields(chunk, [u, v])
    top = float(np.max(fields["scale"]))
    raw = np.abs(fields["raw"])
    raw = np.where(raw <= RAW_TOLERANCE * top, 0.0, raw)
    normalized = raw / np.maximum(fields["scale"], max(SCAN_FLOOR * top, 1e-300))
    return ResidualScan(float(np.max(normalized)), float(np.max(np.abs(fields["raw"]))), len(u), normalized)


def gauss_map_residual(shape: ShapeData) -> np.ndarray:
    """|∂_i n + H ∂_iΦ + Å_ij g^{jk} ∂_kΦ| / |∇Φ|, maximized over i."""
    k = shape.order
    tangent = shape.shape_operator_on_tangent()
    worst = None
    grad_norm = np.sqrt(np.sum(values(shape.dphi[0]) ** 2 + values(shape.dphi[1]) ** 2, axis=0))
    for i, d in enumerate((lambda j: j.dx(), lambda j: j.dy())):
        dn = _trunc((d(c) for c in shape.n), k)
        dphi = _trunc(shape.dphi[i], k)
        res = values(tuple(dn[m] + shape.H * dphi[m] + tangent[i][m] for m in range(3)))
        r = np.sqrt(np.sum(res ** 2, axis=0)) / grad_norm
        worst = r if worst is None else np.maximum(worst, r)
    return worst


# Energies

ENERGY_KEYS = ("W", "E", "total_A", "area", "gauss_int")


def _energy_densities(chart: ImmersionChart, dtype=None):
    def chunk(u, v):
        shape = shape_at(chart, u, v, 2, dtype)
        sqrt_g = shape.area_element.value
        h = shape.H.value
        dens = {
            "W": h * h * sqrt_g,
            "E": shape.A0_norm2.value * sqrt_g,
            "total_A": shape.A_norm2.value * sqrt_g,
            "area": sqrt_g,
            "gauss_int": shape.gauss.value * sqrt_g,
        }
        return {k: np.asarray(val, dtype=float) for k, val in dens.items()}
    return chunk


def _guard(fields: Dict[str, np.ndarray], label: str) -> None:
    for key, arr in fields.items():
        bad = ~np.isfinite(arr) | (np.abs(arr) > OVERFLOW_GUARD)
        if np.any(bad):
            raise OverflowGuardError(
                f"{label}: {key} density is not integrable on this grid ({int(bad.sum())} bad samples)",
                {"quantity": key, "bad_samples": int(bad.sum())},
            )


def integrate_densities(chart: ImmersionChart, grid: QuadratureGrid, dtype=None) -> Dict[str, float]:
    u, v = grid.points()
    fields = evaluate_fields(_energy_densities(chart, dtype), [u, v])
    _guard(fields, chart.label)
    w = grid.weights()
    return {key: float(np.sum(fields[key] * w)) for key in ENERGY_KEYS}


def chart_grid(chart: ImmersionChart, counts: Tuple[int, int],
               region: Optional[Tuple[Tuple[float, float], Tuple[float, float]]] = None) -> QuadratureGrid:
    """Tensor grid over the chart, graded toward cylinder-end punctures."""
    graded = any(p.side is not None for p in chart.punctures)
    d = chart.domain
    return build_grid(d.u_range, d.v_range, d.periodic, counts, graded=graded, region=region)


@dataclass(frozen=True)
class EnergyReport:
    W: float
    E: float
    total_A: float
    area: float
    gauss_int: float
    grid: Tuple[int, int]
    nodes: Tuple[int, int]
    error: Dict[str, float]

    @property
    def euler_estimate(self) -> float:
        return self.gauss_int / (2.0 * math.pi)

    def as_dict(self) -> Dict[str, float]:
        return {key: getattr(self, key) for key in ENERGY_KEYS}


def energies(chart: ImmersionChart, counts: Tuple[int, int] = (128, 64), dtype=None) -> EnergyReport:
    """All energy integrals, with |value(grid) - value(half grid)| as error estimate."""
    fine_grid = chart_grid(chart, counts)
    coarse_counts = (max(counts[0] // 2, 4), max(counts[1] // 2, 4))
    fine = integrate_densities(chart, fine_grid, dtype)
    coarse = integrate_densities(chart, chart_grid(chart, coarse_counts), dtype)
    error = {key: abs(fine[key] - coarse[key]) for key in ENERGY_KEYS}
    logger.debug("Energies of %s on %s: %s", chart.label, fine_grid.shape, fine)
    return EnergyReport(grid=tuple(counts), nodes=fine_grid.shape, error=error, **fine)


def region_energy(chart: ImmersionChart, region, counts: Tuple[int, int], key: str = "total_A",
                  graded: bool = True) -> float:
    d = chart.domain
    grid = build_grid(d.u_range, d.v_range, d.periodic, counts, graded=graded, region=region)
    return integrate_densities(chart, grid)[key]


def annulus_energy(chart: ImmersionChart, rho: float, puncture: Optional[Puncture] = None,
                   key: str = "total_A") -> float:
    """∫|A|² dvol over the annulus ρ <= |x| <= 2ρ of a cylinder-end puncture."""
    if puncture is None:
        puncture = next((p for p in chart.punctures if p.side is not None), None)
        if puncture is None:
            raise DomainRangeError(f"{chart.label} has no cylinder-end puncture")
    lo, hi = puncture.shell(rho, 2.0 * rho)
    t_min, t_max = chart.domain.u_range
    if lo < t_min - 1e-12 or hi > t_max + 1e-12:
        raise DomainRangeError(
            f"Annulus rho={rho:g} lies outside {chart.label}'s chart [{t_min}, {t_max}]",
            {"rho": rho},
        )
    if rho < chart.exclusion_radius:
        raise DomainRangeError(f"Annulus rho={rho:g} is inside the exclusion radius", {"rho": rho})
    d = chart.domain
    u_rule = gauss_legendre_rule(np.linspace(lo, hi, 3))
    v_rule = axis_rule(d.v_range, 64, d.periodic[1])
    return integrate_densities(chart, QuadratureGrid(u_rule, v_rule))[key]


def dyadic_annulus_energies(chart: ImmersionChart, levels: Sequence[int],
                            puncture: Optional[Puncture] = None) -> List[float]:
    return [annulus_energy(chart, 2.0 ** -j, puncture) for j in levels]


# Monotonicity

@dataclass(frozen=True)
class BallIntegrals:
    area: float
    flux: float
    willmore: float
    unresolved: float


@dataclass(frozen=True)
class MonotonicityReport:
    t: float
    T: float
    lhs: float
    rhs: float
    tolerance: float
    holds: bool


_HERMITE_FRACTIONS = np.linspace(0.0, 1.0, 9)[1:-1]


def _hermite(f0, f1, d0, d1, h, s):
    """Cubic Hermite interpolant on [0, h] at fractions s (broadcast along a new last axis)."""
    s = s.reshape((1,) * np.ndim(f0) + (-1,))
    f0, f1, d0, d1, h = (np.expand_dims(a, -1) for a in (f0, f1, d0, d1, h))
    h00 = 2 * s ** 3 - 3 * s ** 2 + 1
    h10 = s ** 3 - 2 * s ** 2 + s
    h01 = -2 * s ** 3 + 3 * s ** 2
    h11 = s ** 3 - s ** 2
    return h00 * f0 + h10 * h * d0 + h01 * f1 + h11 * h * d1


class MonotonicityProbe:
    """Ball integrals ∫_{M∩B(x0,R)} over a chart, computed by cutting parameter lines.

    Along each line of the first coordinate the indicator |Φ - x0| < R is
    resolved exactly: fully inside cells use their Gauss nodes, cells crossed by
    the sphere get their crossings by safeguarded Newton and a fresh rule on each
    inside piece.
    """

    NEWTON_STEPS = 60

    def __init__(self, chart: ImmersionChart, x0: Sequence[float], counts: Tuple[int, int] = (256, 128),
                 dtype=None):
        self.chart = chart
        self.x0 = np.asarray(x0, dtype=float)
        self.dtype = dtype
        d = chart.domain
        graded = any(p.side is not None for p in chart.punctures)
        self.axis_u = gauss_legendre_rule(cell_edges(*d.u_range, counts[0], graded))
        self.axis_v = axis_rule(d.v_range, counts[1], d.periodic[1])
        self.cells = len(self.axis_u.edges) - 1
        self.q = self.axis_u.nodes_per_cell
        self._cache: Dict[float, BallIntegrals] = {}

        u, v = np.meshgrid(self.axis_u.nodes, self.axis_v.nodes, indexing="ij")
        fields = evaluate_fields(self._node_fields, [u.ravel(), v.ravel()])
        shape = (self.cells, self.q, len(self.axis_v.nodes))
        self.nodes = {k: a.reshape(a.shape[:-1] + shape) for k, a in fields.items()}
        ue, ve = np.meshgrid(self.axis_u.edges, self.axis_v.nodes, indexing="ij")
        edge_fields = evaluate_fields(self._edge_fields, [ue.ravel(), ve.ravel()])
        eshape = (self.cells + 1, len(self.axis_v.nodes))
        self.edges = {k: a.reshape(a.shape[:-1] + eshape) for k, a in edge_fields.items()}

    def _densities(self, shape: ShapeData) -> Dict[str, np.ndarray]:
        x = values(shape.phi)
        hn = values(shape.mean_curvature_vector())
        sqrt_g = shape.area_element.value
        h = shape.H.value
        rel = x - self.x0.reshape(3, *([1] * (x.ndim - 1)))
        return {
            "x": np.asarray(x, dtype=float),
            "du": np.asarray(values(shape.dphi[0]), dtype=float),
            "area": np.asarray(sqrt_g, dtype=float),
            "flux": np.asarray(np.sum(rel * hn, axis=0) * sqrt_g, dtype=float),
            "willmore": np.asarray(h * h * sqrt_g, dtype=float),
        }

    def _node_fields(self, u, v):
        return self._densities(shape_at(self.chart, u, v, 2, self.dtype))

    def _edge_fields(self, u, v):
        phi = self.chart.evaluate(u, v, 1, self.dtype)
        du = tuple(c.dx() for c in phi)
        dv = tuple(c.dy() for c in phi)
        cr = values(cross3(du, dv))
        return {
            "x": np.asarray(values(phi), dtype=float),
            "du": np.asarray(values(du), dtype=float),
            "area": np.sqrt(np.sum(cr ** 2, axis=0)).astype(float),
        }

    def _f(self, x: np.ndarray, du: np.ndarray, radius: float) -> Tuple[np.ndarray, np.ndarray]:
        rel = x - self.x0.reshape(3, *([1] * (x.ndim - 1)))
        return np.sum(rel * rel, axis=0) - radius * radius, 2.0 * np.sum(rel * du, axis=0)

    def _crossings(self, lo: np.ndarray, hi: np.ndarray, v: np.ndarray, f_lo: np.ndarray,
                   radius: float) -> np.ndarray:
        lo, hi = lo.copy(), hi.copy()
        x = 0.5 * (lo + hi)
        lo_inside = f_lo <= 0
        for _ in range(self.NEWTON_STEPS):
            phi = self.chart.evaluate(x, v, 1, self.dtype)
            f, df = self._f(np.asarray(values(phi), dtype=float),
                            np.asarray(values(tuple(c.dx() for c in phi)), dtype=float), radius)
            same = (f <= 0) == lo_inside
            lo = np.where(same, x, lo)
            hi = np.where(same, hi, x)
            with np.errstate(divide="ignore", invalid="ignore"):
                newton = x - f / df
            ok = np.isfinite(newton) & (newton > lo) & (newton < hi)
            x_new = np.where(ok, newton, 0.5 * (lo + hi))
            if np.all(np.abs(x_new - x) <= 1e-15 * (1.0 + np.abs(x))):
                x = x_new
                break
            x = x_new
        return x

    def ball(self, radius: float) -> BallIntegrals:
        radius = float(radius)
        if radius in self._cache:
            return self._cache[radius]
        f_nodes, d_nodes = self._f(self.nodes["x"], self.nodes["du"], radius)
        f_edges, d_edges = self._f(self.edges["x"], self.edges["du"], radius)
        rows = len(self.axis_v.nodes)
        edges = self.axis_u.edges
        cell_nodes = self.axis_u.nodes.reshape(self.cells, self.q)
        cell_weights = self.axis_u.weights.reshape(self.cells, self.q)
        v_weights = self.axis_v.weights

        # Samples per (cell, row): left edge, nodes, right edge.
        pos = np.concatenate([edges[:-1, None], cell_nodes, edges[1:, None]], axis=1)
        f = np.concatenate([f_edges[:-1, None, :], f_nodes, f_edges[1:, None, :]], axis=1)
        df = np.concatenate([d_edges[:-1, None, :], d_nodes, d_edges[1:, None, :]], axis=1)
        dens_area = np.concatenate([self.edges["area"][:-1, None, :], self.nodes["area"],
                                    self.edges["area"][1:, None, :]], axis=1)
        inside = f <= 0
        all_in = np.all(inside, axis=1)
        mixed = np.any(inside, axis=1) & ~all_in

        totals = {}
        w_full = cell_weights[:, :, None] * v_weights[None, None, :]
        for key in ("area", "flux", "willmore"):
            totals[key] = float(np.sum(self.nodes[key] * w_full * all_in[:, None, :]))

        # Sign-preserving sample pairs whose Hermite interpolant changes sign are unresolved.
        h = np.diff(pos, axis=1)[:, :, None] * np.ones((1, 1, rows))
        hermite = _hermite(f[:, :-1], f[:, 1:], df[:, :-1], df[:, 1:], h, _HERMITE_FRACTIONS)
        same = inside[:, :-1] == inside[:, 1:]
        flip = np.where(inside[:, :-1, :, None], hermite > 0, hermite <= 0).any(axis=-1)
        bad = same & flip
        unresolved = float(np.sum(bad * h * 0.5 * (dens_area[:, :-1] + dens_area[:, 1:]) * v_weights))

        cell_idx, row_idx = np.nonzero(mixed)
        if len(cell_idx):
            pieces_lo, pieces_hi, piece_v, piece_w = [], [], [], []
            change = inside[cell_idx, :-1, row_idx] != inside[cell_idx, 1:, row_idx]
            pair_i, pair_k = np.nonzero(change)
            lo = pos[cell_idx[pair_i], pair_k]
            hi = pos[cell_idx[pair_i], pair_k + 1]
            vv = self.axis_v.nodes[row_idx[pair_i]]
            roots = self._crossings(lo, hi, vv, f[cell_idx[pair_i], pair_k, row_idx[pair_i]], radius)
            for m, (c, r) in enumerate(zip(cell_idx, row_idx)):
                cuts = np.sort(roots[pair_i == m])
                breaks = np.concatenate([[edges[c]], cuts, [edges[c + 1]]])
                state = bool(inside[c, 0, r])
                for a, b in zip(breaks[:-1], breaks[1:]):
                    if state and b > a:
                        pieces_lo.append(a)
                        pieces_hi.append(b)
                        piece_v.append(self.axis_v.nodes[r])
                        piece_w.append(v_weights[r])
                    state = not state
            if pieces_lo:
                nodes, weights = gauss_legendre_pieces(np.array(pieces_lo), np.array(pieces_hi), self.q)
                pv = np.repeat(np.array(piece_v), self.q)
                weights = (weights * np.array(piece_w)[:, None]).ravel()
                fields = evaluate_fields(self._node_fields, [nodes.ravel(), pv])
                for key in ("area", "flux", "willmore"):
                    totals[key] += float(np.sum(fields[key] * weights))

        result = BallIntegrals(totals["area"], totals["flux"], totals["willmore"], unresolved)
        if unresolved > 0.05 * max(result.area, 1e-300):
            raise GridTooCoarseError(
                f"Ball of radius {radius:g} is under-resolved: boundary cells carry "
                f"{unresolved:.3g} against area {result.area:.3g}",
                {"radius": radius, "unresolved": unresolved, "area": result.area},
            )
        self._cache[radius] = result
        return result

    def area_density(self, radius: float) -> float:
        """R⁻² Area(M ∩ B(x0, R)) / π."""
        return self.ball(radius).area / (math.pi * radius * radius)


def monotonicity_check(chart: ImmersionChart, x0: Sequence[float], t: float, T: float,
                       counts: Tuple[int, int] = (256, 128),
                       probe: Optional[MonotonicityProbe] = None) -> MonotonicityReport:
    """T⁻²A_T - t⁻²A_t ≥ -¼∫_{B_T∖B_t}H² - T⁻²∫_{B_T}⟨x-x0, H⃗⟩ + t⁻²∫_{B_t}⟨x-x0, H⃗⟩."""
    if not 0 < t < T:
        raise InvalidParameterError(f"Monotonicity needs 0 < t < T, got t={t}, T={T}", {"t": t, "T": T})
    probe = probe or MonotonicityProbe(chart, x0, counts)
    inner, outer = probe.ball(t), probe.ball(T)
    lhs = outer.area / T ** 2 - inner.area / t ** 2
    rhs = -0.25 * (outer.willmore - inner.willmore) - outer.flux / T ** 2 + inner.flux / t ** 2
    tolerance = 1e-5 * max(1.0, outer.area / T ** 2)
    return MonotonicityReport(t, T, lhs, rhs, tolerance, bool(lhs >= rhs - tolerance))


def monotonicity_sweep(probe: MonotonicityProbe, outer_radii: Sequence[float],
                       inner_fractions: Sequence[float]) -> List[MonotonicityReport]:
    return [
        monotonicity_check(probe.chart, probe.x0, T * s, T, probe=probe)
        for T in outer_radii for s in inner_fractions
    ]


# Test fields and the weak form

Region = Tuple[Tuple[float, float], Tuple[float, float]]


def _bump(s: Jet2) -> Jet2:
    """(1 - s²)³ for |s| < 1, zero outside."""
    core = (1.0 - s * s) ** 3
    mask = (np.abs(s.value) < 1.0).astype(core.dtype)
    return Jet2(core.coeffs * mask, core.order)


def _direction(bump: Jet2, direction, normal: Vec3) -> Vec3:
    if isinstance(direction, str):
        if direction != "normal":
            raise InvalidParameterError(f"Unknown test-field direction {direction!r}")
        order = min(bump.order, normal[0].order)
        b = bump.truncate(order)
        return tuple(b * c.truncate(order) for c in normal)
    return tuple(bump * float(c) for c in direction)


@dataclass(frozen=True)
class BumpField:
    """Tensor bump (1-s²)³(1-σ²)³ centred at ``center`` times a direction."""
    center: Tuple[float, float]
    half_width: Tuple[float, float]
    direction: Union[str, Tuple[float, float, float]] = "normal"
    amplitude: float = 1.0

    def region(self) -> Region:
        (u0, v0), (a, b) = self.center, self.half_width
        return (u0 - a, u0 + a), (v0 - b, v0 + b)

    def check_support(self, chart: ImmersionChart) -> None:
        d = chart.domain
        (ulo, uhi), (vlo, vhi) = self.region()
        for axis, (lo, hi), rng in ((0, (ulo, uhi), d.u_range), (1, (vlo, vhi), d.v_range)):
            if d.periodic[axis]:
                if hi - lo >= rng[1] - rng[0]:
                    raise SupportError("Test field wraps all the way around a periodic axis")
            elif lo <= rng[0] or hi >= rng[1]:
                raise SupportError(
                    f"Test field support [{lo:g}, {hi:g}] touches the chart boundary [{rng[0]:g}, {rng[1]:g}]"
                )

    def jets(self, U: Jet2, V: Jet2, normal: Vec3) -> Vec3:
        (u0, v0), (a, b) = self.center, self.half_width
        bump = _bump((U - u0) * (1.0 / a)) * _bump((V - v0) * (1.0 / b)) * self.amplitude
        return _direction(bump, self.direction, normal)


@dataclass(frozen=True)
class PunctureBumpField:
    """b(r/ρ) in the local disk coordinate of a '+' end, so it does not vanish at the puncture."""
    rho: float
    direction: Union[str, Tuple[float, float, float]] = (0.0, 0.0, 1.0)
    t_max: float = 12.0
    amplitude: float = 1.0

    def region(self) -> Region:
        return (-math.log(self.rho), self.t_max), (0.0, 2.0 * math.pi)

    def check_support(self, chart: ImmersionChart) -> None:
        t_min = chart.domain.u_range[0]
        if -math.log(self.rho) <= t_min:
            raise SupportError(f"Puncture bump of radius {self.rho:g} leaves the chart")

    def jets(self, U: Jet2, V: Jet2, normal: Vec3) -> Vec3:
        r = (-U).exp() * (1.0 / self.rho)
        return _direction(_bump(r) * self.amplitude, self.direction, normal)


@dataclass(frozen=True)
class SumField:
    """Σ cᵢ wᵢ over ``parts``; the support is the box around every part's support."""
    parts: Tuple["TestField", ...]
    weights: Tuple[float, ...] = ()

    def __post_init__(self):
        if not self.parts:
            raise InvalidParameterError("A summed test field needs at least one part")
        if self.weights and len(self.weights) != len(self.parts):
            raise InvalidParameterError(
                f"{len(self.weights)} weights for {len(self.parts)} test-field parts")

    @property
    def coefficients(self) -> Tuple[float, ...]:
        return tuple(float(c) for c in self.weights) if self.weights else (1.0,) * len(self.parts)

    @property
    def graded(self) -> bool:
        return any(_graded(p) for p in self.parts)

    def region(self) -> Region:
        boxes = [p.region() for p in self.parts]
        return tuple((min(b[axis][0] for b in boxes), max(b[axis][1] for b in boxes)) for axis in (0, 1))

    def check_support(self, chart: ImmersionChart) -> None:
        for part in self.parts:
            part.check_support(chart)

    def jets(self, U: Jet2, V: Jet2, normal: Vec3) -> Vec3:
        terms = [part.jets(U, V, normal) for part in self.parts]
        k = min(c.order for w in terms for c in w)
        terms = [_trunc(w, k) for w in terms]
        return tuple(sum((w[m] * c for w, c in zip(terms[1:], self.coefficients[1:])),
                         terms[0][m] * self.coefficients[0]) for m in range(3))


TestField = Union[BumpField, PunctureBumpField, SumField]


def _graded(field_: TestField) -> bool:
    """Fields reaching a puncture need the geometric grid."""
    if isinstance(field_, SumField):
        return field_.graded
    return isinstance(field_, PunctureBumpField)


WEAK_FORMS = ("covariant", "conservation", "literal", "strong")


def _weak_densities(chart: ImmersionChart, field_: TestField, dtype=None):
    orientation = float(chart.orientation)

    def chunk(u, v):
        U, V = Jet2.coordinates(u, v, 4, dtype)
        chart.check_points(u, v)
        shape = shape_from_jets(chart.evaluate_jets(U, V), chart.orientation)
        w = _trunc(field_.jets(U.truncate(3), V.truncate(3), shape.n), 2)
        k1 = 1
        wx = _trunc((c.dx() for c in w), k1)
        wy = _trunc((c.dy() for c in w), k1)
        n1 = _trunc(shape.n, k1)
        sqrt_g = shape.area_element.value
        H = shape.H.truncate(2)
        Hv = H.value
        nv = values(shape.n)
        hn = Hv * nv
        wxv, wyv = values(wx), values(wy)

        # covariant
        i11, i12, i22 = (c.value for c in shape.g_inv)
        hx, hy = H.dx().value, H.dy().value
        grad_h = (i11 * hx + i12 * hy, i12 * hx + i22 * hy)
        n_wx, n_wy = np.sum(nv * wxv, axis=0), np.sum(nv * wyv, axis=0)
        r11, r12, r22 = (c.value for c in shape.raised_traceless())
        pu, pv = values(shape.dphi[0]), values(shape.dphi[1])
        pair = lambda a, b: np.sum(a * b, axis=0)
        tangential = (r11 * pair(pu, wxv) + r12 * pair(pv, wxv)
                      + r12 * pair(pu, wyv) + r22 * pair(pv, wyv))
        covariant = (-(grad_h[0] * n_wx + grad_h[1] * n_wy) - Hv * tangential) * sqrt_g

        # flat-operator forms
        lap_w = values(tuple(laplacian_flat(c) for c in w))
        px = dot(n1, wx)
        py = dot(n1, wy)
        div_proj = values(tuple((px * n1[m]).dx() + (py * n1[m]).dy() for m in range(3)))
        nx = values(tuple(c.dx() for c in shape.n))
        ny = values(tuple(c.dy() for c in shape.n))
        twist = pair(np.cross(-ny, hn, axis=0), wxv) + pair(np.cross(nx, hn, axis=0), wyv)
        bracket = pair(hn, lap_w - 3.0 * div_proj)
        conservation = 0.5 * (-bracket + orientation * twist)
        literal = (bracket + twist) * sqrt_g

        res = willmore_residual_from_shape(shape, chart.conformal and shape.lam is not None)
        strong = res.raw * pair(values(w), nv) * sqrt_g

        c2 = np.zeros(np.shape(u))
        for comp in w:
            for a in range(3):
                for b in range(3 - a):
                    c2 = np.maximum(c2, np.abs(comp.partial(a, b)))
        out = {"covariant": covariant, "conservation": conservation, "literal": literal,
               "strong": strong, "c2": c2}
        return {k: np.asarray(val, dtype=float) for k, val in out.items()}
    return chunk


def _field_grid(chart: ImmersionChart, field_: TestField, counts: Tuple[int, int]) -> QuadratureGrid:
    d = chart.domain
    return build_grid(d.u_range, d.v_range, d.periodic, counts, graded=_graded(field_), region=field_.region())


@dataclass(frozen=True)
class WeakFormReport:
    forms: Dict[str, float]
    c2_norm: float
    default_form: str

    @property
    def value(self) -> float:
        return self.forms[self.default_form]


def weak_form_report(chart: ImmersionChart, field_: TestField, counts: Tuple[int, int] = (64, 64),
                     dtype=None) -> WeakFormReport:
    field_.check_support(chart)
    grid = _field_grid(chart, field_, counts)
    u, v = grid.points()
    fields = evaluate_fields(_weak_densities(chart, field_, dtype), [u, v])
    w = grid.weights()
    forms = {key: float(np.sum(fields[key] * w)) for key in WEAK_FORMS}
    default = "conservation" if chart.conformal else "covariant"
    return WeakFormReport(forms, float(np.max(fields["c2"])), default)


def weak_form_pairing(chart: ImmersionChart, field_: TestField, counts: Tuple[int, int] = (64, 64),
                      form: str = "auto", dtype=None) -> float:
    """δW(Φ)·w by quadrature over the support of w."""
    if form not in WEAK_FORMS + ("auto",):
        raise InvalidParameterError(f"Unknown weak form {form!r}; expected one of {WEAK_FORMS}")
    if form in ("conservation", "literal") and not chart.conformal:
        raise NonConformalChartError(f"The {form} form needs a conformal chart; {chart.label} is not")
    report = weak_form_report(chart, field_, counts, dtype)
    return report.value if form == "auto" else report.forms[form]


def first_variation_fd(chart: ImmersionChart, field_: TestField, counts: Tuple[int, int] = (64, 64),
                       steps: Tuple[float, float] = (1e-3, 1e-4), dtype=None) -> float:
    """Richardson-extrapolated central difference of W(Φ + s w) over the support of w."""
    field_.check_support(chart)
    grid = _field_grid(chart, field_, counts)
    u, v = grid.points()
    signed = [s for h in steps for s in (h, -h)]

    def chunk(uc, vc):
        U, V = Jet2.coordinates(uc, vc, 3, dtype)
        chart.check_points(uc, vc)
        phi = chart.evaluate_jets(U, V)
        normal = shape_from_jets(phi, chart.orientation).n
        w = _trunc(field_.jets(U, V, normal), 2)
        base = _trunc(phi, 2)
        out = {}
        for s in signed:
            moved = shape_from_jets(tuple(base[m] + w[m] * s for m in range(3)), chart.orientation)
            out[repr(s)] = np.asarray(moved.H.value ** 2 * moved.area_element.value, dtype=float)
        return out

    fields = evaluate_fields(chunk, [u, v])
    weights = grid.weights()
    W = {s: float(np.sum(fields[repr(s)] * weights)) for s in signed}
    coarse, fine = steps
    d_coarse = (W[coarse] - W[-coarse]) / (2.0 * coarse)
    d_fine = (W[fine] - W[-fine]) / (2.0 * fine)
    ratio = (coarse / fine) ** 2
    return (ratio * d_fine - d_coarse) / (ratio - 1.0)
