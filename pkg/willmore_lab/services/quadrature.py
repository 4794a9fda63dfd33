"""Quadrature rules on chart parameter domains.

Periodic axes use the equispaced trapezoid rule. Other axes use composite
Gauss-Legendre with a fixed number of nodes per cell; axes that run into a
marked puncture are cut into cells no wider than ln 2 in the cylinder
coordinate, i.e. geometric in the radius with ratio at most 2.
"""
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import roots_legendre

NODES_PER_CELL = 16
GRADED_CELL_WIDTH = math.log(2.0)

Interval = Tuple[float, float]


@lru_cache(maxsize=None)
def legendre_nodes(n: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = roots_legendre(n)
    return np.asarray(nodes, dtype=float), np.asarray(weights, dtype=float)


@dataclass(frozen=True)
class AxisRule:
    nodes: np.ndarray
    weights: np.ndarray
    edges: np.ndarray
    periodic: bool
    nodes_per_cell: int

    @property
    def count(self) -> int:
        return len(self.nodes)


def trapezoid_rule(a: float, b: float, n: int) -> AxisRule:
    nodes = a + (b - a) * np.arange(n) / n
    weights = np.full(n, (b - a) / n)
    return AxisRule(nodes, weights, np.linspace(a, b, n + 1), True, 1)


def gauss_legendre_rule(edges: Sequence[float], nodes_per_cell: int = NODES_PER_CELL) -> AxisRule:
    edges = np.asarray(edges, dtype=float)
    x, w = legendre_nodes(nodes_per_cell)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return AxisRule(nodes, weights, edges, False, nodes_per_cell)


def gauss_legendre_pieces(lo: np.ndarray, hi: np.ndarray,
                          nodes_per_cell: int = NODES_PER_CELL) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of a fresh rule on each interval [lo_k, hi_k], shape (k, nodes)."""
    x, w = legendre_nodes(nodes_per_cell)
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    return mid[:, None] + half[:, None] * x[None, :], half[:, None] * w[None, :]


def cell_edges(a: float, b: float, count: int, graded: bool = False,
               nodes_per_cell: int = NODES_PER_CELL) -> np.ndarray:
    cells = max(1, count // nodes_per_cell)
    if graded:
        cells = max(cells, math.ceil((b - a) / GRADED_CELL_WIDTH - 1e-9))
    return np.linspace(a, b, cells + 1)


def axis_rule(interval: Interval, count: int, periodic: bool, graded: bool = False) -> AxisRule:
    a, b = interval
    if periodic:
        return trapezoid_rule(a, b, count)
    return gauss_legendre_rule(cell_edges(a, b, count, graded))


@dataclass(frozen=True)
class QuadratureGrid:
    axis_u: AxisRule
    axis_v: AxisRule

    @property
    def shape(self) -> Tuple[int, int]:
        return self.axis_u.count, self.axis_v.count

    def points(self) -> Tuple[np.ndarray, np.ndarray]:
        """Flattened node coordinates, u varying slowest."""
        u, v = np.meshgrid(self.axis_u.nodes, self.axis_v.nodes, indexing="ij")
        return u.ravel(), v.ravel()

    def weights(self) -> np.ndarray:
        return np.outer(self.axis_u.weights, self.axis_v.weights).ravel()

    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(np.asarray(values, dtype=float) * self.weights()))


def build_grid(u_range: Interval, v_range: Interval, periodic: Tuple[bool, bool],
               counts: Tuple[int, int], graded: bool = False,
               region: Optional[Tuple[Interval, Interval]] = None) -> QuadratureGrid:
    """Tensor grid over the domain, or over ``region`` when given.

    A periodic axis keeps the trapezoid rule only when the region spans the
    whole period. Grading applies to the first axis.
    """
    full_ranges = (tuple(u_range), tuple(v_range))
    ranges = full_ranges if region is None else (tuple(region[0]), tuple(region[1]))
    rules = []
    for axis in range(2):
        periodic_axis = periodic[axis] and ranges[axis] == full_ranges[axis]
        rules.append(axis_rule(ranges[axis], counts[axis], periodic_axis, graded and axis == 0))
    return QuadratureGrid(rules[0], rules[1])
