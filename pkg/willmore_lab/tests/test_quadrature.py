import math

import numpy as np
import pytest

from willmore_lab.services.parallel import evaluate_fields, map_chunks
from willmore_lab.services.quadrature import (
    GRADED_CELL_WIDTH,
    build_grid,
    cell_edges,
    gauss_legendre_pieces,
    gauss_legendre_rule,
    trapezoid_rule,
)


def test_trapezoid_is_spectral_on_periodic_functions():
    rule = trapezoid_rule(0.0, 2.0 * math.pi, 32)
    assert np.sum(rule.weights * np.cos(rule.nodes) ** 2) == pytest.approx(math.pi, rel=1e-14)
    assert np.sum(rule.weights * np.exp(np.sin(rule.nodes))) == pytest.approx(7.954926521012845, rel=1e-13)


def test_gauss_legendre_exact_for_polynomials():
    rule = gauss_legendre_rule(np.linspace(-1.0, 2.0, 4), nodes_per_cell=4)
    assert np.sum(rule.weights * rule.nodes ** 7) == pytest.approx((2.0 ** 8 - 1.0) / 8.0, rel=1e-13)
    assert rule.count == 12


def test_pieces_integrate_each_interval():
    nodes, weights = gauss_legendre_pieces(np.array([0.0, 1.0]), np.array([1.0, 3.0]), 8)
    totals = np.sum(weights * nodes ** 2, axis=1)
    np.testing.assert_allclose(totals, [1.0 / 3.0, 26.0 / 3.0], rtol=1e-13)


def test_graded_cells_are_at_most_ln2():
    edges = cell_edges(-12.0, 12.0, 32, graded=True)
    assert np.max(np.diff(edges)) <= GRADED_CELL_WIDTH + 1e-12
    assert len(cell_edges(-12.0, 12.0, 32)) == 3


def test_build_grid_region_drops_periodicity():
    grid = build_grid((0.0, 1.0), (0.0, 2.0 * math.pi), (False, True), (32, 16),
                      region=((0.2, 0.4), (1.0, 2.0)))
    assert not grid.axis_v.periodic
    u, v = grid.points()
    assert u.min() > 0.2 and u.max() < 0.4
    assert grid.integrate(np.ones_like(u)) == pytest.approx(0.2, rel=1e-13)


def test_chunked_evaluation_preserves_order(single_thread):
    x = np.arange(10.0)
    fields = evaluate_fields(lambda a: {"sq": a ** 2, "pair": np.stack([a, -a])}, [x], chunk_size=3)
    np.testing.assert_array_equal(fields["sq"], x ** 2)
    assert fields["pair"].shape == (2, 10)
    assert len(map_chunks(lambda a: a.sum(), [x], chunk_size=4)) == 3


def test_thread_count_does_not_change_sums(monkeypatch):
    from willmore_lab.config import get_settings

    x = np.linspace(0.0, 1.0, 10001)
    sums = []
    for threads in ("1", "4"):
        monkeypatch.setenv("WILLMORE_LAB_THREADS", threads)
        get_settings.cache_clear()
        sums.append(sum(map_chunks(lambda a: float(np.sum(np.sin(a))), [x], chunk_size=512)))
    get_settings.cache_clear()
    assert sums[0] == sums[1]
