import math

import numpy as np
import pytest
from hypothesis import example, given, strategies as st

from ifslab.errors import DomainError
from ifslab.geometry import (ANNULUS, SQUARE, TORUS, CellIndex, Chart, ChartPoint, cell_center,
                             cell_of, cells_of, chart_distance, reduce)

CHARTS = [SQUARE, ANNULUS, TORUS]
unit = st.floats(0.0, 1.0)


def test_wrap_flags():
    assert SQUARE.periodic_axes == (False, False)
    assert ANNULUS.periodic_axes == (True, False)
    assert TORUS.periodic_axes == (True, True)
    assert Chart.from_name("Torus") is not None and str(Chart.from_name("torus")) == "torus"


def test_distance_examples():
    assert chart_distance(TORUS, (0.95, 0.5), (0.05, 0.5)) == pytest.approx(0.1)
    assert chart_distance(SQUARE, (0, 0), (1, 1)) == pytest.approx(math.sqrt(2))
    assert chart_distance(ANNULUS, ChartPoint(0.3, 0.2), ChartPoint(0.3, 0.2)) == 0.0
    # the annulus does not wrap y
    assert chart_distance(ANNULUS, (0.5, 0.95), (0.5, 0.05)) == pytest.approx(0.9)


def test_cell_examples():
    assert cell_of(SQUARE, (0.5, 0.5), 4) == CellIndex(2, 2)
    assert cell_of(TORUS, (1.0 - 1e-12, 0.0), 4) == CellIndex(3, 0)
    assert cell_of(SQUARE, (1.0, 1.0), 4) == CellIndex(3, 3)
    assert cell_of(ANNULUS, (1.0, 1.0), 4) == CellIndex(0, 3)
    assert cell_center(2, 1, 4) == ChartPoint(0.625, 0.375)


def test_reduce():
    assert reduce(TORUS, (1.25, -0.25)) == ChartPoint(0.25, 0.75)
    with pytest.raises(DomainError):
        reduce(ANNULUS, (0.5, 1.5))
    with pytest.raises(DomainError):
        reduce(SQUARE, (-0.1, 0.5))
    assert reduce(SQUARE, (1.0 + 1e-13, 0.5), tol=1e-12) == ChartPoint(1.0, 0.5)


def test_triangle_inequality_exact(rng):
    for chart in CHARTS:
        p, q, r = (rng.random((1000, 2)) for _ in range(3))
        assert np.all(chart_distance(chart, p, r) <= chart_distance(chart, p, q) + chart_distance(chart, q, r))


@given(st.sampled_from(CHARTS), unit, unit, st.integers(2, 200))
@example(ANNULUS, 0.9999999999999999, 0.0, 2)
def test_cells_in_range_and_wrap_stable(chart, x, y, N):
    i, j = cell_of(chart, (x, y), N)
    assert 0 <= i < N and 0 <= j < N
    shifted = [x + 1.0 if chart.periodic_axes[0] else x, y + 1.0 if chart.periodic_axes[1] else y]
    # adding 1 may round (1 - ulp + 1 == 2), so compare with the value it represents
    base = [v - 1.0 if per else v for v, per in zip(shifted, chart.periodic_axes)]
    assert cell_of(chart, reduce(chart, shifted), N) == cell_of(chart, reduce(chart, base), N)


@given(st.sampled_from(CHARTS), unit, unit, unit, unit)
def test_distance_symmetric(chart, a, b, c, d):
    assert chart_distance(chart, (a, b), (c, d)) == chart_distance(chart, (c, d), (a, b))
    assert chart_distance(chart, (a, b), (c, d)) >= 0.0


@given(st.sampled_from(CHARTS), unit, unit)
def test_reduce_idempotent(chart, x, y):
    p = reduce(chart, (x, y))
    assert reduce(chart, p) == p


def test_bulk_matches_single(rng):
    pts = rng.random((50, 2))
    idx = cells_of(TORUS, pts, 16)
    assert [tuple(r) for r in idx] == [tuple(cell_of(TORUS, p, 16)) for p in pts]
