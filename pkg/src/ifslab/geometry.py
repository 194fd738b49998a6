"""Charts, points and grid cells for the unit square, flat annulus and flat torus.

All charts are unit-normalized. Points are handled either one at a time as
:class:`ChartPoint` or in bulk as float arrays of shape ``(n, 2)``; every
function here accepts both.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError


class ChartKind(enum.Enum):
    SQUARE = "square"
    ANNULUS = "annulus"
    TORUS = "torus"


@dataclass(frozen=True)
class Chart:
    kind: ChartKind

    @property
    def periodic_axes(self) -> tuple[bool, bool]:
        if self.kind is ChartKind.SQUARE:
            return (False, False)
        if self.kind is ChartKind.ANNULUS:
            return (True, False)
        return (True, True)

    @property
    def wrap_mask(self) -> np.ndarray:
        return np.array(self.periodic_axes)

    @classmethod
    def from_name(cls, name: str) -> "Chart":
        return cls(ChartKind(name.lower()))

    def __str__(self):
        return self.kind.value


SQUARE = Chart(ChartKind.SQUARE)
ANNULUS = Chart(ChartKind.ANNULUS)
TORUS = Chart(ChartKind.TORUS)


class ChartPoint(NamedTuple):
    x: float
    y: float


class CellIndex(NamedTuple):
    i: int
    j: int


def as_array(p) -> np.ndarray:
    """View ``p`` as a float array of shape (n, 2)."""
    a = np.asarray(p, dtype=float)
    if a.ndim == 1:
        a = a.reshape(1, 2)
    if a.ndim != 2 or a.shape[1] != 2:
        raise ValueError(f"expected points of shape (n, 2), got {a.shape}")
    return a


def _like(template, a: np.ndarray):
    """Return ``a`` in the same flavor (ChartPoint / 1-D / 2-D) as ``template``."""
    if isinstance(template, ChartPoint) or (isinstance(template, tuple) and len(template) == 2
                                           and np.ndim(template[0]) == 0):
        return ChartPoint(float(a[0, 0]), float(a[0, 1]))
    if np.ndim(template) == 1:
        return a[0]
    return a


def reduce(chart: Chart, p, tol: float = 0.0):
    """Wrap periodic coordinates into [0, 1) and validate the others.

    Unwrapped coordinates must lie in [0, 1]; values within ``tol`` outside
    are clipped, anything further raises :class:`DomainError`.
    """
    a = as_array(p).copy()
    for axis, wrapped in enumerate(chart.periodic_axes):
        col = a[:, axis]
        if not np.all(np.isfinite(col)):
            raise DomainError("non-finite coordinate")
        if wrapped:
            col = np.mod(col, 1.0)
            # mod can round 1 - tiny up to exactly 1.0
            col[col >= 1.0] = 0.0
        else:
            if np.any(col < -tol) or np.any(col > 1.0 + tol):
                bad = a[(col < -tol) | (col > 1.0 + tol)][0]
                raise DomainError(f"point {tuple(bad)} outside {chart} chart")
            col = np.clip(col, 0.0, 1.0)
        a[:, axis] = col
    return _like(p, a)


def wrapped_delta(chart: Chart, d: np.ndarray) -> np.ndarray:
    """Shortest representative of coordinate differences ``d`` (shape (n, 2))."""
    d = np.array(d, dtype=float, copy=True)
    for axis, wrapped in enumerate(chart.periodic_axes):
        if wrapped:
            d[..., axis] = d[..., axis] - np.round(d[..., axis])
    return d


def chart_distance(chart: Chart, p, q):
    """Euclidean distance using the shortest representative on wrapped axes."""
    a, b = as_array(p), as_array(q)
    d = np.abs(a - b)
    for axis, wrapped in enumerate(chart.periodic_axes):
        if wrapped:
            da = np.mod(d[:, axis], 1.0)
            d[:, axis] = np.minimum(da, 1.0 - da)
    out = np.hypot(d[:, 0], d[:, 1])
    if np.ndim(p) == 1 or isinstance(p, tuple):
        return float(out[0])
    return out


def cells_of(chart: Chart, xy, N: int) -> np.ndarray:
    """Integer cell indices, shape (n, 2), for an array of points."""
    if N < 2:
        raise ValueError("resolution must be at least 2")
    a = as_array(xy)
    idx = np.floor(a * N).astype(np.int64)
    for axis, wrapped in enumerate(chart.periodic_axes):
        if wrapped:
            idx[:, axis] = np.mod(idx[:, axis], N)
        else:
            # x = 1 belongs to the last cell
            idx[:, axis] = np.clip(idx[:, axis], 0, N - 1)
    return idx


def cell_of(chart: Chart, p, N: int) -> CellIndex:
    i, j = cells_of(chart, p, N)[0]
    return CellIndex(int(i), int(j))


def cell_center(i, j, N: int) -> ChartPoint:
    return ChartPoint((i + 0.5) / N, (j + 0.5) / N)


def cell_centers(idx: np.ndarray, N: int) -> np.ndarray:
    return (np.asarray(idx, dtype=float) + 0.5) / N
