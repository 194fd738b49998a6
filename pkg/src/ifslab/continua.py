"""Rasterized continua on square / annulus grids and their frontier topology.

Conventions
-----------
* Masks are boolean arrays indexed ``mask[i, j]`` with ``i`` the x cell and
  ``j`` the y cell, so ``mask.shape == (N, N)``.
* Continua are 4-connected; complements are labeled with 8-connectivity.
* On the annulus the x axis wraps; labeling merges pieces across the seam
  and tracks how many times a component winds around it.
* An ambient band is a pair ``(y_lo, y_hi)`` of chart coordinates; its rows
  are ``cell(y_lo) .. cell(y_hi)`` inclusive.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from .errors import (ColumnMiss, FamilyError, MarginViolation, NotAnnular, NotConnected,
                     NotEmptyInterior, OrderInconsistent)
from .geometry import ANNULUS, SQUARE, Chart, as_array, cells_of

FOUR = ndimage.generate_binary_structure(2, 1)
EIGHT = ndimage.generate_binary_structure(2, 2)


# ---------------------------------------------------------------- labeling

def label(mask: np.ndarray, wrap_x: bool, connectivity: int = 8):
    """Connected components of ``mask`` with optional x-seam merging.

    Returns ``(labels, count, winds)`` where ``labels`` uses 1..count and
    ``winds[k]`` tells whether component ``k+1`` contains a loop around the
    seam (only meaningful when ``wrap_x``).
    """
    structure = EIGHT if connectivity == 8 else FOUR
    pieces, n = ndimage.label(mask, structure=structure)
    parent = list(range(n + 1))
    offset = [0] * (n + 1)  # lift of piece relative to parent
    winds_root = set()

    def find(a):
        if parent[a] == a:
            return a, 0
        root, off = find(parent[a])
        parent[a] = root
        offset[a] += off
        return root, offset[a]

    if wrap_x and n:
        N = mask.shape[0]
        last, first = pieces[N - 1], pieces[0]
        dj = (-1, 0, 1) if connectivity == 8 else (0,)
        H = mask.shape[1]
        edges = set()
        for d in dj:
            lo, hi = max(0, -d), min(H, H - d)
            a = last[lo:hi]
            b = first[lo + d:hi + d]
            both = (a > 0) & (b > 0)
            edges.update(zip(a[both].tolist(), b[both].tolist()))
        # crossing from column N-1 to column 0 raises the lift by one
        for a, b in sorted(edges):
            ra, oa = find(a)
            rb, ob = find(b)
            if ra == rb:
                if ob != oa + 1:
                    winds_root.add(ra)
                continue
            parent[rb] = ra
            offset[rb] = oa + 1 - ob
            if rb in winds_root:
                winds_root.add(ra)

    roots = {}
    relabel = np.zeros(n + 1, dtype=np.int64)
    winds = []
    for a in range(1, n + 1):
        r, _ = find(a)
        if r not in roots:
            roots[r] = len(roots) + 1
            winds.append(False)
        relabel[a] = roots[r]
    for r in winds_root:
        root, _ = find(r)
        winds[roots[root] - 1] = True
    return relabel[pieces], len(roots), winds


def _shift(mask: np.ndarray, di: int, dj: int, wrap_x: bool) -> np.ndarray:
    """``out[i, j] = mask[i - di, j - dj]`` with zero fill off-grid."""
    out = np.roll(mask, di, axis=0) if wrap_x else np.zeros_like(mask)
    if not wrap_x:
        N = mask.shape[0]
        if di >= 0:
            out[di:] = mask[:N - di]
        else:
            out[:N + di] = mask[-di:]
    res = np.zeros_like(out)
    H = mask.shape[1]
    if dj >= 0:
        res[:, dj:] = out[:, :H - dj]
    else:
        res[:, :H + dj] = out[:, -dj:]
    return res


_N4 = ((1, 0), (-1, 0), (0, 1), (0, -1))
_N8 = _N4 + ((1, 1), (1, -1), (-1, 1), (-1, -1))


def dilate(mask, wrap_x, connectivity=8):
    out = mask.copy()
    for di, dj in (_N8 if connectivity == 8 else _N4):
        out |= _shift(mask, di, dj, wrap_x)
    return out


def _erode_within(mask, ambient, wrap_x):
    """Cells of ``mask`` whose 8-neighbors inside ``ambient`` all lie in ``mask``.

    A 4-neighborhood test would swallow the inner corner cells of a
    4-connected staircase and disconnect the frontier of a thin curve.
    """
    out = mask.copy()
    for di, dj in _N8:
        nb_in_amb = _shift(ambient, -di, -dj, wrap_x)
        nb_in_mask = _shift(mask, -di, -dj, wrap_x)
        out &= ~nb_in_amb | nb_in_mask
    return out


def _outer_boundary(u, ambient, wrap_x):
    return dilate(u, wrap_x, 8) & ambient & ~u


# ---------------------------------------------------------------- continua

@dataclass(frozen=True, eq=False)
class GridContinuum:
    """A nonempty 4-connected cell set at resolution ``N``."""

    chart: Chart
    N: int
    cells: np.ndarray

    def __post_init__(self):
        cells = np.array(self.cells, dtype=bool)
        if cells.shape != (self.N, self.N):
            raise ValueError(f"cell mask must have shape {(self.N, self.N)}")
        if not cells.any():
            raise NotConnected("empty continuum")
        _, count, _ = label(cells, self.chart.periodic_axes[0], 4)
        if count != 1:
            raise NotConnected(f"cell set has {count} 4-connected components")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    def __eq__(self, other):
        return (isinstance(other, GridContinuum) and self.chart == other.chart
                and self.N == other.N and np.array_equal(self.cells, other.cells))

    __hash__ = None

    @property
    def wrap_x(self) -> bool:
        return self.chart.periodic_axes[0]

    @property
    def size(self) -> int:
        return int(self.cells.sum())

    def cell_list(self) -> list[tuple[int, int]]:
        return [tuple(map(int, c)) for c in np.argwhere(self.cells)]

    @classmethod
    def from_cells(cls, chart, N, cells: Iterable[Sequence[int]]) -> "GridContinuum":
        mask = np.zeros((N, N), dtype=bool)
        for i, j in cells:
            mask[i, j] = True
        return cls(chart, N, mask)

    def column_max(self, col: int) -> int:
        rows = np.flatnonzero(self.cells[col])
        if rows.size == 0:
            raise ColumnMiss(f"column {col} misses the continuum")
        return int(rows[-1])

    def dilated(self) -> np.ndarray:
        return dilate(self.cells, self.wrap_x, 8)


def band_rows(band, N: int) -> tuple[int, int]:
    lo, hi = band
    idx = cells_of(SQUARE, [[0.0, lo], [0.0, hi]], N)
    return int(idx[0, 1]), int(idx[1, 1])


def ambient_mask(band, N: int) -> np.ndarray:
    j0, j1 = band_rows(band, N)
    amb = np.zeros((N, N), dtype=bool)
    amb[:, j0:j1 + 1] = True
    return amb


def _sides(K: GridContinuum, band):
    """Complement components of K in the band: (labels, count, winds, bottom, top)."""
    N = K.N
    amb = ambient_mask(band, N)
    if np.any(K.cells & ~amb):
        raise ValueError("continuum is not contained in the ambient band")
    j0, j1 = band_rows(band, N)
    labels, count, winds = label(amb & ~K.cells, K.wrap_x, 8)
    bottom = set(np.unique(labels[:, j0]).tolist()) - {0}
    top = set(np.unique(labels[:, j1]).tolist()) - {0}
    return labels, count, winds, bottom, top


def lower_upper(K: GridContinuum, band):
    """Masks of the complementary components touching the bottom / top of the band."""
    labels, count, winds, bottom, top = _sides(K, band)
    lower = np.isin(labels, list(bottom)) if bottom else np.zeros_like(K.cells)
    upper = np.isin(labels, list(top)) if top else np.zeros_like(K.cells)
    return lower, upper


def is_essential(K: GridContinuum, band) -> bool:
    """True iff the band minus K is exactly two annular components, one per boundary."""
    if not K.wrap_x:
        raise ValueError("essentiality is defined on the annulus chart")
    labels, count, winds, bottom, top = _sides(K, band)
    if count != 2 or len(bottom) != 1 or len(top) != 1 or bottom == top:
        return False
    return all(winds)


def crosses_horizontally(K: GridContinuum) -> bool:
    """On Q: the bottom and top sides lie in different components of Q minus K."""
    if K.chart != SQUARE:
        raise ValueError("crossing is defined on the square chart")
    labels, _, _ = label(~K.cells, False, 8)
    bottom = set(np.unique(labels[:, 0]).tolist()) - {0}
    top = set(np.unique(labels[:, -1]).tolist()) - {0}
    return not (bottom & top)


def has_empty_interior(K: GridContinuum) -> bool:
    """No cell of K has its whole 8-neighborhood inside K."""
    full = K.cells.copy()
    for di, dj in _N8:
        full &= _shift(K.cells, -di, -dj, K.wrap_x)
    return not full.any()


@dataclass(frozen=True, eq=False)
class FrontierDecomposition:
    frontier: GridContinuum
    lower: np.ndarray
    upper: np.ndarray


def frontier_masks(K: GridContinuum, band):
    """U-, U+ and their common outer boundary, without any validation."""
    amb = ambient_mask(band, K.N)
    lower, upper = lower_upper(K, band)
    wrap = K.wrap_x
    u_minus = _erode_within(dilate(lower, wrap, 8) & amb, amb, wrap)
    u_plus = _erode_within(dilate(upper, wrap, 8) & amb, amb, wrap)
    common = _outer_boundary(u_minus, amb, wrap) & _outer_boundary(u_plus, amb, wrap)
    return u_minus, u_plus, common


def extract_frontier(K: GridContinuum, band) -> FrontierDecomposition:
    """The unique frontier inside an essential, empty-interior continuum.

    ``U+-`` are the grid interiors (8-neighborhood erosion) of the grid
    closures (8-neighborhood dilation) of the complementary sides; the
    frontier is the set of cells on the outer boundary of both.
    """
    if not has_empty_interior(K):
        raise NotEmptyInterior("continuum contains a cell whose 8-neighborhood lies in it")
    if not is_essential(K, band):
        raise NotAnnular("continuum is not essential in the band")
    u_minus, u_plus, common = frontier_masks(K, band)
    if not common.any():
        raise NotEmptyInterior("one-sided boundaries do not meet; continuum is too thick")
    try:
        frontier = GridContinuum(K.chart, K.N, common)
    except NotConnected as exc:
        raise NotAnnular(f"frontier is not connected: {exc}") from exc
    if not is_essential(frontier, band):
        raise NotAnnular("extracted frontier is not essential")
    return FrontierDecomposition(frontier, u_minus, u_plus)


# ---------------------------------------------------------------- ordering

class Ordering(enum.IntEnum):
    LESS = -1
    GREATER = 1


def column_of(x: float, N: int) -> int:
    return int(cells_of(SQUARE, [[x, 0.0]], N)[0, 0])


def order_compare(K1: GridContinuum, K2: GridContinuum, x: float, check_all: bool = False) -> Ordering:
    """Compare the highest cells of two disjoint crossing continua in the column at ``x``."""
    col = column_of(x, K1.N)
    result = Ordering.LESS if K1.column_max(col) < K2.column_max(col) else Ordering.GREATER
    if check_all:
        for c in range(K1.N):
            other = Ordering.LESS if K1.column_max(c) < K2.column_max(c) else Ordering.GREATER
            if other is not result:
                raise OrderInconsistent(f"columns {col} and {c} disagree")
    return result


class ContinuumFamily:
    """Pairwise cell-disjoint continua, sorted by the column order.

    ``order_key`` holds the highest-cell centers at ``key_columns``.
    """

    def __init__(self, members: Sequence[GridContinuum], key_xs=(0.25, 0.5, 0.75),
                 drop_overlaps: bool = False):
        kept: list[GridContinuum] = []
        occupied = None
        for K in members:
            if occupied is None:
                occupied = np.zeros_like(K.cells)
            if np.any(occupied & K.cells):
                if drop_overlaps:
                    continue
                raise FamilyError("family members overlap")
            occupied |= K.cells
            kept.append(K)
        self.key_xs = tuple(key_xs)
        keys = [self._key(K) for K in kept]
        order = sorted(range(len(kept)), key=lambda k: keys[k])
        self.members = [kept[k] for k in order]
        self.order_key = [keys[k] for k in order]
        for a, b in zip(self.order_key, self.order_key[1:]):
            if not all(u < v for u, v in zip(a, b)):
                raise FamilyError("members are not totally ordered column by column")

    def _key(self, K):
        return tuple((K.column_max(column_of(x, K.N)) + 0.5) / K.N for x in self.key_xs)

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, k):
        return self.members[k]

    def assert_disjoint(self):
        total = np.sum([K.cells.astype(np.int64) for K in self.members], axis=0)
        if np.any(total > 1):
            raise FamilyError("family members overlap")


def chain_coordinates(family: Iterable[GridContinuum], xs: Sequence[float], delta: float) -> np.ndarray:
    """Triples of highest-cell centers at the three columns, one row per member."""
    out = []
    for K in family:
        N = K.N
        rows = np.flatnonzero(K.cells.any(axis=0))
        # margins are judged on cell centers, the same points the triples use
        if rows.size and ((rows[0] + 0.5) / N < delta or (rows[-1] + 0.5) / N > 1.0 - delta):
            raise MarginViolation(f"member reaches within {delta} of the horizontal sides")
        out.append([(K.column_max(column_of(x, N)) + 0.5) / N for x in xs])
    return np.array(out, dtype=float).reshape(-1, len(xs))


# ---------------------------------------------------------------- rasterize

def _bridge(a, b, N, wrap):
    """4-connected cell path from cell a to cell b (exclusive of a)."""
    d = [int(b[0] - a[0]), int(b[1] - a[1])]
    for axis in range(2):
        if wrap[axis]:
            d[axis] = (d[axis] + N // 2) % N - N // 2
    nx, ny = abs(d[0]), abs(d[1])
    sx = 1 if d[0] > 0 else -1
    sy = 1 if d[1] > 0 else -1
    i, j = int(a[0]), int(a[1])
    ix = iy = 0
    path = []
    while ix < nx or iy < ny:
        if iy >= ny or (ix < nx and (ix + 0.5) * ny < (iy + 0.5) * nx):
            ix += 1
            i += sx
        else:
            iy += 1
            j += sy
        path.append((i % N if wrap[0] else i, j % N if wrap[1] else j))
    return path


def rasterize(samples, chart: Chart, N: int, closed: bool = False) -> GridContinuum:
    """Mark the cells hit by ``samples`` and bridge consecutive samples.

    Bridges follow the sampling order, so orbit clouds should be sorted
    along the curve first; ``closed`` also bridges the last sample to the first.
    """
    pts = as_array(samples)
    idx = cells_of(chart, pts, N)
    mask = np.zeros((N, N), dtype=bool)
    mask[idx[:, 0], idx[:, 1]] = True
    if len(idx) > 1:
        nxt = np.roll(idx, -1, axis=0) if closed else idx[1:]
        cur = idx if closed else idx[:-1]
        d = np.abs(nxt - cur)
        for axis, wrapped in enumerate(chart.periodic_axes):
            if wrapped:
                d[:, axis] = np.minimum(d[:, axis], N - d[:, axis])
        gaps = np.flatnonzero(d.sum(axis=1) > 1)
        wrap = chart.periodic_axes
        for k in gaps:
            for i, j in _bridge(cur[k], nxt[k], N, wrap):
                mask[i, j] = True
    return GridContinuum(chart, N, mask)


# ---------------------------------------------------------------- file formats

def _mask_rows(mask):
    # image rows run from the top (high y) down
    return mask.T[::-1]


def write_pbm(path, K: GridContinuum):
    img = _mask_rows(K.cells).astype(np.uint8)
    lines = ["P1", f"# chart={K.chart}", f"{K.N} {K.N}"]
    lines += [" ".join(map(str, row)) for row in img]
    Path(path).write_text("\n".join(lines) + "\n")


def _tokens(text):
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        out.extend(line.split())
    return out


def read_pbm(path, chart: Chart | None = None) -> GridContinuum:
    text = Path(path).read_text()
    if chart is None:
        for line in text.splitlines():
            if line.startswith("# chart="):
                chart = Chart.from_name(line.split("=", 1)[1].strip())
                break
    chart = chart or ANNULUS
    tok = _tokens(text)
    if tok[0] != "P1":
        raise ValueError("only plain PBM (P1) is supported")
    w, h = int(tok[1]), int(tok[2])
    if w != h:
        raise ValueError("continuum rasters must be square")
    bits = "".join(tok[3:])
    img = np.array([c == "1" for c in bits[: w * h]], dtype=bool).reshape(h, w)
    return GridContinuum(chart, w, img[::-1].T)


def write_pgm(path, image: np.ndarray, maxval: int | None = None):
    """Plain PGM of an integer image indexed ``[i, j]``."""
    img = _mask_rows(np.asarray(image)).astype(np.int64)
    maxval = int(maxval if maxval is not None else max(1, img.max()))
    lines = ["P2", f"{img.shape[1]} {img.shape[0]}", str(maxval)]
    lines += [" ".join(map(str, row)) for row in img]
    Path(path).write_text("\n".join(lines) + "\n")


def read_pgm(path) -> np.ndarray:
    tok = _tokens(Path(path).read_text())
    if tok[0] != "P2":
        raise ValueError("only plain PGM (P2) is supported")
    w, h = int(tok[1]), int(tok[2])
    vals = np.array(tok[4:4 + w * h], dtype=np.int64).reshape(h, w)
    return vals[::-1].T


def write_family_pgm(path, family: Sequence[GridContinuum]):
    members = list(family)
    N = members[0].N if members else 1
    img = np.zeros((N, N), dtype=np.int64)
    for k, K in enumerate(members, start=1):
        img[K.cells] = k
    write_pgm(path, img, maxval=max(1, len(members)))


def to_json(K: GridContinuum) -> dict:
    return {"chart": str(K.chart), "N": K.N, "cells": [list(c) for c in K.cell_list()]}


def from_json(d: dict) -> GridContinuum:
    return GridContinuum.from_cells(Chart.from_name(d["chart"]), int(d["N"]), d["cells"])


def dump_json(path, K: GridContinuum):
    Path(path).write_text(json.dumps(to_json(K)) + "\n")


def load_json(path) -> GridContinuum:
    return from_json(json.loads(Path(path).read_text()))
