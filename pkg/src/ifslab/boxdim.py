"""Box counting for 3-D point clouds, the sum embedding of chains, and the
seeded search for a translation that separates two clouds in the max norm."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .errors import BudgetExhausted, DegenerateFit, NotChain


def point_cloud(points, dedup_tol: float = 1e-12) -> np.ndarray:
    """Validate and deduplicate a cloud in [0, 1]^3 (rows within ``dedup_tol`` merge)."""
    P = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(P) == 0:
        raise ValueError("empty point cloud")
    if np.any(P < 0.0) or np.any(P > 1.0):
        raise ValueError("point cloud must lie in the unit cube")
    keys = np.round(P / dedup_tol).astype(np.int64) if dedup_tol > 0 else P
    _, first = np.unique(keys, axis=0, return_index=True)
    return P[np.sort(first)]


def box_count(P, side: float) -> int:
    """Number of origin-anchored boxes of the given side meeting ``P``."""
    if not 0.0 < side <= 1.0:
        raise ValueError("side must lie in (0, 1]")
    P = np.asarray(P, dtype=float).reshape(-1, 3)
    last = int(np.ceil(1.0 / side - 1e-12)) - 1
    idx = np.minimum(np.floor(P / side).astype(np.int64), last)
    return len(np.unique(idx, axis=0))


@dataclass(frozen=True)
class DimensionEstimate:
    scales: tuple[float, ...]
    counts: tuple[int, ...]
    slope: float
    slope_ci: float


def upper_box_dimension(P, scale_range=(2, 8)) -> DimensionEstimate:
    """Least-squares slope of log N(s) against log(1/s) for s = 2^-k, k in scale_range."""
    P = np.asarray(P, dtype=float).reshape(-1, 3)
    kmin, kmax = scale_range
    if len(P) < 16:
        raise ValueError("need at least 16 points")
    if kmax - kmin + 1 < 4:
        raise ValueError("need at least 4 scales")
    ks = np.arange(kmin, kmax + 1)
    sides = 2.0 ** -ks
    counts = np.array([box_count(P, s) for s in sides])
    if np.all(counts == counts[0]):
        raise DegenerateFit("box counts do not change with scale")
    x = ks * np.log(2.0)
    y = np.log(counts)
    A = np.column_stack([x, np.ones_like(x)])
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ np.array([slope, icpt])
    dof = max(len(x) - 2, 1)
    se = float(np.sqrt(resid @ resid / dof / np.sum((x - x.mean()) ** 2)))
    return DimensionEstimate(tuple(sides.tolist()), tuple(int(c) for c in counts), float(slope), se)


def is_chain(P) -> bool:
    try:
        check_chain(P)
    except NotChain:
        return False
    return True


def check_chain(P):
    """Raise :class:`NotChain` naming an incomparable pair, if any."""
    P = np.asarray(P, dtype=float).reshape(-1, 3)
    for i in range(len(P)):
        d = P[i + 1:] - P[i]
        bad = ~(np.all(d >= 0, axis=1) | np.all(d <= 0, axis=1))
        if bad.any():
            j = i + 1 + int(np.flatnonzero(bad)[0])
            raise NotChain(i, j, P[i], P[j])


def sum_embed(P) -> np.ndarray:
    """Coordinate sums of a chain; an l1 isometry onto a subset of the line."""
    P = np.asarray(P, dtype=float).reshape(-1, 3)
    check_chain(P)
    return P.sum(axis=1)


def random_chain(n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` monotone triples: three independently sorted uniform samples."""
    return np.sort(rng.random((n, 3)), axis=0)


def linf_gap(A, A2, t) -> float:
    """min over pairs of the max-norm distance between A + t and A2 (exhaustive)."""
    A = np.asarray(A, dtype=float).reshape(-1, 3)
    A2 = np.asarray(A2, dtype=float).reshape(-1, 3)
    best = np.inf
    for chunk in np.array_split(A, max(1, len(A) // 256)):
        d = np.abs(chunk[:, None, :] + np.asarray(t) - A2[None, :, :]).max(axis=2)
        best = min(best, float(d.min()))
    return best


def find_separating_translation(A, A2, eps: float, margin: float, budget: int,
                                rng: np.random.Generator | int | None = None,
                                batch: int = 256):
    """Translation ``t`` with all ``|t_i| < eps`` and ``linf_gap(A, A2, t) > margin``.

    ``t = 0`` is tried first. Candidates are drawn uniformly from the open
    cube; a k-d tree over the difference set screens them and the winner is
    re-verified exhaustively.
    """
    if eps <= 0 or margin < 0 or budget < 1:
        raise ValueError("need eps > 0, margin >= 0, budget >= 1")
    A = np.asarray(A, dtype=float).reshape(-1, 3)
    A2 = np.asarray(A2, dtype=float).reshape(-1, 3)
    rng = np.random.default_rng(rng)
    zero = np.zeros(3)
    best_gap = linf_gap(A, A2, zero)
    best_t = zero
    if best_gap > margin:
        return zero
    # gap(t) is the max-norm distance from -t to the set {a - a2}
    diffs = (A[:, None, :] - A2[None, :, :]).reshape(-1, 3)
    tree = cKDTree(np.unique(diffs, axis=0))
    drawn = 0
    while drawn < budget:
        m = min(batch, budget - drawn)
        T = rng.uniform(-eps, eps, size=(m, 3))
        drawn += m
        T = T[np.all(np.abs(T) < eps, axis=1)]
        if not len(T):
            continue
        gaps, _ = tree.query(-T, k=1, p=np.inf)
        k = int(np.argmax(gaps > margin)) if np.any(gaps > margin) else -1
        if k >= 0:
            t = T[k]
            if linf_gap(A, A2, t) > margin:
                return t
        j = int(np.argmax(gaps))
        if gaps[j] > best_gap:
            best_gap, best_t = float(gaps[j]), T[j]
    raise BudgetExhausted(best_gap, best_t)


def write_cloud_csv(path, P):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in np.asarray(P, dtype=float).reshape(-1, 3):
            w.writerow([format(v, ".17g") for v in row])


def read_cloud_csv(path) -> np.ndarray:
    rows = []
    with open(Path(path), newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                rows.append([float(v) for v in row[:3]])
            except ValueError:
                if rows:
                    raise
                continue  # header
    return point_cloud(rows)
