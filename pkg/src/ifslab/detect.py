"""Rotation numbers and detection of essential invariant circle families in
an annulus band.

Detected continua are rasterized in *frame* coordinates: the annulus band
``frame = (lo, hi)`` is stretched affinely onto ``y in [0, 1]`` so that the
raster doubles as the unit square used by the separator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .continua import ContinuumFamily, GridContinuum, dilate, rasterize
from .errors import EscapedBand, NoneFound
from .geometry import ANNULUS, as_array, cell_centers
from .maps import AreaMap, power

MAX_DENOM = 20
RATIONAL_TOL = 1e-6
PERIOD_TOL = 1e-9
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class RotationNumberEstimate:
    value: float
    iterations: int
    residual: float
    period: int | None = None


def nearest_rational(v: float, max_denom: int = MAX_DENOM) -> tuple[Fraction, float]:
    best = None
    for q in range(1, max_denom + 1):
        p = round(v * q)
        d = abs(v - p / q)
        if best is None or d < best[1]:
            best = (Fraction(p, q), d)
    return best


def is_near_rational(v: float, max_denom: int = MAX_DENOM, tol: float = RATIONAL_TOL) -> bool:
    return nearest_rational(v % 1.0, max_denom)[1] < tol


def _iterate(m: AreaMap, seeds: np.ndarray, T: int, band=None, keep_orbit=False):
    """Run ``T`` steps from every seed; returns lifted displacement sums at T/2
    and T, an escape flag per seed, the first return distances for q <= 20,
    and optionally the whole orbit."""
    xy = np.array(seeds, dtype=float)
    S = len(xy)
    total = np.zeros(S)
    half = np.zeros(S)
    escaped = np.zeros(S, dtype=bool)
    orbit = np.empty((T, S, 2)) if keep_orbit else None
    ret = np.full((S, MAX_DENOM), np.inf)
    lo, hi = band if band is not None else (0.0, 1.0)
    for k in range(T):
        total += m.displacement(xy)
        xy = m._forward(xy)
        xy[:, 0] = np.mod(xy[:, 0], 1.0)
        escaped |= (xy[:, 1] < lo) | (xy[:, 1] > hi) | ~np.isfinite(xy[:, 1])
        if k < MAX_DENOM:
            d = np.abs(xy - seeds)
            d[:, 0] = np.minimum(d[:, 0], 1.0 - d[:, 0])
            ret[:, k] = d.max(axis=1)
        if keep_orbit:
            orbit[k] = xy
        if k + 1 == T // 2:
            half = total.copy()
    return total, half, escaped, ret, orbit


def _estimates(total, half, ret, T):
    out = []
    for s in range(len(total)):
        avg = total[s] / T
        avg_half = half[s] / (T // 2)
        hits = np.flatnonzero(ret[s] < PERIOD_TOL)
        period = int(hits[0]) + 1 if hits.size else None
        out.append(RotationNumberEstimate(float(avg % 1.0), T, float(abs(avg - avg_half)), period))
    return out


def rotation_number(f: AreaMap, p, T: int = 10_000, band=None) -> RotationNumberEstimate:
    """Birkhoff average of the lifted x-displacement along the orbit of ``p``."""
    if T < 100:
        raise ValueError("need T >= 100")
    if not f.chart.periodic_axes[0]:
        raise ValueError("rotation numbers need a chart whose x axis wraps")
    seeds = as_array(p)[:1]
    total, half, escaped, ret, _ = _iterate(f, seeds, T, band)
    if escaped[0]:
        raise EscapedBand(f"orbit of {tuple(seeds[0])} left the band")
    return _estimates(total, half, ret, T)[0]


@dataclass(frozen=True)
class CircleCandidate:
    seed: tuple[float, float]
    samples: np.ndarray
    rotation: RotationNumberEstimate
    spread: float
    accepted: bool
    reason: str = ""


def angular_spread(samples: np.ndarray, bins: int):
    """Max vertical extent of samples within an angular bin; inf if a bin is empty."""
    b = np.minimum((samples[:, 0] * bins).astype(np.int64), bins - 1)
    lo = np.full(bins, np.inf)
    hi = np.full(bins, -np.inf)
    np.minimum.at(lo, b, samples[:, 1])
    np.maximum.at(hi, b, samples[:, 1])
    if np.any(~np.isfinite(lo)):
        return math.inf
    return float(np.max(hi - lo))


def transversal_seeds(band, count: int, x0: float = 0.0) -> np.ndarray:
    """``count`` seeds on the vertical line ``x = x0``, evenly spaced inside the
    band and nudged by an irrational fraction of the spacing."""
    lo, hi = band
    h = (hi - lo) / count
    ys = lo + (np.arange(count) + 0.5 + 0.01 * GOLDEN) * h
    return np.column_stack([np.full(count, x0), ys])


def to_frame(xy: np.ndarray, frame) -> np.ndarray:
    lo, hi = frame
    out = np.array(xy, dtype=float, copy=True)
    out[..., 1] = (out[..., 1] - lo) / (hi - lo)
    return out


def from_frame(q: np.ndarray, frame) -> np.ndarray:
    lo, hi = frame
    out = np.array(q, dtype=float, copy=True)
    out[..., 1] = lo + (hi - lo) * out[..., 1]
    return out


def scan_candidates(f: AreaMap, E, n: int = 1, seeds=None, count: int = 50, T: int = 2000,
                    spread_tol: float = 0.02, bins: int = 64) -> list[CircleCandidate]:
    """Iterate ``f^n`` from every seed and apply the four acceptance gates."""
    if seeds is None:
        seeds = transversal_seeds(E, count)
    seeds = as_array(seeds)
    m = power(f, n)
    total, half, escaped, ret, orbit = _iterate(m, seeds, T, E, keep_orbit=True)
    rots = _estimates(total, half, ret, T)
    out = []
    for s, rot in enumerate(rots):
        samples = orbit[:, s, :]
        reason = ""
        spread = math.inf
        if escaped[s]:
            reason = "escaped"
        elif rot.residual >= 1.0 / math.sqrt(T):
            reason = "unconverged"
        elif is_near_rational(rot.value):
            reason = "resonant"
        else:
            spread = angular_spread(samples, bins)
            if not spread < spread_tol:
                reason = "spread"
        out.append(CircleCandidate(tuple(map(float, seeds[s])), samples, rot, spread,
                                   reason == "", reason))
    return out


def candidate_raster(c: CircleCandidate, N: int, frame=(0.0, 1.0)) -> GridContinuum:
    q = to_frame(c.samples, frame)
    q = q[np.argsort(q[:, 0], kind="stable")]
    return rasterize(q, ANNULUS, N, closed=True)


def detect_circle_family(f: AreaMap, E, n: int = 1, count: int = 50, T: int = 2000,
                         spread_tol: float = 0.02, N: int = 64, frame=None, seeds=None,
                         return_candidates: bool = False):
    """Family of rasterized essential invariant circles of ``f^n`` inside ``E``.

    Accepted candidates are rasterized in seed order; a candidate overlapping
    an earlier one is dropped. At most ``count`` members are kept.
    """
    if count < 1:
        raise ValueError("count must be positive")
    frame = tuple(frame) if frame is not None else (0.0, 1.0)
    cands = scan_candidates(f, E, n, seeds, count, T, spread_tol, bins=N)
    members = []
    for c in cands:
        if c.accepted:
            members.append(candidate_raster(c, N, frame))
    if not members:
        raise NoneFound(f"no invariant circle passed the gates ({len(cands)} seeds)")
    fam = ContinuumFamily(members, drop_overlaps=True)
    if len(fam) > count:
        fam = ContinuumFamily(fam.members[:count])
    return (fam, cands) if return_candidates else fam


def invariance_residual(f: AreaMap, K: GridContinuum, samples: int | None = None,
                        frame=(0.0, 1.0), rng=None) -> float:
    """Fraction of sampled K-cells whose center leaves the one-cell dilation of K under f."""
    idx = np.argwhere(K.cells)
    if samples is not None and samples < len(idx):
        rng = np.random.default_rng(rng)
        idx = idx[rng.choice(len(idx), samples, replace=False)]
    centers = from_frame(cell_centers(idx, K.N), frame)
    img = f._forward(centers)
    img[:, 0] = np.mod(img[:, 0], 1.0)
    q = to_frame(img, frame)
    outside = (q[:, 1] < 0.0) | (q[:, 1] > 1.0)
    N = K.N
    ci = np.mod(np.floor(q[:, 0] * N).astype(np.int64), N)
    cj = np.clip(np.floor(q[:, 1] * N).astype(np.int64), 0, N - 1)
    near = dilate(K.cells, K.wrap_x, 8)
    miss = outside | ~near[ci, cj]
    return float(miss.mean())
