"""The separation experiment: detect circle families of f^n and g^n in a band,
translate one family's column coordinates off the other with a three-bump
separator h, conjugate g to h g h^-1 and compare IFS coverage before and after.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .boxdim import find_separating_translation, linf_gap
from .bump import BumpSpec, Separator, SeparatorSpec
from .continua import (ContinuumFamily, GridContinuum, _outer_boundary, ambient_mask,
                       chain_coordinates, column_of, extract_frontier, is_essential,
                       lower_upper, rasterize)
from .detect import invariance_residual, scan_candidates, to_frame, transversal_seeds
from .errors import IfsLabError, NoneFound, NotMonotone, VerificationFailed
from .geometry import ANNULUS, Chart
from .ifs import CoverageReport, coverage_test
from .maps import AreaMap, Conjugate, map_from_config
from .io import write_json
from .seeding import substream

DEFAULT_CONFIG = {
    "chart": "annulus",
    "f": {"kind": "integrable_twist", "params": {"coeffs": [0.0, 1.0]}},
    "g": {"kind": "integrable_twist", "params": {"coeffs": [0.6180339887498949, 1.0]}},
    "band": [0.2, 0.8],
    "delta": 0.1,
    "n": 1,
    "resolution": 64,
    "detect": {"count": 50, "T": 2000, "spread_tol": 0.02, "conjugate_spread_tol": 0.1},
    "bump": {"half_width": 0.1, "inner_half_width": 0.03, "rho_outer": 0.005,
             "rho_inner": 0.06},
    "search": {"margin": None, "budget": 1000},
    "coverage": {"start": [0.1, 0.5], "resolution": 64, "budget": 2000},
    "check_conjugation": True,
    "t": None,
    "seed": 0,
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k not in ("f", "g"):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(src=None, **overrides) -> dict:
    """Defaults merged with a JSON file (or dict) and keyword overrides."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if src is not None:
        data = src if isinstance(src, dict) else json.loads(Path(src).read_text())
        unknown = set(data) - set(DEFAULT_CONFIG)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = _merge(cfg, data)
    return _merge(cfg, {k: v for k, v in overrides.items() if v is not None})


def frame_for(band, delta: float) -> tuple[float, float]:
    """Annulus band mapped onto Q so that ``band`` lands on ``[delta, 1 - delta]``."""
    lo, hi = band
    if not 0.0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    height = (hi - lo) / (1.0 - 2.0 * delta)
    a = lo - delta * height
    if a < 0.0 or a + height > 1.0:
        raise ValueError(f"band {band} with margin {delta} does not fit in the annulus")
    return (a, a + height)


def bump_columns(N: int) -> tuple[float, float, float]:
    """Abscissae of the three bumps: centers of columns N/4, N/2, 3N/4."""
    return tuple((c + 0.5) / N for c in (N // 4, N // 2, (3 * N) // 4))


@dataclass
class DetectedFamily:
    family: ContinuumFamily | list
    samples: dict = field(default_factory=dict)   # id(member) -> orbit samples (annulus)
    seeds: dict = field(default_factory=dict)     # id(member) -> seed index

    def samples_of(self, K):
        return self.samples[id(K)]

    def seed_of(self, K) -> int:
        return self.seeds[id(K)]


def detect_family(m: AreaMap, cfg: dict, conjugate: bool = False) -> DetectedFamily:
    """Detect and rasterize in frame coordinates. ``conjugate`` widens the
    escape band to the whole frame and uses the looser spread tolerance, since
    h bends circles inside its ramps and may push them across the edge of E."""
    N = cfg["resolution"]
    frame = frame_for(cfg["band"], cfg["delta"])
    d = cfg["detect"]
    band = frame if conjugate else tuple(cfg["band"])
    seeds = transversal_seeds(tuple(cfg["band"]), d["count"])
    tol = d["conjugate_spread_tol"] if conjugate else d["spread_tol"]
    cands = scan_candidates(m, band, cfg["n"], seeds, d["count"], d["T"], tol, bins=N)
    rasters, samples, index = [], {}, {}
    for s, c in enumerate(cands):
        if not c.accepted:
            continue
        q = to_frame(c.samples, frame)
        order = np.argsort(q[:, 0], kind="stable")
        K = rasterize(q[order], ANNULUS, N, closed=True)
        rasters.append(K)
        samples[id(K)] = c.samples[order]
        index[id(K)] = s
    if not rasters:
        raise NoneFound("no invariant circle passed the gates")
    if conjugate:
        # bent images of neighbouring circles may share cells; keep them all
        return DetectedFamily(rasters, samples, index)
    fam = ContinuumFamily(rasters, drop_overlaps=True)
    if len(fam) > d["count"]:
        fam = ContinuumFamily(fam.members[: d["count"]])
    return DetectedFamily(fam, {id(K): samples[id(K)] for K in fam},
                          {id(K): index[id(K)] for K in fam})


def image_family(h: AreaMap, det: DetectedFamily, frame, N) -> list[GridContinuum]:
    out = []
    for K in det.family:
        img = h._forward(det.samples_of(K))
        q = to_frame(img, frame)
        out.append(rasterize(q[np.argsort(q[:, 0], kind="stable")], ANNULUS, N, closed=True))
    return out


def column_heights(members: Sequence[GridContinuum], xs) -> np.ndarray:
    return np.array([[(K.column_max(column_of(x, K.N)) + 0.5) / K.N for x in xs]
                     for K in members]).reshape(-1, len(xs))


def verify_separation(moved: Sequence[GridContinuum], fixed: Sequence[GridContinuum], xs, N):
    """For every pair, the first column whose highest cells differ by more than 1/N."""
    Y = column_heights(moved, xs)
    Yf = column_heights(fixed, xs)
    table, failures = [], []
    for a in range(len(Y)):
        diff = Y[a][None, :] - Yf
        ok = np.abs(diff) > 1.0 / N + 1e-12
        for b in range(len(Yf)):
            cols = np.flatnonzero(ok[b])
            if cols.size:
                c = int(cols[0])
                table.append((a, b, c, float(diff[b, c])))
            else:
                failures.append((a, b))
    return table, failures


@dataclass
class SeparationOutcome:
    family_f: list
    family_g: list
    family_hg: list
    spec: SeparatorSpec | None
    translation: tuple
    margin: float
    verification: list
    coverage_before: CoverageReport
    coverage_after: CoverageReport
    trivially_separated: bool = False
    conjugation_consistent: bool | None = None
    frame: tuple = (0.0, 1.0)
    g_tilde: AreaMap | None = None

    @property
    def coverage_gain(self) -> float:
        return self.coverage_after.fraction - self.coverage_before.fraction

    def to_dict(self) -> dict:
        return {
            "trivially_separated": self.trivially_separated,
            "frame": list(self.frame),
            "translation": [float(v) for v in self.translation],
            "margin": self.margin,
            "separator": self.spec.to_dict() if self.spec else None,
            "family_sizes": {"f": len(self.family_f), "g": len(self.family_g)},
            "pairs_verified": len(self.verification),
            "verification": [{"g": a, "f": b, "column": c, "difference": d}
                             for a, b, c, d in self.verification],
            "conjugation_consistent": self.conjugation_consistent,
            "coverage_before": self.coverage_before.summary(),
            "coverage_after": self.coverage_after.summary(),
            "coverage_gain": self.coverage_gain,
        }


def _within_dilation(A: GridContinuum, B: GridContinuum) -> bool:
    return bool(np.all(~A.cells | B.dilated()) and np.all(~B.cells | A.dilated()))


def run_separation(f: AreaMap, g: AreaMap, E=None, n: int | None = None, config=None,
                   seed: int | None = None) -> SeparationOutcome:
    cfg = load_config(config)
    if E is not None:
        cfg["band"] = list(E)
    if n is not None:
        cfg["n"] = n
    if seed is not None:
        cfg["seed"] = seed
    if f.chart != g.chart:
        raise ValueError("f and g live on different charts")
    N = cfg["resolution"]
    frame = frame_for(cfg["band"], cfg["delta"])
    xs = bump_columns(N)
    cov = cfg["coverage"]

    def coverage(gg):
        return coverage_test(f, gg, tuple(cov["start"]), cov["resolution"], cov["budget"])

    before = coverage(g)
    try:
        det_f = detect_family(f, cfg)
        det_g = detect_family(g, cfg)
    except NoneFound:
        # nothing to separate: h is the identity and g~ = g
        return SeparationOutcome([], [], [], None, (0.0, 0.0, 0.0), 0.0, [], before, before,
                                 trivially_separated=True, frame=frame, g_tilde=g)

    A = chain_coordinates(det_g.family, xs, cfg["delta"])
    A2 = chain_coordinates(det_f.family, xs, cfg["delta"])
    bumps = tuple(BumpSpec(x, delta=cfg["delta"], **cfg["bump"]) for x in xs)
    eps = min(b.epsilon for b in bumps)
    margin = cfg["search"]["margin"]
    margin = 2.0 / N if margin is None else float(margin)
    if margin < 2.0 / N:
        raise ValueError(f"search margin {margin} is below the grid floor 2/N = {2.0 / N}")
    if cfg["t"] is not None:
        t = np.array(cfg["t"], dtype=float)
    else:
        t = find_separating_translation(A, A2, eps, margin, cfg["search"]["budget"],
                                        substream(cfg["seed"], "translation"))
    spec = SeparatorSpec(bumps, tuple(float(v) for v in t))
    h = Separator(spec, band=frame)
    g_tilde = Conjugate(g, h)

    moved = image_family(h, det_g, frame, N)
    table, failures = verify_separation(moved, det_f.family.members, xs, N)
    if failures:
        raise VerificationFailed(
            f"{len(failures)} of {len(moved) * len(det_f.family)} pairs lack a witnessing column "
            f"(translation {[round(float(v), 6) for v in t]}, gap {linf_gap(A, A2, t):.4g})", failures)

    consistent = None
    if cfg["check_conjugation"]:
        try:
            det_gt = detect_family(g_tilde, cfg, conjugate=True)
            by_seed = {det_gt.seed_of(K): K for K in det_gt.family}
            consistent = all(det_g.seed_of(K) in by_seed
                             and _within_dilation(by_seed[det_g.seed_of(K)], hK)
                             for K, hK in zip(det_g.family, moved))
        except NoneFound:
            consistent = False

    after = coverage(g_tilde)
    return SeparationOutcome(det_f.family.members, det_g.family.members, moved, spec,
                             tuple(float(v) for v in t), margin, table, before, after,
                             conjugation_consistent=consistent, frame=frame, g_tilde=g_tilde)


def maps_from_config(cfg: dict) -> tuple[AreaMap, AreaMap]:
    chart = Chart.from_name(cfg.get("chart", "annulus"))
    return map_from_config(cfg["f"], chart), map_from_config(cfg["g"], chart)


# ---------------------------------------------------------------- Hausdorff limits

@dataclass
class ClosednessReport:
    limit: GridContinuum
    residuals: list
    frontier: GridContinuum | None
    frontier_error: str | None
    essential: bool
    direction: int


def _direction(K1: GridContinuum, K2: GridContinuum) -> int:
    N = K1.N
    a = np.array([K1.column_max(c) for c in range(N)])
    b = np.array([K2.column_max(c) for c in range(N)])
    if np.all(a == b):
        return 0
    if np.all(a <= b):
        return 1
    if np.all(a >= b):
        return -1
    raise NotMonotone("consecutive members are not ordered column by column")


def closedness_probe(members: Sequence[GridContinuum], maps: Sequence[AreaMap] = (),
                     band=(0.0, 1.0), frame=(0.0, 1.0)) -> ClosednessReport:
    """Grid Hausdorff limit of a monotone sequence: the boundary of the union of
    the lower sides (upper sides for a decreasing sequence)."""
    if len(members) < 3:
        raise ValueError("need at least 3 members")
    dirs = {_direction(a, b) for a, b in zip(members, members[1:])} - {0}
    if len(dirs) > 1:
        raise NotMonotone("sequence changes direction")
    direction = dirs.pop() if dirs else 1
    N = members[0].N
    amb = ambient_mask(band, N)
    union = np.zeros((N, N), dtype=bool)
    for K in members:
        low, up = lower_upper(K, band)
        union |= low if direction > 0 else up
    limit = GridContinuum(members[0].chart, N, _outer_boundary(union, amb, members[0].wrap_x))
    residuals = [invariance_residual(m, limit, frame=frame) for m in maps]
    try:
        frontier, err = extract_frontier(limit, band).frontier, None
    except IfsLabError as exc:
        frontier, err = None, f"{type(exc).__name__}: {exc}"
    return ClosednessReport(limit, residuals, frontier, err, is_essential(limit, band), direction)


def write_outcome(outcome: SeparationOutcome, outdir, figures: bool = True) -> list[Path]:
    """JSON summary, coverage CSVs, PGM rasters and (optionally) PNG figures."""
    from .continua import write_family_pgm, write_pgm
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    p = out / "outcome.json"
    write_json(p, outcome.to_dict())
    written.append(p)
    for tag, rep in (("before", outcome.coverage_before), ("after", outcome.coverage_after)):
        p = out / f"coverage_{tag}.csv"
        rep.write_csv(p)
        written.append(p)
        p = out / f"coverage_{tag}.pgm"
        write_pgm(p, rep.coverage_map().astype(np.int64), maxval=1)
        written.append(p)
    for tag, fam in (("f", outcome.family_f), ("g", outcome.family_g), ("hg", outcome.family_hg)):
        if fam:
            p = out / f"family_{tag}.pgm"
            write_family_pgm(p, fam)
            written.append(p)
    if figures:
        from . import plotting
        written += plotting.separation_figures(outcome, out)
    return written


# ---------------------------------------------------------------- audits

def standard_zoo(seed: int = 0) -> dict[str, AreaMap]:
    """Every map kind, plus a separator and a conjugated twist, for Jacobian audits."""
    from .geometry import SQUARE, TORUS
    from .maps import Identity, IntegrableTwist, KickedTwist
    rng = substream(seed, "zoo")
    N = 64
    xs = bump_columns(N)
    bumps = tuple(BumpSpec(x, delta=0.1, half_width=0.1, inner_half_width=0.03,
                           rho_outer=0.005, rho_inner=0.06) for x in xs)
    eps = min(b.epsilon for b in bumps)
    t = tuple(float(v) for v in rng.uniform(-0.9 * eps, 0.9 * eps, 3))
    spec = SeparatorSpec(bumps, t)
    g = IntegrableTwist((0.6180339887498949, 1.0))
    h_band = Separator(spec, band=(0.125, 0.875))
    return {
        "identity": Identity(),
        "integrable_twist": IntegrableTwist((0.0, 1.0)),
        "cubic_twist": IntegrableTwist((0.1, 0.5, -0.3, 0.2)),
        "rotation": IntegrableTwist.rotation(1.0 / 3.0),
        "kicked_twist_sine": KickedTwist(0.3),
        "kicked_twist_two_harmonic": KickedTwist(1.5, "two_harmonic", TORUS),
        "kicked_twist_torus": KickedTwist(2.5, chart=TORUS),
        "separator": Separator(spec),
        "separator_annulus": h_band,
        "g_tilde": Conjugate(g, h_band),
    }


def jacobian_audit(m: AreaMap, points: int = 1000, rng=None, step: float = 1e-6) -> float:
    """Max |det J - 1| over uniform random points (central differences)."""
    from .maps import jacobian_det
    rng = np.random.default_rng(rng)
    p = rng.uniform(0.0, 1.0, (points, 2))
    if not m.chart.periodic_axes[1]:
        # keep the difference stencil inside the chart
        p[:, 1] = 1e-5 + (1.0 - 2e-5) * p[:, 1]
    if not m.chart.periodic_axes[0]:
        p[:, 0] = 1e-5 + (1.0 - 2e-5) * p[:, 0]
    return float(np.max(np.abs(jacobian_det(m, p, step) - 1.0)))
