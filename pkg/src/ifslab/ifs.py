"""Words over two generators, exact transitivity checks on finite permutation
models, and grid-coverage / hitting tests for pairs of surface maps.

Letters are generator indices ``0, 1``; in group mode the inverse of
generator ``i`` is written ``~i`` (so ``-1`` is ``f^-1`` and ``-2`` is ``g^-1``).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import Timeout
from .geometry import CellIndex, _like, as_array, cells_of, reduce
from .io import write_json
from .maps import AreaMap

IDLE_STEPS = 50


@dataclass(frozen=True)
class Word:
    letters: tuple[int, ...] = ()
    group: bool = False

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(int(a) for a in self.letters))
        if not self.group and any(a < 0 for a in self.letters):
            raise ValueError("inverse letters need group mode")

    def __len__(self):
        return len(self.letters)

    def inverse(self) -> "Word":
        return Word(tuple(~a for a in reversed(self.letters)), group=True)

    def __str__(self):
        names = "fg"
        return "".join(names[a] if a >= 0 else names[~a].upper() for a in self.letters) or "e"


def _step(maps, a: int, xy):
    if a >= 0:
        return maps[a]._forward(xy)
    return maps[~a]._inverse(xy)


def apply_word(w, maps: Sequence[AreaMap], p, group: bool | None = None):
    """Apply the letters of ``w`` left to right (first letter first)."""
    if not isinstance(w, Word):
        w = Word(tuple(w), group=bool(group))
    for a in w.letters:
        if (a if a >= 0 else ~a) >= len(maps):
            raise ValueError(f"letter {a} has no map")
    chart = maps[0].chart
    xy = reduce(chart, as_array(p))
    for a in w.letters:
        m = maps[a if a >= 0 else ~a]
        xy = m._finish(_step(maps, a, xy))
    return _like(p, xy)


# ---------------------------------------------------------------- finite models

@dataclass(frozen=True)
class FinitePermModel:
    n: int
    f: tuple[int, ...]
    g: tuple[int, ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        for name in ("f", "g"):
            p = tuple(int(v) for v in getattr(self, name))
            if sorted(p) != list(range(self.n)):
                raise ValueError(f"{name} is not a permutation of 0..{self.n - 1}")
            object.__setattr__(self, name, p)

    @classmethod
    def from_cycles(cls, n, f_cycles=(), g_cycles=()):
        def perm(cycles):
            p = list(range(n))
            for c in cycles:
                for a, b in zip(c, c[1:] + c[:1]):
                    p[a] = b
            return tuple(p)
        return cls(n, perm(f_cycles), perm(g_cycles))


def random_model(rng: np.random.Generator, max_n: int = 12) -> FinitePermModel:
    """Random pair of permutations; about half respect a random block partition
    so that intransitive models are common."""
    n = int(rng.integers(1, max_n + 1))
    if rng.random() < 0.5:
        return FinitePermModel(n, tuple(rng.permutation(n)), tuple(rng.permutation(n)))
    blocks = np.array_split(rng.permutation(n), int(rng.integers(1, n + 1)))
    f = np.arange(n)
    g = np.arange(n)
    for b in blocks:
        if len(b):
            f[b] = b[rng.permutation(len(b))]
            g[b] = b[rng.permutation(len(b))]
    return FinitePermModel(n, tuple(f), tuple(g))


TRANSITIVITY_NAMES = (
    "group_transitive",        # some group orbit is everything
    "group_hitting",           # every ordered pair joined by a group word
    "group_residual",          # every start has a full group orbit
    "semigroup_transitive",
    "semigroup_hitting",
    "semigroup_residual",
    "full_branch_dense",       # a bi-infinite walk visits every vertex
    "ifs_branch_dense",        # a forward walk from some start visits every vertex
    "ifs_residual",            # every start begins such a walk
)


def _reach(adj: np.ndarray) -> np.ndarray:
    """Reflexive-transitive closure of a boolean adjacency matrix."""
    n = len(adj)
    R = adj | np.eye(n, dtype=bool)
    while True:
        R2 = (R.astype(np.int64) @ R.astype(np.int64)) > 0
        if np.array_equal(R2, R):
            return R
        R = R2


def _adjacency(m: FinitePermModel, group: bool) -> np.ndarray:
    adj = np.zeros((m.n, m.n), dtype=bool)
    v = np.arange(m.n)
    adj[v, m.f] = True
    adj[v, m.g] = True
    if group:
        adj |= adj.T
    return adj


def _walk_starts(adj: np.ndarray):
    """Vertices from which one walk visits everything, and whether such a walk
    can be extended infinitely in both directions."""
    n = len(adj)
    ncomp, lab = connected_components(csr_matrix(adj), directed=True, connection="strong")
    R = _reach(adj)
    # the condensation must be a chain: every two components comparable
    rep = [int(np.flatnonzero(lab == c)[0]) for c in range(ncomp)]
    comparable = all(R[rep[a], rep[b]] or R[rep[b], rep[a]]
                     for a in range(ncomp) for b in range(a + 1, ncomp))
    starts = np.zeros(n, dtype=bool)
    if comparable:
        starts = R.all(axis=1)
    if not starts.any():
        return starts, False
    first = lab[int(np.flatnonzero(starts)[0])]
    # last component: the one reaching nothing outside itself
    last = next(c for c in range(ncomp) if all(
        lab[j] == c for j in np.flatnonzero(R[rep[c]])))

    def cyclic(c):
        vs = np.flatnonzero(lab == c)
        return len(vs) > 1 or bool(adj[vs[0], vs[0]])

    return starts, cyclic(first) and cyclic(last)


def finite_transitivity_suite(m: FinitePermModel) -> dict[str, bool]:
    """The nine transitivity notions on a finite model, by exhaustive reachability."""
    out = {}
    for group, prefix in ((True, "group"), (False, "semigroup")):
        R = _reach(_adjacency(m, group))
        full = R.all(axis=1)
        out[f"{prefix}_transitive"] = bool(full.any())
        out[f"{prefix}_hitting"] = bool(R.all())
        out[f"{prefix}_residual"] = bool(full.all())
    starts, biinf = _walk_starts(_adjacency(m, False))
    out["full_branch_dense"] = bool(biinf)
    out["ifs_branch_dense"] = bool(starts.any())
    out["ifs_residual"] = bool(starts.all())
    return {k: out[k] for k in TRANSITIVITY_NAMES}


def suite_agrees(report: dict[str, bool]) -> bool:
    return len(set(report.values())) == 1


# ---------------------------------------------------------------- coverage

@dataclass
class CoverageReport:
    N: int
    budget: int
    covered: int
    fractions: list[float]
    saturated: bool
    start: tuple[float, float]
    first_hit: np.ndarray = field(repr=False)

    @property
    def fraction(self) -> float:
        return self.fractions[-1]

    @property
    def steps(self) -> int:
        return len(self.fractions) - 1

    def coverage_map(self) -> np.ndarray:
        return self.first_hit >= 0

    def rows_touched(self) -> np.ndarray:
        return np.flatnonzero(self.coverage_map().any(axis=0))

    def summary(self) -> dict:
        return {"N": self.N, "budget": self.budget, "steps": self.steps,
                "covered": self.covered, "fraction": self.fraction,
                "saturated": self.saturated, "start": list(self.start)}

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["word_length", "fraction"])
            for k, v in enumerate(self.fractions):
                w.writerow([k, format(v, ".17g")])

    def write_json(self, path):
        write_json(path, self.summary())


def coverage_test(f: AreaMap, g: AreaMap, start, N: int, budget: int,
                  idle: int = IDLE_STEPS) -> CoverageReport:
    """Cell-level breadth-first exploration of the semigroup orbit of ``start``.

    Step ``k`` holds one witness per cell reached by some word of length
    exactly ``k``; both maps are applied to every witness. Stops at
    ``budget`` or after ``idle`` consecutive steps without a new cell.
    """
    if N < 8 or budget < 1:
        raise ValueError("need N >= 8 and budget >= 1")
    if f.chart != g.chart:
        raise ValueError("maps live on different charts")
    chart = f.chart
    front = reduce(chart, as_array(start))
    first_hit = np.full((N, N), -1, dtype=np.int64)
    c = cells_of(chart, front, N)
    first_hit[c[:, 0], c[:, 1]] = 0
    covered = 1
    fractions = [covered / N**2]
    quiet = 0
    saturated = False
    for k in range(1, budget + 1):
        nxt = np.vstack([f._forward(front), g._forward(front)])
        nxt = reduce(chart, nxt, tol=1e-12)
        cells = cells_of(chart, nxt, N)
        flat = cells[:, 0] * N + cells[:, 1]
        _, keep = np.unique(flat, return_index=True)
        keep.sort()
        front = nxt[keep]
        cells = cells[keep]
        new = first_hit[cells[:, 0], cells[:, 1]] < 0
        if new.any():
            first_hit[cells[new, 0], cells[new, 1]] = k
            covered += int(new.sum())
            quiet = 0
        else:
            quiet += 1
        fractions.append(covered / N**2)
        if quiet >= idle or covered == N * N:
            saturated = True
            break
    s = as_array(start)[0]
    return CoverageReport(N, budget, covered, fractions, saturated,
                          (float(s[0]), float(s[1])), first_hit)


def _stencil(cell, N):
    i, j = cell
    offs = np.array([0.2, 0.5, 0.8])
    X, Y = np.meshgrid((i + offs) / N, (j + offs) / N, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()])


def hitting_test(f: AreaMap, g: AreaMap, U_cell, V_cell, N: int, budget: int,
                 group: bool = False) -> Word:
    """Shortest word carrying a 3x3 sample stencil of ``U_cell`` into ``V_cell``.

    Breadth-first over words; stencils landing in the same cells are merged.
    ``budget`` caps the number of words evaluated.
    """
    U, V = CellIndex(*U_cell), CellIndex(*V_cell)
    for c in (U, V):
        if not (0 <= c.i < N and 0 <= c.j < N):
            raise ValueError(f"cell {tuple(c)} outside the {N}x{N} grid")
    maps = (f, g)
    chart = f.chart
    letters = (0, 1, -1, -2) if group else (0, 1)

    def hits(pts):
        c = cells_of(chart, pts, N)
        return bool(np.any((c[:, 0] == V.i) & (c[:, 1] == V.j)))

    pts0 = _stencil(U, N)
    if hits(pts0):
        return Word((), group)
    level = [((), pts0)]
    seen = {tuple(map(tuple, cells_of(chart, pts0, N)))}
    used = 0
    while level:
        nxt = []
        for word, pts in level:
            for a in letters:
                if used >= budget:
                    raise Timeout(f"no hitting word within {budget} evaluations")
                used += 1
                q = _step(maps, a, pts)
                if not chart.periodic_axes[1] and np.any((q[:, 1] < 0) | (q[:, 1] > 1)):
                    continue
                q = reduce(chart, q, tol=1e-12)
                w = word + (a,)
                if hits(q):
                    return Word(w, group)
                key = tuple(map(tuple, cells_of(chart, q, N)))
                if key in seen:
                    continue
                seen.add(key)
                nxt.append((w, q))
        level = nxt
    raise Timeout("search space exhausted without hitting")
