"""Bump Hamiltonians, their flows, and the three-bump separator.

Each bump is ``alpha(x, y) = eta(x) * rho(y)`` where ``eta(x) = (x - x_i) c(x)``
with ``c`` a C-infinity plateau cutoff and ``rho`` a vertical cutoff, both
spliced from ``exp(-1/s)``. The Hamiltonian field ``(-d_y alpha, d_x alpha)``
equals ``(0, 1)`` on the plateau around the vertical segment at ``x_i``, so
the time-t flow translates that segment by ``(0, t)`` while ``|t| < epsilon``.

Flows are integrated point by point with fixed-step classical RK4 in a
numba kernel; points outside the support are returned untouched.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numba
import numpy as np

from .errors import IntegrationError, SpecError
from .geometry import ANNULUS, SQUARE, as_array, _like
from .maps import AreaMap

MAX_STEP = 1e-3
# 1e-3 leaves ~1e-5 Jacobian drift in the rho ramps; 2.5e-4 keeps it below 1e-6
DEFAULT_STEP = 2.5e-4
CLAMP_TOL = 1e-9


@numba.njit(cache=True)
def _smooth_step(u):
    """exp(-1/s) transition S(u) from 0 (u <= 0) to 1 (u >= 1) and two derivatives."""
    if u <= 0.0:
        return 0.0, 0.0, 0.0
    if u >= 1.0:
        return 1.0, 0.0, 0.0
    v = 1.0 - u
    # exp(-1/u) underflows to 0 below u ~ 1/700; derivatives vanish faster
    f = math.exp(-1.0 / u) if u > 1.0 / 700.0 else 0.0
    g = math.exp(-1.0 / v) if v > 1.0 / 700.0 else 0.0
    f1 = f / (u * u) if f > 0.0 else 0.0
    g1 = -g / (v * v) if g > 0.0 else 0.0
    f2 = f * (1.0 / u ** 4 - 2.0 / u ** 3) if f > 0.0 else 0.0
    g2 = g * (1.0 / v ** 4 - 2.0 / v ** 3) if g > 0.0 else 0.0
    d = f + g
    d1 = f1 + g1
    num = f1 * g - f * g1
    num1 = f2 * g - f * g2
    s = f / d
    s1 = num / (d * d)
    s2 = (num1 * d - 2.0 * num * d1) / (d * d * d)
    return s, s1, s2


@numba.njit(cache=True)
def _eta(x, xc, w, w_in):
    u = x - xc
    au = abs(u)
    if au >= w:
        return 0.0, 0.0, 0.0
    length = w - w_in
    s, s1, s2 = _smooth_step((au - w_in) / length)
    sgn = 1.0 if u >= 0.0 else -1.0
    c = 1.0 - s
    c1 = -s1 * sgn / length
    c2 = -s2 / (length * length)
    return u * c, c + u * c1, 2.0 * c1 + u * c2


@numba.njit(cache=True)
def _rho(y, a0, a1):
    length = a1 - a0
    if y < 0.5:
        s, s1, s2 = _smooth_step((y - a0) / length)
        return s, s1 / length, s2 / (length * length)
    s, s1, s2 = _smooth_step((1.0 - y - a0) / length)
    return s, -s1 / length, s2 / (length * length)


@numba.njit(cache=True)
def _field(x, y, prm):
    e0, e1, _ = _eta(x, prm[0], prm[1], prm[2])
    r0, r1, _ = _rho(y, prm[3], prm[4])
    return -e0 * r1, e1 * r0


@numba.njit(cache=True)
def _field_jac(x, y, prm):
    e0, e1, e2 = _eta(x, prm[0], prm[1], prm[2])
    r0, r1, r2 = _rho(y, prm[3], prm[4])
    # d/dx, d/dy of (-eta rho', eta' rho)
    return -e1 * r1, -e0 * r2, e2 * r0, e1 * r1


@numba.njit(cache=True)
def _flow_kernel(xy, prm, t, max_step):
    n = xy.shape[0]
    out = xy.copy()
    bad = -1
    if t == 0.0:
        return out, bad
    steps = int(math.ceil(abs(t) / max_step))
    dt = t / steps
    xc, w, a0 = prm[0], prm[1], prm[3]
    for k in range(n):
        x = xy[k, 0]
        y = xy[k, 1]
        if abs(x - xc) >= w or y <= a0 or y >= 1.0 - a0:
            continue
        for _ in range(steps):
            k1x, k1y = _field(x, y, prm)
            k2x, k2y = _field(x + 0.5 * dt * k1x, y + 0.5 * dt * k1y, prm)
            k3x, k3y = _field(x + 0.5 * dt * k2x, y + 0.5 * dt * k2y, prm)
            k4x, k4y = _field(x + dt * k3x, y + dt * k3y, prm)
            x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            y += dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        if x < -CLAMP_TOL or x > 1.0 + CLAMP_TOL or y < -CLAMP_TOL or y > 1.0 + CLAMP_TOL:
            bad = k
        out[k, 0] = min(max(x, 0.0), 1.0)
        out[k, 1] = min(max(y, 0.0), 1.0)
    return out, bad


@dataclass(frozen=True)
class BumpSpec:
    """One bump around the vertical segment ``{x} x [delta, 1 - delta]``.

    ``half_width`` bounds the support rectangle ``R = [x-w, x+w] x [0, 1]``;
    ``inner_half_width`` is the plateau where ``eta(x) = x - x_i``;
    ``rho`` rises from 0 at ``rho_outer`` to 1 at ``rho_inner``.
    """

    x: float
    half_width: float = 0.1
    inner_half_width: float = 0.03
    delta: float = 0.1
    rho_outer: float = 0.005
    rho_inner: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.inner_half_width < self.half_width:
            raise SpecError("need 0 < inner_half_width < half_width")
        if not (0.0 < self.x - self.half_width and self.x + self.half_width < 1.0):
            raise SpecError(f"rectangle around x={self.x} leaves (0, 1)")
        if not (0.0 < self.rho_outer < self.rho_inner < self.delta < 0.5):
            raise SpecError("need 0 < rho_outer < rho_inner < delta < 1/2")

    @property
    def epsilon(self) -> float:
        """Largest |t| keeping the shifted segment inside the translation zone."""
        return self.delta - self.rho_inner

    @property
    def rectangle(self) -> tuple[float, float, float, float]:
        return (self.x - self.half_width, self.x + self.half_width, 0.0, 1.0)

    @property
    def params(self) -> np.ndarray:
        return np.array([self.x, self.half_width, self.inner_half_width,
                         self.rho_outer, self.rho_inner])

    def alpha(self, p) -> np.ndarray:
        a = as_array(p)
        out = np.empty(len(a))
        for k, (x, y) in enumerate(a):
            out[k] = _eta(x, self.x, self.half_width, self.inner_half_width)[0] * \
                _rho(y, self.rho_outer, self.rho_inner)[0]
        return out

    def speed_bound(self, samples: int = 401) -> float:
        """Max field speed over a dense grid of the support."""
        xs = np.linspace(self.x - self.half_width, self.x + self.half_width, samples)
        ys = np.linspace(0.0, 1.0, 4 * samples)
        X, Y = np.meshgrid(xs, ys)
        v = hamiltonian_field(self, np.column_stack([X.ravel(), Y.ravel()]))
        return float(np.max(np.hypot(v[:, 0], v[:, 1])))


def hamiltonian_field(b: BumpSpec, p):
    """Field ``(-d_y alpha, d_x alpha)`` evaluated from the closed-form profile."""
    a = as_array(p)
    prm = b.params
    out = np.empty_like(a)
    for k in range(len(a)):
        out[k] = _field(a[k, 0], a[k, 1], prm)
    if np.ndim(p) == 1 or isinstance(p, tuple):
        return out[0]
    return out


def field_jacobian(b: BumpSpec, p) -> np.ndarray:
    """Analytic 2x2 derivative of the field, shape (n, 2, 2)."""
    a = as_array(p)
    prm = b.params
    out = np.empty((len(a), 2, 2))
    for k in range(len(a)):
        out[k] = np.reshape(_field_jac(a[k, 0], a[k, 1], prm), (2, 2))
    return out


def field_divergence(b: BumpSpec, p) -> np.ndarray:
    j = field_jacobian(b, p)
    return j[:, 0, 0] + j[:, 1, 1]


def flow(b: BumpSpec, t: float, p, max_step: float = DEFAULT_STEP):
    """Time-``t`` flow of the bump field (RK4, step <= ``max_step``)."""
    if abs(t) > 1.0:
        raise ValueError("flow time must satisfy |t| <= 1")
    if not 0.0 < max_step <= MAX_STEP:
        raise ValueError(f"step must lie in (0, {MAX_STEP}]")
    a = np.ascontiguousarray(as_array(p), dtype=float)
    out, bad = _flow_kernel(a, b.params, float(t), float(max_step))
    if bad >= 0:
        raise IntegrationError(f"trajectory from {tuple(a[bad])} left Q by more than {CLAMP_TOL}")
    return _like(p, out)


@dataclass(frozen=True)
class SeparatorSpec:
    bumps: tuple[BumpSpec, BumpSpec, BumpSpec]
    t: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if len(self.bumps) != 3 or len(self.t) != 3:
            raise SpecError("a separator has exactly three bumps and three times")
        xs = [b.x for b in self.bumps]
        if not xs[0] < xs[1] < xs[2]:
            raise SpecError("bump abscissae must be strictly increasing")
        for left, right in zip(self.bumps, self.bumps[1:]):
            if left.x + left.half_width >= right.x - right.half_width:
                raise SpecError(f"rectangles around {left.x} and {right.x} overlap")
        for b, ti in zip(self.bumps, self.t):
            if abs(ti) >= b.epsilon:
                raise SpecError(f"|t|={abs(ti)} not below epsilon={b.epsilon} for bump at {b.x}")

    @classmethod
    def standard(cls, xs=(0.25, 0.5, 0.75), t=(0.0, 0.0, 0.0), **bump_kw) -> "SeparatorSpec":
        return cls(tuple(BumpSpec(x, **bump_kw) for x in xs), tuple(float(v) for v in t))

    def with_t(self, t) -> "SeparatorSpec":
        return SeparatorSpec(self.bumps, tuple(float(v) for v in t))

    @property
    def epsilon(self) -> float:
        return min(b.epsilon for b in self.bumps)

    def to_dict(self) -> dict:
        return {"bumps": [asdict(b) for b in self.bumps], "t": list(self.t)}

    @classmethod
    def from_dict(cls, d: dict) -> "SeparatorSpec":
        return cls(tuple(BumpSpec(**b) for b in d["bumps"]), tuple(float(v) for v in d["t"]))


class Separator(AreaMap):
    """``h = phi_1^{t_1} o phi_2^{t_2} o phi_3^{t_3}`` as an area map.

    With ``band=(lo, hi)`` the map lives on the annulus: the band is
    identified affinely with Q and ``h`` is the identity off the band.
    """

    def __init__(self, spec: SeparatorSpec, band=None, max_step: float = DEFAULT_STEP):
        self.spec = spec
        self.band = None if band is None else (float(band[0]), float(band[1]))
        self.max_step = max_step
        self.chart = SQUARE if band is None else ANNULUS
        if self.band is not None and not 0.0 <= self.band[0] < self.band[1] <= 1.0:
            raise SpecError(f"invalid band {band}")

    def to_square(self, xy: np.ndarray):
        if self.band is None:
            return xy, np.ones(len(xy), dtype=bool)
        lo, hi = self.band
        inside = (xy[:, 1] >= lo) & (xy[:, 1] <= hi)
        q = xy.copy()
        q[:, 1] = (xy[:, 1] - lo) / (hi - lo)
        return q, inside

    def from_square(self, q: np.ndarray) -> np.ndarray:
        if self.band is None:
            return q
        lo, hi = self.band
        out = q.copy()
        out[:, 1] = lo + (hi - lo) * q[:, 1]
        return out

    def _run(self, xy, sign):
        xy = np.ascontiguousarray(xy, dtype=float)
        q, inside = self.to_square(xy)
        sub = np.ascontiguousarray(q[inside])
        start = sub.copy()
        order = range(2, -1, -1) if sign > 0 else range(3)
        for i in order:
            b = self.spec.bumps[i]
            sub, bad = _flow_kernel(sub, b.params, sign * self.spec.t[i], self.max_step)
            if bad >= 0:
                raise IntegrationError(f"separator trajectory left Q (bump {i})")
        out = xy.copy()
        moved = np.any(sub != start, axis=1)
        idx = np.flatnonzero(inside)[moved]
        out[idx] = self.from_square(sub[moved])
        return out

    def _forward(self, xy):
        return self._run(xy, +1.0)

    def _inverse(self, xy):
        return self._run(xy, -1.0)

    def to_config(self):
        params = {"spec": self.spec.to_dict()}
        if self.band is not None:
            params["band"] = list(self.band)
        return {"kind": "separator", "chart": str(self.chart), "params": params}

    def __repr__(self):
        return f"Separator(t={self.spec.t}, band={self.band})"


def build_separator(spec: SeparatorSpec, band=None, max_step: float = DEFAULT_STEP) -> Separator:
    return Separator(spec, band=band, max_step=max_step)


def sup_distance_to_identity(m: AreaMap, points: np.ndarray) -> float:
    from .geometry import chart_distance
    return float(np.max(chart_distance(m.chart, m._forward(points), points)))
