"""Exactly area-preserving self-maps of the model charts.

Every map works on float arrays of shape ``(n, 2)`` through the private
``_forward`` / ``_inverse`` hooks, which neither validate nor reduce; the
public :func:`apply` / :func:`apply_inverse` wrap them with chart checks.

``Composite([a, b, c])`` applies ``a`` first, then ``b``, then ``c``; use
:func:`compose` for the mathematical order ``compose(c, b, a)``.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import ChartMismatch, DomainError
from .geometry import ANNULUS, Chart, _like, as_array, reduce, wrapped_delta

TWO_PI = 2.0 * math.pi

# declared parameter ranges, checked by the JSON factory
PARAM_RANGES = {
    "kicked_twist": {"k": (0.0, 10.0)},
    "integrable_twist": {},
}


class AreaMap:
    """Base class for area-preserving chart maps."""

    chart: Chart = ANNULUS

    def _forward(self, xy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _inverse(self, xy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def displacement(self, xy: np.ndarray) -> np.ndarray:
        """Lifted x-displacement of one application (used for rotation numbers).

        The default takes the shortest representative, which is right for maps
        that move points by less than half a turn.
        """
        d = self._forward(xy)[:, 0] - xy[:, 0]
        return d - np.round(d) if self.chart.periodic_axes[0] else d

    def _finish(self, out: np.ndarray) -> np.ndarray:
        return reduce(self.chart, out, tol=1e-12)

    def __call__(self, p):
        return apply(self, p)

    @property
    def inv(self) -> "AreaMap":
        return Inverse(self)

    def to_config(self) -> dict:
        raise NotImplementedError(type(self).__name__)


class Identity(AreaMap):
    def __init__(self, chart: Chart = ANNULUS):
        self.chart = chart

    def _forward(self, xy):
        return xy.copy()

    _inverse = _forward

    def displacement(self, xy):
        return np.zeros(len(xy))

    def to_config(self):
        return {"kind": "identity", "chart": str(self.chart), "params": {}}

    def __repr__(self):
        return f"Identity({self.chart})"


class IntegrableTwist(AreaMap):
    """Shear ``(x, y) -> (x + tau(y), y)`` with polynomial profile ``tau``.

    ``coeffs`` are ascending powers: ``tau(y) = c0 + c1*y + c2*y**2 + ...``.
    A constant profile is a rigid rotation.
    """

    def __init__(self, coeffs: Sequence[float] = (0.0, 1.0), chart: Chart = ANNULUS):
        if not chart.periodic_axes[0]:
            raise ChartMismatch("a twist needs a chart whose x axis wraps")
        self.coeffs = tuple(float(c) for c in coeffs)
        self.chart = chart

    @classmethod
    def linear(cls, slope=1.0, offset=0.0, chart: Chart = ANNULUS):
        return cls((offset, slope), chart)

    @classmethod
    def rotation(cls, angle, chart: Chart = ANNULUS):
        return cls((angle,), chart)

    def tau(self, y):
        return np.polynomial.polynomial.polyval(y, self.coeffs)

    def _forward(self, xy):
        out = xy.copy()
        out[:, 0] = np.mod(xy[:, 0] + self.tau(xy[:, 1]), 1.0)
        return out

    def _inverse(self, xy):
        out = xy.copy()
        out[:, 0] = np.mod(xy[:, 0] - self.tau(xy[:, 1]), 1.0)
        return out

    def displacement(self, xy):
        return self.tau(xy[:, 1])

    def to_config(self):
        return {"kind": "integrable_twist", "chart": str(self.chart),
                "params": {"coeffs": list(self.coeffs)}}

    def __repr__(self):
        return f"IntegrableTwist({self.coeffs}, {self.chart})"


def _kick(shape: str, theta):
    if shape == "sine":
        return np.sin(theta)
    if shape == "two_harmonic":
        return np.sin(theta) + 0.25 * np.sin(2.0 * theta)
    raise ValueError(f"unknown kick shape {shape!r}")


class KickedTwist(AreaMap):
    """Standard-map style kicked twist.

    ``y' = y + k/(2 pi) s(2 pi x)``, ``x' = x + y' (mod 1)``. On the torus
    ``y'`` wraps; on the annulus a kick that leaves [0, 1] is a
    :class:`DomainError` (choose ``k`` small enough, or use the torus).
    """

    def __init__(self, k: float, shape: str = "sine", chart: Chart = ANNULUS):
        if not chart.periodic_axes[0]:
            raise ChartMismatch("a kicked twist needs a chart whose x axis wraps")
        lo, hi = PARAM_RANGES["kicked_twist"]["k"]
        if not lo <= k <= hi:
            raise ValueError(f"kick amplitude {k} outside [{lo}, {hi}]")
        _kick(shape, 0.0)
        self.k = float(k)
        self.shape = shape
        self.chart = chart

    def _kicked_y(self, x, y):
        return y + self.k / TWO_PI * _kick(self.shape, TWO_PI * x)

    def _forward(self, xy):
        out = np.empty_like(xy)
        yn = self._kicked_y(xy[:, 0], xy[:, 1])
        if self.chart.periodic_axes[1]:
            yn = np.mod(yn, 1.0)
        out[:, 0] = np.mod(xy[:, 0] + yn, 1.0)
        out[:, 1] = yn
        return out

    def _inverse(self, xy):
        out = np.empty_like(xy)
        x0 = np.mod(xy[:, 0] - xy[:, 1], 1.0)
        y0 = xy[:, 1] - self.k / TWO_PI * _kick(self.shape, TWO_PI * x0)
        if self.chart.periodic_axes[1]:
            y0 = np.mod(y0, 1.0)
        out[:, 0] = x0
        out[:, 1] = y0
        return out

    def displacement(self, xy):
        yn = self._kicked_y(xy[:, 0], xy[:, 1])
        return np.mod(yn, 1.0) if self.chart.periodic_axes[1] else yn

    def _finish(self, out):
        if not self.chart.periodic_axes[1]:
            y = out[:, 1]
            if np.any((y < 0.0) | (y > 1.0)):
                raise DomainError("kicked orbit left the annulus; reduce k or use the torus chart")
        return reduce(self.chart, out)

    def to_config(self):
        return {"kind": "kicked_twist", "chart": str(self.chart),
                "params": {"k": self.k, "shape": self.shape}}

    def __repr__(self):
        return f"KickedTwist(k={self.k}, {self.shape!r}, {self.chart})"


def _common_chart(maps) -> Chart:
    charts = {m.chart for m in maps}
    if len(charts) != 1:
        raise ChartMismatch(f"maps live on different charts: {sorted(map(str, charts))}")
    return charts.pop()


class Composite(AreaMap):
    def __init__(self, maps: Sequence[AreaMap]):
        if not maps:
            raise ValueError("empty composite")
        self.maps = tuple(maps)
        self.chart = _common_chart(self.maps)

    def _forward(self, xy):
        for m in self.maps:
            xy = m._forward(xy)
        return xy

    def _inverse(self, xy):
        for m in reversed(self.maps):
            xy = m._inverse(xy)
        return xy

    def displacement(self, xy):
        total = np.zeros(len(xy))
        for m in self.maps:
            total += m.displacement(xy)
            xy = m._forward(xy)
        return total

    def _finish(self, out):
        return self.maps[-1]._finish(out)

    def to_config(self):
        return {"kind": "composite", "maps": [m.to_config() for m in self.maps]}

    def __repr__(self):
        return f"Composite({list(self.maps)})"


class Inverse(AreaMap):
    def __init__(self, m: AreaMap):
        self.m = m
        self.chart = m.chart

    def _forward(self, xy):
        return self.m._inverse(xy)

    def _inverse(self, xy):
        return self.m._forward(xy)

    def displacement(self, xy):
        return -self.m.displacement(self.m._inverse(xy))

    def _finish(self, out):
        return self.m._finish(out)

    @property
    def inv(self):
        return self.m

    def to_config(self):
        return {"kind": "inverse", "map": self.m.to_config()}

    def __repr__(self):
        return f"Inverse({self.m!r})"


class Conjugate(AreaMap):
    """``h o g o h^-1``."""

    def __init__(self, g: AreaMap, h: AreaMap):
        self.chart = _common_chart((g, h))
        self.g = g
        self.h = h

    def _forward(self, xy):
        return self.h._forward(self.g._forward(self.h._inverse(xy)))

    def _inverse(self, xy):
        return self.h._forward(self.g._inverse(self.h._inverse(xy)))

    def displacement(self, xy):
        p1 = self.h._inverse(xy)
        d = -self.h.displacement(p1)
        d += self.g.displacement(p1)
        d += self.h.displacement(self.g._forward(p1))
        return d

    def _finish(self, out):
        return self.g._finish(out)

    def to_config(self):
        return {"kind": "conjugate", "g": self.g.to_config(), "h": self.h.to_config()}

    def __repr__(self):
        return f"Conjugate(g={self.g!r}, h={self.h!r})"


def compose(*maps: AreaMap) -> AreaMap:
    """Mathematical composition: ``compose(a, b)(p) == a(b(p))``."""
    return Composite(list(reversed(maps)))


def power(m: AreaMap, n: int) -> AreaMap:
    if n < 1:
        raise ValueError("power must be positive")
    return m if n == 1 else Composite([m] * n)


def conjugate(g: AreaMap, h: AreaMap) -> AreaMap:
    return Conjugate(g, h)


def apply(m: AreaMap, p):
    a = reduce(m.chart, as_array(p))
    return _like(p, m._finish(m._forward(a)))


def apply_inverse(m: AreaMap, p):
    a = reduce(m.chart, as_array(p))
    return _like(p, m._finish(m._inverse(a)))


def _central(m: AreaMap, a, axis: int, step: float):
    e = np.zeros(2)
    e[axis] = step
    return wrapped_delta(m.chart, m._forward(a + e) - m._forward(a - e)) / (2.0 * step)


def jacobian_det(m: AreaMap, p, step: float = 1e-6):
    """Central finite-difference Jacobian determinant of ``m`` at ``p``.

    One Richardson step (steps ``h`` and ``h/2``) cancels the ``h^2`` term,
    which otherwise dominates for maps with large third derivatives.
    """
    if not 1e-7 <= step <= 1e-4:
        raise ValueError("step must lie in [1e-7, 1e-4]")
    a = as_array(p)
    cols = [(4.0 * _central(m, a, axis, step / 2) - _central(m, a, axis, step)) / 3.0
            for axis in range(2)]
    det = cols[0][:, 0] * cols[1][:, 1] - cols[1][:, 0] * cols[0][:, 1]
    if np.ndim(p) == 1 or isinstance(p, tuple):
        return float(det[0])
    return det


def map_from_config(cfg: dict, chart: Chart | None = None) -> AreaMap:
    """Build a map from ``{"kind": ..., "chart": ..., "params": {...}}``."""
    kind = cfg["kind"]
    if "chart" in cfg:
        chart = Chart.from_name(cfg["chart"])
    chart = chart or ANNULUS
    params = cfg.get("params", {})
    if kind == "identity":
        return Identity(chart)
    if kind == "integrable_twist":
        if "coeffs" in params:
            return IntegrableTwist(params["coeffs"], chart)
        return IntegrableTwist.linear(params.get("slope", 1.0), params.get("offset", 0.0), chart)
    if kind == "rotation":
        return IntegrableTwist.rotation(params["angle"], chart)
    if kind == "kicked_twist":
        return KickedTwist(params["k"], params.get("shape", "sine"), chart)
    if kind == "composite":
        return Composite([map_from_config(c, chart) for c in cfg["maps"]])
    if kind == "inverse":
        return Inverse(map_from_config(cfg["map"], chart))
    if kind == "conjugate":
        return Conjugate(map_from_config(cfg["g"], chart), map_from_config(cfg["h"], chart))
    if kind == "separator":
        from .bump import SeparatorSpec, build_separator
        band = params.get("band")
        return build_separator(SeparatorSpec.from_dict(params["spec"]),
                               band=tuple(band) if band else None)
    raise ValueError(f"unknown map kind {kind!r}")

