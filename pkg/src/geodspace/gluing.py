"""Coordinate identifications and chart atlases for quotient and compact spaces.

A *gluing* folds chart coordinates back into a fundamental domain (cylinder
wrap, Moebius flip, antipodal inversion).  An *atlas* lets the integrator hop
between charts that share one Christoffel evaluator (the two stereographic
charts of the sphere).  Both return the tangent map ``J`` of the coordinate
change, or ``None`` when the change is a pure translation.
"""
from __future__ import annotations

import math

import numpy as np


def _inversion(x):
    r2 = float(x @ x)
    J = (r2 * np.eye(x.size) - 2.0 * np.outer(x, x)) / (r2 * r2)
    return x / r2, J


class PeriodicGluing:
    """Translation identifications ``x[axis] ~ x[axis] + period``."""

    def __init__(self, periods: dict[int, float]):
        self.periods = dict(periods)

    @property
    def description(self):
        return [f"x{a} ~ x{a} + {p!r}" for a, p in sorted(self.periods.items())]

    def reduce(self, x):
        out = None
        for a, p in self.periods.items():
            if not 0.0 <= x[a] < p:
                if out is None:
                    out = x.copy()
                out[a] = x[a] % p
                if out[a] >= p:  # -tiny % p rounds up to p
                    out[a] = 0.0
        return None if out is None else (out, None)

    def nearest(self, p, q):
        out = q.copy()
        for a, per in self.periods.items():
            out[a] = q[a] + per * round((p[a] - q[a]) / per)
        return out, None


class MobiusGluing:
    """``(x, y) ~ (x + period, -y)`` on a strip."""

    def __init__(self, period: float = 1.0):
        self.period = period

    @property
    def description(self):
        return [f"(x, y) ~ (x + {self.period!r}, -y)"]

    def _shift(self, x, k):
        out = x.copy()
        out[0] = x[0] - k * self.period
        s = -1.0 if k % 2 else 1.0
        out[1] = s * x[1]
        return out, np.diag([1.0, s])

    def reduce(self, x):
        k = math.floor(x[0] / self.period)
        if k == 0:
            return None
        out, J = self._shift(x, k)
        if out[0] >= self.period:
            out[0] = 0.0
        return out, J

    def nearest(self, p, q):
        k0 = round((q[0] - p[0]) / self.period)
        best = None
        for k in (k0 - 1, k0, k0 + 1):
            cand, J = self._shift(q, k)
            d = float(np.linalg.norm(cand - p))
            if best is None or d < best[0]:
                best = (d, cand, J)
        return best[1], best[2]


class AntipodalInversion:
    """Antipodal map of the sphere written in a stereographic chart.

    The closed unit disc is the fundamental domain; antipodal boundary points
    are identified.
    """

    description = ["x ~ -x / |x|^2 (antipodal map)"]

    def reduce(self, x):
        r2 = float(x @ x)
        if r2 <= 1.0:
            return None
        y, J = _inversion(x)
        return -y, -J

    def nearest(self, p, q):
        r2 = float(q @ q)
        if r2 == 0.0:
            return q.copy(), None
        y, J = _inversion(q)
        if np.linalg.norm(-y - p) < np.linalg.norm(q - p):
            return -y, -J
        return q.copy(), None


class ProductGluing:
    def __init__(self, blocks):
        # blocks: list of (slice, gluing-or-None)
        self.blocks = blocks

    @property
    def description(self):
        out = []
        for i, (sl, g) in enumerate(self.blocks):
            if g is not None:
                out.extend(f"factor{i}: {d}" for d in g.description)
        return out

    def _apply(self, x, fn):
        out = None
        J = None
        for sl, g in self.blocks:
            if g is None:
                continue
            r = fn(g, sl)
            if r is None:
                continue
            xb, Jb = r
            if out is None:
                out = x.copy()
            out[sl] = xb
            if Jb is not None:
                if J is None:
                    J = np.eye(x.size)
                J[sl, sl] = Jb
        return out, J

    def reduce(self, x):
        out, J = self._apply(x, lambda g, sl: g.reduce(x[sl]))
        return None if out is None else (out, J)

    def nearest(self, p, q):
        out, J = self._apply(q, lambda g, sl: g.nearest(p[sl], q[sl]))
        return (q.copy() if out is None else out), J


class TrivialAtlas:
    primary = 0

    def switch(self, chart, x):
        return None

    def to_primary(self, chart, x):
        return x, None

    def from_primary(self, chart, x):
        return x, None

    def in_domain(self, chart, x):
        return True

    def punctures(self, chart):
        return ()


class PuncturedChart(TrivialAtlas):
    """Single chart with finitely many deleted points (closed tiny balls)."""

    def __init__(self, points, radius: float = 1e-12):
        self.points = tuple(np.asarray(q, dtype=float) for q in points)
        self.radius = radius

    def in_domain(self, chart, x):
        return all(float(np.linalg.norm(x - q)) > self.radius for q in self.points)

    def punctures(self, chart):
        return self.points


class StereoAtlas:
    """Two stereographic charts related by inversion ``y = x / |x|^2``.

    Chart 0 is the primary chart; the integrator moves to chart 1 whenever
    ``|x| > switch_radius`` and back symmetrically.  With ``punctured`` the
    origin of each chart (the two poles) is excluded.
    """

    primary = 0

    def __init__(self, punctured: bool = False, radius: float = 1e-12,
                 switch_radius: float = 2.0):
        self.punctured = punctured
        self.radius = radius
        self.switch_r2 = switch_radius ** 2

    def switch(self, chart, x):
        if float(x @ x) <= self.switch_r2:
            return None
        y, J = _inversion(x)
        return 1 - chart, y, J

    def to_primary(self, chart, x):
        if chart == 0:
            return x, None
        return _inversion(x)

    from_primary = to_primary  # the transition map is an involution

    def in_domain(self, chart, x):
        if not self.punctured:
            return True
        return float(np.linalg.norm(x)) > self.radius

    def punctures(self, chart):
        return (np.zeros(2),) if self.punctured else ()


class ProductAtlas:
    def __init__(self, blocks):
        # blocks: list of (slice, atlas)
        self.blocks = blocks
        self.primary = tuple(a.primary for _, a in blocks)

    def switch(self, chart, x):
        new = list(chart)
        out = None
        J = None
        for i, (sl, a) in enumerate(self.blocks):
            r = a.switch(chart[i], x[sl])
            if r is None:
                continue
            new[i], xb, Jb = r
            if out is None:
                out = x.copy()
                J = np.eye(x.size)
            out[sl] = xb
            J[sl, sl] = Jb
        return None if out is None else (tuple(new), out, J)

    def to_primary(self, chart, x, _inverse=False):
        out = None
        J = None
        for i, (sl, a) in enumerate(self.blocks):
            if chart[i] == a.primary:
                continue
            fn = a.from_primary if _inverse else a.to_primary
            xb, Jb = fn(chart[i], x[sl])
            if out is None:
                out = x.copy()
                J = np.eye(x.size)
            out[sl] = xb
            J[sl, sl] = Jb
        return (x, None) if out is None else (out, J)

    def from_primary(self, chart, x):
        return self.to_primary(chart, x, _inverse=True)

    def in_domain(self, chart, x):
        return all(a.in_domain(chart[i], x[sl]) for i, (sl, a) in enumerate(self.blocks))

    def punctures(self, chart):
        # (slice, point) pairs; the puncture of a factor is a whole slab
        out = []
        for i, (sl, a) in enumerate(self.blocks):
            for p in a.punctures(chart[i]):
                if isinstance(a, ProductAtlas):
                    sub, p = p
                    out.append((slice(sl.start + sub.start, sl.start + sub.stop), p))
                else:
                    out.append((sl, p))
        return tuple(out)
