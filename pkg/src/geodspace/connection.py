"""Connections, geodesic integration, exponential/logarithm maps, transport.

Geodesics solve ``x'' + Gamma(x)(x', x') = 0`` in chart coordinates.  The
integrator is an adaptive Dormand-Prince 5(4) pair written out here (rather
than delegated to ``scipy.integrate``) because chart exits, punctures,
identification maps and atlas switches all have to be handled between steps.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    Inextendible,
    InsufficientSamples,
    NoConvergence,
    OutOfChart,
    StepUnderflow,
)
from .gluing import TrivialAtlas

DEFAULT_TOL = 1e-9
CLIPPED_LIMIT = 64

__all__ = [
    "DEFAULT_TOL",
    "Space",
    "GeodesicState",
    "StepStats",
    "Trajectory",
    "christoffel_at",
    "geodesic_residual",
    "integrate",
    "exp_map",
    "log_map",
    "parallel_transport",
]


@dataclass(frozen=True, eq=False)
class Space:
    """A chart description of a manifold with a torsion-free linear connection.

    ``christoffel_fn(p)`` returns ``G`` with ``G[k, i, j] = Gamma^k_ij``.
    Every chart of ``atlas`` is assumed to share that evaluator.  Optional
    fast paths: ``accel_fn(p, v) = -Gamma(v, v)``, ``distance_fn`` for an
    analytic metric distance and ``separation_fn`` for the distance used when
    comparing chart points (defaults to chart-Euclidean distance between
    nearest identified copies).
    """

    name: str
    dim: int
    christoffel_fn: Callable[[np.ndarray], np.ndarray]
    domain_fn: Callable[[np.ndarray], bool]
    metric_fn: Callable[[np.ndarray], np.ndarray] | None = None
    accel_fn: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    distance_fn: Callable[[np.ndarray, np.ndarray], float] | None = None
    separation_fn: Callable[[np.ndarray, np.ndarray], float] | None = None
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    is_hadamard: bool = False
    is_pseudohadamard: bool = False
    is_flat: bool = False
    gluing: object | None = None
    atlas: object = field(default_factory=TrivialAtlas)
    factors: tuple = ()
    signature: tuple | None = None

    @property
    def has_metric(self) -> bool:
        return self.metric_fn is not None

    @property
    def identifications(self) -> list[str]:
        return [] if self.gluing is None else list(self.gluing.description)

    @property
    def flags(self) -> dict:
        return {
            "has_metric": self.has_metric,
            "is_hadamard": self.is_hadamard,
            "is_flat": self.is_flat,
            "identifications": self.identifications,
        }

    def in_chart(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dim,) or not np.all(np.isfinite(p)):
            return False
        return self._chart_ok(self.atlas.primary, p)

    def _chart_ok(self, chart, x) -> bool:
        if self.factors:
            off = 0
            for i, f in enumerate(self.factors):
                if not f._chart_ok(chart[i], x[off:off + f.dim]):
                    return False
                off += f.dim
            return True
        ok = self.atlas.in_domain(chart, x)
        if ok and chart == self.atlas.primary:
            ok = bool(self.domain_fn(x))
        return ok

    def _puncture_blocks(self, chart):
        pts = self.atlas.punctures(chart)
        if self.factors:
            return pts
        return tuple((slice(0, self.dim), p) for p in pts)

    def christoffel(self, p) -> np.ndarray:
        return self.christoffel_fn(np.asarray(p, dtype=float))

    def acceleration(self, p, v) -> np.ndarray:
        if self.accel_fn is not None:
            return self.accel_fn(p, v)
        return -np.einsum("kij,i,j->k", self.christoffel_fn(p), v, v)

    def metric(self, p) -> np.ndarray:
        if self.metric_fn is None:
            raise ValueError(f"{self.name} carries no metric")
        return self.metric_fn(np.asarray(p, dtype=float))

    def inner(self, p, u, w) -> float:
        p = np.asarray(p, dtype=float)
        u = np.asarray(u, dtype=float)
        w = np.asarray(w, dtype=float)
        if self.metric_fn is None:
            return float(np.dot(u, w))
        return float(u @ self.metric_fn(p) @ w)

    def norm(self, p, v) -> float:
        """Speed of ``v`` under the normalization convention of the space."""
        return math.sqrt(max(self.inner(p, v, v), 0.0))

    def reduce(self, p, v=None):
        """Fold ``(p, v)`` into the fundamental domain."""
        p = np.asarray(p, dtype=float)
        if self.gluing is None:
            return (p, v) if v is not None else p
        r = self.gluing.reduce(p)
        if r is None:
            return (p, v) if v is not None else p
        q, J = r
        if v is None:
            return q
        return q, (np.asarray(v, dtype=float) if J is None else J @ v)

    def nearest(self, p, q):
        """Copy of ``q`` closest to ``p`` and the tangent map carrying vectors there."""
        if self.gluing is None:
            return np.asarray(q, dtype=float), None
        return self.gluing.nearest(np.asarray(p, float), np.asarray(q, float))

    def separation(self, p, q) -> float:
        if self.separation_fn is not None:
            return float(self.separation_fn(np.asarray(p, float), np.asarray(q, float)))
        qq, _ = self.nearest(p, q)
        return float(np.linalg.norm(np.asarray(p, float) - qq))

    def distance(self, p, q) -> float:
        if self.distance_fn is None:
            raise ValueError(f"{self.name} has no analytic distance")
        return float(self.distance_fn(np.asarray(p, float), np.asarray(q, float)))

    def __repr__(self):
        return f"Space({self.name!r}, dim={self.dim})"


@dataclass(frozen=True, eq=False)
class GeodesicState:
    point: np.ndarray
    velocity: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", np.array(self.point, dtype=float).reshape(-1))
        object.__setattr__(self, "velocity", np.array(self.velocity, dtype=float).reshape(-1))
        if self.point.shape != self.velocity.shape:
            raise ValueError("point and velocity dimensions differ")

    def to_dict(self):
        return {"point": self.point.tolist(), "velocity": self.velocity.tolist()}

    def __repr__(self):
        return f"GeodesicState(point={self.point.tolist()}, velocity={self.velocity.tolist()})"


@dataclass
class StepStats:
    n_steps: int = 0
    n_rejected: int = 0
    max_step: float = 0.0
    max_local_error: float = 0.0


# Dormand-Prince 5(4) tableau with the 4th-order continuous extension.
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1])
_A = np.array([
    [0, 0, 0, 0, 0],
    [1 / 5, 0, 0, 0, 0],
    [3 / 40, 9 / 40, 0, 0, 0],
    [44 / 45, -56 / 15, 32 / 9, 0, 0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
])
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([-71 / 57600, 0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


def _dopri_step(f, y, f0, h):
    K = np.empty((7, y.size))
    K[0] = f0
    for s in range(1, 6):
        K[s] = f(y + h * (_A[s, :s] @ K[:s]))
    y_new = y + h * (_B @ K[:6])
    K[6] = f(y_new)
    err = h * (_E @ K)
    return y_new, K, err


class _Segment:
    __slots__ = ("t0", "h", "y0", "Q", "chart")

    def __init__(self, t0, h, y0, K, chart):
        self.t0 = t0
        self.h = h
        self.y0 = y0
        self.Q = K.T @ _P
        self.chart = chart

    def __call__(self, t):
        th = (t - self.t0) / self.h
        return self.y0 + self.h * (self.Q @ np.array([th, th * th, th ** 3, th ** 4]))


def _make_rhs(space: Space, m: int):
    n = space.dim
    if m == 0:
        def rhs(y):
            x = y[:n]
            v = y[n:]
            return np.concatenate((v, space.acceleration(x, v)))
        return rhs

    def rhs(y):
        x = y[:n]
        v = y[n:2 * n]
        W = y[2 * n:].reshape(m, n)
        G = space.christoffel_fn(x)
        a = -np.einsum("kij,i,j->k", G, v, v)
        dW = -np.einsum("kij,i,mj->mk", G, v, W)
        return np.concatenate((v, a, dW.ravel()))
    return rhs


def _map_state(y, n, m, J, x_new):
    out = y.copy()
    out[:n] = x_new
    if J is not None:
        out[n:2 * n] = J @ y[n:2 * n]
        if m:
            out[2 * n:] = (y[2 * n:].reshape(m, n) @ J.T).ravel()
    return out


def _to_primary(space, chart, y, m):
    n = space.dim
    x, J = space.atlas.to_primary(chart, y[:n])
    if J is not None or x is not y[:n]:
        y = _map_state(y, n, m, J, x)
    if space.gluing is not None:
        r = space.gluing.reduce(y[:n])
        if r is not None:
            y = _map_state(y, n, m, r[1], r[0])
    return y


@dataclass
class Trajectory:
    """Sampled geodesic with dense output.

    ``t`` is strictly increasing.  ``t_start``/``t_stop`` record the direction
    of integration (``t_stop < t_start`` for backward runs).  Samples are
    reported in the primary chart, folded into the fundamental domain.
    """

    space: Space
    t: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    transported: np.ndarray | None
    t_start: float
    t_stop: float
    truncated: bool = False
    truncation: str | None = None
    stats: StepStats = field(default_factory=StepStats)
    _segments: list = field(default_factory=list, repr=False)

    @property
    def samples(self):
        return [(float(t), GeodesicState(p, v)) for t, p, v in zip(self.t, self.points, self.velocities)]

    @property
    def initial(self) -> GeodesicState:
        i = 0 if self.t_stop >= self.t_start else -1
        return GeodesicState(self.points[i], self.velocities[i])

    @property
    def final(self) -> GeodesicState:
        i = -1 if self.t_stop >= self.t_start else 0
        return GeodesicState(self.points[i], self.velocities[i])

    @property
    def final_transported(self):
        if self.transported is None:
            return None
        return self.transported[-1 if self.t_stop >= self.t_start else 0]

    @property
    def t_end(self) -> float:
        """Parameter actually reached (differs from ``t_stop`` if truncated)."""
        return float(self.t[-1] if self.t_stop >= self.t_start else self.t[0])

    def _full(self, t):
        t = float(t)
        lo, hi = float(self.t[0]), float(self.t[-1])
        if not lo - 1e-12 <= t <= hi + 1e-12:
            raise ValueError(f"t={t} outside trajectory range [{lo}, {hi}]")
        if not self._segments:
            return None
        i = bisect.bisect_right(self.t, t) - 1
        i = min(max(i, 0), len(self._segments) - 1)
        seg = self._segments[i]
        m = 0 if self.transported is None else self.transported.shape[1]
        return _to_primary(self.space, seg.chart, seg(t), m)

    def at(self, t) -> GeodesicState:
        y = self._full(t)
        if y is None:
            return GeodesicState(self.points[0], self.velocities[0])
        n = self.space.dim
        return GeodesicState(y[:n], y[n:2 * n])

    def transported_at(self, t):
        y = self._full(t)
        n = self.space.dim
        m = self.transported.shape[1]
        if y is None:
            return self.transported[0]
        return y[2 * n:].reshape(m, n)

    def resample(self, ts):
        ts = np.asarray(ts, dtype=float)
        states = [self.at(t) for t in ts]
        return ts, np.array([s.point for s in states]), np.array([s.velocity for s in states])


def christoffel_at(space: Space, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if not space.in_chart(p):
        raise OutOfChart(f"{p.tolist()} is outside the chart of {space.name}")
    return space.christoffel(p)


def _puncture_hit(space, chart, seg, t0, t1, x0, x1, radius):
    """Closest approach of the step's dense path to any deleted point."""
    blocks = space._puncture_blocks(chart)
    for sl, q in blocks:
        a = x0[sl] - q
        b = x1[sl] - q
        if min(np.linalg.norm(a), np.linalg.norm(b)) > 4.0 * np.linalg.norm(b - a) + 0.05:
            continue
        ts = np.linspace(t0, t1, 17)
        d = [np.linalg.norm(seg(t)[sl] - q) for t in ts]
        k = int(np.argmin(d))
        lo = ts[max(k - 1, 0)]
        hi = ts[min(k + 1, 16)]
        for _ in range(40):
            m1 = lo + (hi - lo) * 0.381966
            m2 = lo + (hi - lo) * 0.618034
            if np.linalg.norm(seg(m1)[sl] - q) < np.linalg.norm(seg(m2)[sl] - q):
                hi = m2
            else:
                lo = m1
        if min(d[k], np.linalg.norm(seg(0.5 * (lo + hi))[sl] - q)) <= radius:
            return True
    return False


def integrate(space: Space, s0: GeodesicState, t_end: float, tol: float = DEFAULT_TOL, *,
              max_step: float = np.inf, transport=None, max_steps: int = 200000,
              puncture_radius: float = 1e-9) -> Trajectory:
    """Integrate the geodesic starting at ``s0`` over ``[0, t_end]``.

    Each accepted step has estimated local error below ``tol`` (mixed
    absolute/relative RMS norm).  Identifications and chart switches are
    applied between steps; if the geodesic leaves the chart (or runs into a
    puncture, detected within ``puncture_radius``) the trajectory ends at the
    last in-chart state and is marked truncated.  ``transport`` is an optional
    ``(m, dim)`` array of vectors parallel-transported along the way.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = space.dim
    x0 = np.asarray(s0.point, dtype=float)
    v0 = np.asarray(s0.velocity, dtype=float)
    if not space.in_chart(x0):
        raise OutOfChart(f"start point {x0.tolist()} outside chart of {space.name}")
    W0 = np.zeros((0, n)) if transport is None else np.atleast_2d(np.asarray(transport, dtype=float))
    m = W0.shape[0]
    rhs = _make_rhs(space, m)

    chart = space.atlas.primary
    y = np.concatenate((x0, v0, W0.ravel()))
    y = _to_primary(space, chart, y, m)
    sw = space.atlas.switch(chart, y[:n])
    if sw is not None:
        chart, xs, J = sw
        y = _map_state(y, n, m, J, xs)

    ts = [0.0]
    ys = [_to_primary(space, chart, y, m)]
    segments = []
    stats = StepStats()
    truncated = False
    reason = None
    t_end = float(t_end)
    direction = 1.0 if t_end >= 0 else -1.0
    t = 0.0
    # accepted steps that first had to be shortened to stay in the chart
    clipped = 0
    exit_halved = False

    if t_end != 0.0:
        f0 = rhs(y)
        scale0 = tol + tol * np.abs(y)
        d0 = np.sqrt(np.mean((y / scale0) ** 2))
        d1 = np.sqrt(np.mean((f0 / scale0) ** 2))
        h_abs = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        y1 = y + direction * h_abs * f0
        d2 = np.sqrt(np.mean(((rhs(y1) - f0) / scale0) ** 2)) / h_abs
        h1 = max(1e-6, h_abs * 1e-3) if max(d1, d2) <= 1e-15 else (0.01 / max(d1, d2)) ** 0.2
        h_abs = min(100 * h_abs, h1, max_step, abs(t_end))

    while t_end != 0.0 and direction * (t_end - t) > 0:
        if stats.n_steps >= max_steps:
            truncated, reason = True, "max_steps"
            break
        floor = 1e-12 * max(1.0, abs(t))
        remaining = abs(t_end - t)
        last = h_abs >= remaining
        h_abs = min(h_abs, max_step, remaining)
        h = direction * h_abs
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            y_new, K, err = _dopri_step(rhs, y, f0, h)
        scale = tol + tol * np.maximum(np.abs(y), np.abs(y_new))
        en = float(np.sqrt(np.mean((err / scale) ** 2)))
        if not np.isfinite(en) or not np.all(np.isfinite(y_new)):
            en = np.inf
        if en > 1.0:
            stats.n_rejected += 1
            h_abs *= 0.2 if not np.isfinite(en) else max(0.2, 0.9 * en ** -0.2)
            if h_abs < floor:
                raise StepUnderflow(f"step size fell below {floor:g} at t={t:g} in {space.name}")
            continue
        t_new = t_end if last and h_abs >= remaining else t + h
        seg = _Segment(t, t_new - t, y, K, chart)
        x_new = y_new[:n]
        if not space._chart_ok(chart, x_new) or _puncture_hit(space, chart, seg, t, t_new, y[:n], x_new, puncture_radius):
            stats.n_rejected += 1
            h_abs *= 0.5
            exit_halved = True
            if h_abs < floor:
                truncated, reason = True, "chart_exit"
                break
            continue
        # leaky count, so alternating clipped/free steps near the edge still add up
        clipped = clipped + 2 if exit_halved else max(clipped - 1, 0)
        exit_halved = False
        if clipped > CLIPPED_LIMIT:
            # pinned against the chart edge below floating-point resolution
            truncated, reason = True, "chart_resolution"
            break
        segments.append(seg)
        stats.n_steps += 1
        stats.max_step = max(stats.max_step, abs(t_new - t))
        stats.max_local_error = max(stats.max_local_error, en * tol)
        t = t_new
        y = y_new
        moved = False
        if space.gluing is not None and chart == space.atlas.primary:
            r = space.gluing.reduce(y[:n])
            if r is not None:
                y = _map_state(y, n, m, r[1], r[0])
                moved = True
        sw = space.atlas.switch(chart, y[:n])
        if sw is not None:
            chart, xs, J = sw
            y = _map_state(y, n, m, J, xs)
            moved = True
        f0 = rhs(y) if moved else K[6]
        ts.append(t)
        ys.append(_to_primary(space, chart, y, m))
        factor = 5.0 if en == 0 else min(5.0, 0.9 * en ** -0.2)
        h_abs *= factor

    ts = np.array(ts)
    Y = np.array(ys)
    if direction < 0:
        ts = ts[::-1].copy()
        Y = Y[::-1].copy()
        segments = segments[::-1]
        # bisect needs segment i to cover [t[i], t[i+1]]
    traj = Trajectory(
        space=space,
        t=ts,
        points=Y[:, :n].copy(),
        velocities=Y[:, n:2 * n].copy(),
        transported=Y[:, 2 * n:].reshape(len(ts), m, n).copy() if m else None,
        t_start=0.0,
        t_stop=t_end,
        truncated=truncated,
        truncation=reason,
        stats=stats,
        _segments=segments,
    )
    return traj


def _fd_weights(nodes, x0):
    """First-derivative weights on arbitrary nodes (Lagrange differentiation)."""
    nodes = np.asarray(nodes, dtype=float) - x0
    k = nodes.size
    scale = max(np.max(np.abs(nodes)), 1e-300)
    z = nodes / scale
    V = np.vander(z, k, increasing=True).T
    rhs = np.zeros(k)
    rhs[1] = 1.0
    return np.linalg.solve(V, rhs) / scale


def geodesic_residual(space: Space, traj: Trajectory, t: float) -> np.ndarray:
    """Finite-difference residual of the first-order geodesic system at ``t``.

    Returns ``(x' - v, v' + Gamma(v, v))`` evaluated at the sample nearest
    ``t`` with a stencil of up to five neighbouring samples.  Identified
    copies are unwrapped before differencing.
    """
    N = len(traj.t)
    if N < 3:
        raise InsufficientSamples("need at least three samples")
    if not traj.t[0] - 1e-12 <= t <= traj.t[-1] + 1e-12:
        raise ValueError("t outside trajectory range")
    k = int(np.argmin(np.abs(traj.t - t)))
    width = min(5, N)
    lo = min(max(k - width // 2, 0), N - width)
    idx = range(lo, lo + width)
    xk = traj.points[k]
    vk = traj.velocities[k]
    X = []
    V = []
    for j in idx:
        q, J = space.nearest(xk, traj.points[j])
        X.append(q)
        V.append(traj.velocities[j] if J is None else J @ traj.velocities[j])
    # difference in whichever chart the integrator would use at this sample
    sw = space.atlas.switch(space.atlas.primary, xk)
    if sw is not None:
        chart = sw[0]
        for i in range(len(X)):
            y, J = space.atlas.from_primary(chart, X[i])
            X[i] = y
            V[i] = V[i] if J is None else J @ V[i]
        xk, vk = X[k - lo], V[k - lo]
    w = _fd_weights(traj.t[lo:lo + width], traj.t[k])
    xdot = w @ np.array(X)
    vdot = w @ np.array(V)
    return np.concatenate((xdot - vk, vdot - space.acceleration(xk, vk)))


def exp_map(space: Space, p, v, tol: float = DEFAULT_TOL) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    if not space.in_chart(p):
        raise OutOfChart(f"{p.tolist()} outside chart of {space.name}")
    if not np.any(v):
        return p.copy()
    traj = integrate(space, GeodesicState(p, v), 1.0, tol)
    if traj.truncated:
        raise Inextendible(f"geodesic from {p.tolist()} stops at t={traj.t_end:.6g} < 1")
    return traj.final.point


def _endpoint(space, p, v, tol):
    traj = integrate(space, GeodesicState(p, v), 1.0, tol)
    if traj.truncated:
        return None, traj
    return traj.final.point, traj


def log_map(space: Space, p, q, tol: float = 1e-10, *, max_iter: int = 50,
            fd_step: float = 1e-6, rtol: float = 1e-11, accept: float = 1e-8) -> np.ndarray:
    """Initial velocity ``v`` with ``exp_map(p, v) = q``, by Newton shooting.

    Jacobians of the endpoint map come from forward differences of step
    ``fd_step``; Newton steps are damped by halving until the endpoint
    residual decreases.  Unique only on spaces with a pole at ``p``.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if not space.in_chart(p) or not space.in_chart(q):
        raise OutOfChart("log_map endpoints must lie in the chart")
    n = space.dim
    if np.array_equal(p, q):
        return np.zeros(n)
    v = q - p
    end, _ = _endpoint(space, p, v, tol)
    while end is None:
        v = 0.5 * v
        end, _ = _endpoint(space, p, v, tol)
    r = end - q
    nr = float(np.linalg.norm(r))
    for _ in range(max_iter):
        if nr <= rtol * max(1.0, float(np.linalg.norm(q))):
            return v
        J = np.empty((n, n))
        h = fd_step * max(1.0, float(np.linalg.norm(v)))
        for j in range(n):
            dv = np.zeros(n)
            dv[j] = h
            e, _ = _endpoint(space, p, v + dv, tol)
            if e is None:
                e2, _ = _endpoint(space, p, v - dv, tol)
                J[:, j] = (end - e2) / h
            else:
                J[:, j] = (e - end) / h
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -r, rcond=None)[0]
        alpha = 1.0
        improved = False
        while alpha > 1e-6:
            v_try = v + alpha * step
            e, _ = _endpoint(space, p, v_try, tol)
            if e is not None:
                r_try = e - q
                nr_try = float(np.linalg.norm(r_try))
                if nr_try < nr:
                    v, end, r, nr = v_try, e, r_try, nr_try
                    improved = True
                    break
            alpha *= 0.5
        if not improved:
            break
    if nr <= accept:
        return v
    raise NoConvergence(f"log_map residual {nr:.3g} after Newton shooting in {space.name}")


def parallel_transport(space: Space, traj: Trajectory, v0, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Transport ``v0`` from the trajectory's initial state to its end.

    The transport ODE ``w' + Gamma(x', w) = 0`` is integrated jointly with the
    geodesic from ``traj.initial`` over the parameter span the trajectory
    actually covers.
    """
    start = traj.initial
    span = traj.t_end
    t2 = integrate(space, start, span, tol, transport=np.atleast_2d(v0))
    if t2.truncated:
        raise Inextendible("transport geodesic truncated")
    return t2.final_transported[0]
