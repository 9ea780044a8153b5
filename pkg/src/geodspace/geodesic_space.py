"""Canonical representatives of geodesic classes and charts on spaces of geodesics.

A class is stored as one reproducible state on the geodesic: the velocity is
normalized (unit metric speed, or unit chart norm without a metric) and the
point is slid to a space-specific anchor computed in closed form:

* flat R^n, Klein ball: point closest to the chart origin;
* strip / Moebius band: crossing of the core ``y = 0`` (horizontal Moebius
  lines: crossing of the wall ``x = 0`` with ``y >= 0``);
* cylinder / torus: crossing of the wall ``y = 0`` with the smallest ``|x|``
  (torus: smallest ``x mod 2pi`` in a finite window of crossings);
* sphere, projective plane: the highest point (largest ``z``) of the great
  circle, the equator anchored at ``e1``; for punctured variants, lines
  through the deleted points anchor at the equator.

Unoriented classes then keep whichever of ``U, -U`` has its first
significant component positive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .connection import GeodesicState, Space, integrate, log_map
from .errors import AnchorNotFound, OutsideDisc, UnsupportedChart
from .models import (
    TWO_PI,
    klein_distance,
    make_space,
    sphere_tangent_to_stereo,
    sphere_to_stereo,
    stereo_tangent_to_sphere,
    stereo_to_sphere,
)

FLIP_EPS = 1e-12
TORUS_WINDOW = 20000
FLOW_TOL = 1e-12

__all__ = [
    "GeodesicClass",
    "MobiusChartPoint",
    "TSPoint",
    "ProductClassPoint",
    "canonicalize",
    "canonical_anchor",
    "class_distance",
    "flow",
    "chart_g_r2",
    "mobius_chart_distance",
    "chart_ts",
    "chart_ts_inverse",
    "hadamard_F",
    "hadamard_F_inverse",
    "product_chart",
    "converges_to_vertical",
]


@dataclass(frozen=True, eq=False)
class GeodesicClass:
    space_id: str
    rep: GeodesicState
    oriented: bool
    anchored: bool = True
    space: Space | None = field(default=None, repr=False)

    def to_dict(self):
        return {
            "kind": "geodesic_class",
            "space": self.space_id,
            "oriented": self.oriented,
            "anchored": self.anchored,
            "rep": self.rep.to_dict(),
        }

    def flipped(self) -> "GeodesicClass":
        return GeodesicClass(self.space_id, GeodesicState(self.rep.point, -self.rep.velocity),
                             self.oriented, self.anchored, self.space)


@dataclass(frozen=True)
class MobiusChartPoint:
    kind: str  # "interior" | "boundary"
    coords: tuple | None = None
    theta: float | None = None

    def __post_init__(self):
        if self.kind == "interior":
            if self.coords is None or self.theta is not None:
                raise ValueError("interior chart point needs coords only")
            if self.coords[0] ** 2 + self.coords[1] ** 2 >= 1.0:
                raise ValueError("interior chart point must lie in the open unit disc")
        elif self.kind == "boundary":
            if self.theta is None or self.coords is not None:
                raise ValueError("boundary chart point needs theta only")
            if not 0.0 < self.theta < math.pi:
                raise ValueError("boundary angle must lie in (0, pi); theta = 0 is deleted")
        else:
            raise ValueError(f"unknown chart point kind {self.kind!r}")

    def positions(self):
        """Disc positions: one for interior points, the antipodal pair for boundary points."""
        if self.kind == "interior":
            return [np.array(self.coords, dtype=float)]
        e = np.array([math.cos(self.theta), math.sin(self.theta)])
        return [e, -e]

    def to_dict(self):
        if self.kind == "interior":
            return {"kind": "interior", "coords": [float(c) for c in self.coords]}
        return {"kind": "boundary", "theta": float(self.theta)}


@dataclass(frozen=True, eq=False)
class TSPoint:
    direction: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "direction", np.asarray(self.direction, dtype=float).copy())
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=float).copy())

    def to_dict(self):
        return {"kind": "ts", "direction": self.direction.tolist(), "offset": self.offset.tolist()}


@dataclass(frozen=True, eq=False)
class ProductClassPoint:
    kind: str  # "nonvertical" | "vertical"
    base: np.ndarray | None = None
    vector: np.ndarray | None = None
    s: float | None = None
    inner: GeodesicClass | None = None
    space: Space | None = field(default=None, repr=False)

    def __post_init__(self):
        tm = self.base is not None and self.vector is not None
        vert = self.s is not None and self.inner is not None
        if self.kind == "nonvertical" and (not tm or vert):
            raise ValueError("nonvertical point carries exactly the TM payload")
        if self.kind == "vertical" and (not vert or tm or self.base is not None):
            raise ValueError("vertical point carries exactly the (s, class) payload")
        if self.kind not in ("nonvertical", "vertical"):
            raise ValueError(f"unknown kind {self.kind!r}")

    def to_dict(self):
        if self.kind == "nonvertical":
            return {"kind": "nonvertical", "base": np.asarray(self.base).tolist(),
                    "vector": np.asarray(self.vector).tolist()}
        return {"kind": "vertical", "s": float(self.s), "inner": self.inner.to_dict()}


# --- flows -------------------------------------------------------------------------

def flow(space: Space, p, v, t: float, tol: float = FLOW_TOL):
    """State reached after parameter ``t`` along the geodesic of ``(p, v)``."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    if t == 0.0 or not np.any(v):
        return space.reduce(p, v)
    if space.is_flat and space.gluing is None and not space.factors:
        return p + t * v, v.copy()
    if space.kind in ("sphere", "projective"):
        return _great_circle_flow(space, p, v, t)
    tr = integrate(space, GeodesicState(p, v), t, tol)
    if tr.truncated:
        raise AnchorNotFound(f"geodesic leaves the chart before t={t:.6g}")
    s = tr.final
    return s.point, s.velocity


def _great_circle_flow(space, p, v, t):
    X = stereo_to_sphere(p)
    V = stereo_tangent_to_sphere(p, v)
    V = V - (V @ X) * X
    speed = float(np.linalg.norm(V))
    c, s = math.cos(speed * t), math.sin(speed * t)
    Xt = X * c + V * (s / speed)
    Vt = V * c - X * (s * speed)
    if Xt[2] <= -1.0 + 1e-12:
        # the south pole sits at chart infinity; integrate there instead
        tr = integrate(space, GeodesicState(p, v), t, FLOW_TOL)
        return tr.final.point, tr.final.velocity
    return space.reduce(sphere_to_stereo(Xt), sphere_tangent_to_stereo(Xt, Vt))


# --- anchors -------------------------------------------------------------------------

def _nearest_int_range(center, spread=1):
    c = math.floor(center)
    return range(c - spread, c + spread + 2)


def _periodic_t(t0, period):
    """Representative of ``t0 + k * period`` with the smallest magnitude."""
    if period is None or not math.isfinite(period) or period == 0:
        return t0
    return t0 - period * round(t0 / period)


def _anchor_flat(p, u):
    t = -float(p @ u) / float(u @ u)
    return p + t * u, u.copy(), t, None


def _anchor_klein(p, u):
    d = u / np.linalg.norm(u)
    tau = -float(p @ d)
    A = p + tau * d
    s = 1.0 - float(A @ A)
    U = d * math.sqrt(s)
    t = math.copysign(klein_distance(p, A), tau)
    return A, U, t, None


def _anchor_strip(p, u):
    if abs(u[1]) > 0.0:
        t = -p[1] / u[1]
        return np.array([p[0] + t * u[0], 0.0]), u.copy(), t, None
    t = -p[0] / u[0]
    return np.array([0.0, p[1]]), u.copy(), t, None


def _anchor_cylinder(p, u, period=TWO_PI):
    ux, uy = u
    if uy == 0.0:
        t = -p[0] / ux
        return np.array([0.0, p[1] % period]), u.copy(), t, None
    if ux == 0.0:
        circ = period / abs(uy)
        t = _periodic_t(-p[1] / uy, circ)
        return np.array([p[0], 0.0]), u.copy(), t, circ
    r = ux / uy
    kstar = (p[1] - p[0] / r) / period
    best = None
    for k in _nearest_int_range(kstar):
        t = (period * k - p[1]) / uy
        x = p[0] + t * ux
        key = (abs(x), x)
        if best is None or key < best[0]:
            best = (key, x, t)
    _, x, t = best
    return np.array([x, 0.0]), u.copy(), t, None


def _anchor_torus(p, u, period=TWO_PI):
    ux, uy = u
    if uy == 0.0:
        circ = period / abs(ux)
        t = _periodic_t(-p[0] / ux, circ)
        return np.array([0.0, p[1] % period]), u.copy(), t, circ
    if ux == 0.0:
        circ = period / abs(uy)
        t = _periodic_t(-p[1] / uy, circ)
        return np.array([p[0] % period, 0.0]), u.copy(), t, circ
    r = ux / uy
    k0 = math.floor(p[1] / period)
    ks = np.arange(k0 - TORUS_WINDOW, k0 + TORUS_WINDOW + 1)
    c = p[0] - p[1] * r
    step = (period * r) % period
    xs = np.mod(c + np.mod(ks * step, period), period)
    # equal positions (closed lines) resolve to the crossing nearest p
    ts = (period * ks - p[1]) / uy
    order = np.lexsort((np.abs(ts), np.round(xs, 12)))
    i = int(order[0])
    x = float(xs[i])
    if x >= period:
        x = 0.0
    return np.array([x, 0.0]), u.copy(), float(ts[i]), None


def _anchor_mobius(p, u, period=1.0):
    if u[1] != 0.0:
        t = -p[1] / u[1]
        x = p[0] + t * u[0]
        k = math.floor(x / period)
        U = u.copy()
        if k % 2:
            U[1] = -U[1]
        xr = x - k * period
        if xr >= period:
            xr = 0.0
        return np.array([xr, 0.0]), U, t, None
    c = p[1]
    circ = (1.0 if c == 0.0 else 2.0) * period / abs(u[0])
    best = None
    for k in _nearest_int_range(p[0] / period, 2):
        y = c if k % 2 == 0 else -c
        if y < 0.0:
            continue
        t = (k * period - p[0]) / u[0]
        if best is None or abs(t) < abs(best[1]):
            best = (y, t)
    y, t = best
    return np.array([0.0, y]), u.copy(), t, circ


def _anchor_circle(p, u, period=TWO_PI):
    circ = period / abs(u[0])
    t = _periodic_t(-p[0] / u[0], circ)
    return np.array([0.0]), u.copy(), t, circ


def _circle_state(X, V, t):
    return X * math.cos(t) + V * math.sin(t), -X * math.sin(t) + V * math.cos(t)


def _anchor_round(p, u, kind):
    X = stereo_to_sphere(p)
    V = stereo_tangent_to_sphere(p, u)
    V = V - (V @ X) * X
    V /= np.linalg.norm(V)
    projective = kind in ("projective", "punctured_projective")
    punctured = kind in ("punctured_sphere", "punctured_projective")
    period = math.pi if projective else TWO_PI
    normal_z = X[0] * V[1] - X[1] * V[0]
    if punctured and abs(normal_z) < FLIP_EPS:
        # a line through the deleted point(s): anchor at its equator crossing
        t = math.atan(-X[2] / V[2]) if V[2] != 0.0 else 0.0
        period = None
    elif math.hypot(X[2], V[2]) < FLIP_EPS:
        # the equator: anchor at e1
        t = math.atan2(V[0], X[0])
    else:
        t = math.atan2(V[2], X[2])
    if projective:
        t -= math.pi * round(t / math.pi)
    A, U = _circle_state(X, V, t)
    if projective and (A[2] < -FLIP_EPS or (abs(A[2]) <= FLIP_EPS and _first_sign(A) < 0)):
        A, U = -A, -U
    return sphere_to_stereo(A), sphere_tangent_to_stereo(A, U), t, period


def _first_sign(w, eps=FLIP_EPS):
    for c in w:
        if abs(c) > eps:
            return 1.0 if c > 0 else -1.0
    return 1.0


def _anchor_product(space, p, u):
    s1, s2 = space.factors
    n1 = s1.dim
    b1, b2 = slice(0, n1), slice(n1, space.dim)
    speeds = [s1.norm(p[b1], u[b1]), s2.norm(p[b2], u[b2])]
    scale = max(speeds)
    choice = None
    cache = {}
    for i, f, b in ((0, s1, b1), (1, s2, b2)):
        if speeds[i] <= 1e-12 * scale:
            continue
        res = canonical_anchor(f, p[b], u[b] / speeds[i])
        cache[i] = res
        if res[3] is None:
            choice = i
            break
    if choice is None:
        choice = min(cache)
    A_f, U_f, t_f, per_f = cache[choice]
    t = t_f / speeds[choice]
    other, ob = (s2, b2) if choice == 0 else (s1, b1)
    cb = b1 if choice == 0 else b2
    A = np.empty(space.dim)
    U = np.empty(space.dim)
    A[cb] = A_f
    U[cb] = U_f * speeds[choice]
    A[ob], U[ob] = flow(other, p[ob], u[ob], t)
    period = None
    if per_f is not None and speeds[1 - choice] <= 1e-12 * scale:
        period = per_f / speeds[choice]
    return A, U, t, period


def canonical_anchor(space: Space, p, u):
    """Anchor ``(A, U, t, period)`` of the geodesic through ``(p, u)``.

    ``u`` must already be normalized.  ``t`` is the parameter (for that
    normalization) carrying ``(p, u)`` to ``(A, U)``; ``period`` is the
    period of the geodesic when it is known to be closed, else ``None``.
    """
    p = np.asarray(p, dtype=float)
    u = np.asarray(u, dtype=float)
    kind = space.kind
    if kind in ("euclidean", "pseudoeuclidean"):
        res = _anchor_flat(p, u)
    elif kind == "klein":
        res = _anchor_klein(p, u)
    elif kind == "strip":
        res = _anchor_strip(p, u)
    elif kind == "cylinder":
        res = _anchor_cylinder(p, u, space.params.get("period", TWO_PI))
    elif kind == "torus":
        res = _anchor_torus(p, u)
    elif kind == "mobius":
        res = _anchor_mobius(p, u, space.params.get("period", 1.0))
    elif kind == "circle":
        res = _anchor_circle(p, u, space.params.get("period", TWO_PI))
    elif kind in ("sphere", "punctured_sphere", "projective", "punctured_projective"):
        res = _anchor_round(p, u, kind)
    elif kind == "product":
        res = _anchor_product(space, p, u)
    else:
        raise AnchorNotFound(f"no anchor locus known for {space.name}")
    A, U, t, period = res
    A, U = space.reduce(A, U)
    return np.asarray(A, dtype=float), np.asarray(U, dtype=float), float(t), period


def _normalize(space: Space, p, v):
    speed = space.norm(p, v)
    if speed == 0.0 or not math.isfinite(speed):
        raise ValueError("velocity must be nonzero")
    return v / speed


def canonicalize(space, s: GeodesicState, oriented: bool = True, *, strict: bool = False,
                 return_shift: bool = False):
    """Canonical representative of the geodesic through ``s``.

    If the anchor cannot be located the input state (normalized) is returned
    with ``anchored=False``; with ``strict=True`` ``AnchorNotFound`` is raised
    instead.  ``return_shift`` also returns the unit-speed parameter from
    ``s`` to the anchor.
    """
    space = make_space(space)
    p = np.asarray(s.point, dtype=float)
    v = np.asarray(s.velocity, dtype=float)
    if not np.any(v):
        raise ValueError("canonicalize needs a nonzero velocity")
    p, v = space.reduce(p, v)
    u = _normalize(space, p, v)
    anchored = True
    try:
        A, U, t, _ = canonical_anchor(space, p, u)
    except AnchorNotFound:
        if strict:
            raise
        A, U, t, anchored = p.copy(), u, 0.0, False
    if not oriented and _first_sign(U) < 0:
        U = -U
    c = GeodesicClass(space.name, GeodesicState(A, U), bool(oriented), anchored, space)
    return (c, t) if return_shift else c


def class_distance(a: GeodesicClass, b: GeodesicClass, space: Space | None = None) -> float:
    """Discrepancy between two representatives (point separation and velocity gap)."""
    space = space or a.space or make_space(a.space_id)
    pa, va = a.rep.point, a.rep.velocity
    q, J = space.nearest(pa, b.rep.point)
    vb = b.rep.velocity if J is None else J @ b.rep.velocity
    dv = float(np.linalg.norm(va - vb))
    if not (a.oriented and b.oriented):
        dv = min(dv, float(np.linalg.norm(va + vb)))
    return max(space.separation(pa, b.rep.point), dv)


# --- the Moebius-band chart of unoriented lines in the plane ---------------------------

def chart_g_r2(c: GeodesicClass) -> MobiusChartPoint:
    """Chart point of an unoriented line in the plane.

    A nonvertical line ``y = u + v x`` goes to ``(u, v)`` compressed radially
    by ``r -> tanh r``; the vertical line ``x = a`` goes to the boundary point
    in the direction of slope ``-1/a`` (angle in ``(0, pi)``).
    """
    if c.space is not None and (c.space.kind != "euclidean" or c.space.dim != 2):
        raise UnsupportedChart("chart_g_r2 is defined for euclidean(2) only")
    A = c.rep.point
    U = c.rep.velocity
    if abs(U[0]) <= 1e-15 * abs(U[1]):
        a = float(A[0])
        return MobiusChartPoint("boundary", theta=math.atan2(1.0, -a))
    slope = U[1] / U[0]
    intercept = A[1] - slope * A[0]
    w = np.array([intercept, slope])
    r = float(np.linalg.norm(w))
    if r > 0:
        w = w * (math.tanh(r) / r)
        # saturated tanh: pull back inside the open disc, rounding included
        while float(w[0]) ** 2 + float(w[1]) ** 2 >= 1.0:
            w = w * (1.0 - 2.0**-52)
    return MobiusChartPoint("interior", coords=(float(w[0]), float(w[1])))


def mobius_chart_distance(a: MobiusChartPoint, b: MobiusChartPoint) -> float:
    """Distance in the closed disc after gluing antipodal boundary positions."""
    return min(float(np.linalg.norm(x - y)) for x in a.positions() for y in b.positions())


# --- the TS^{n-1} chart ------------------------------------------------------------

_TS_KINDS = ("euclidean", "pseudoeuclidean", "klein")


def _ts_space(space):
    space = make_space(space)
    if space.kind not in _TS_KINDS:
        raise UnsupportedChart(f"TS chart is not available on {space.name}")
    return space


def chart_ts(space, c: GeodesicClass) -> TSPoint:
    """(direction, offset): chart direction and the crossing with the orthogonal hyperplane."""
    space = _ts_space(space)
    A = c.rep.point
    d = c.rep.velocity / np.linalg.norm(c.rep.velocity)
    return TSPoint(d, A - float(A @ d) * d)


def chart_ts_inverse(space, t: TSPoint, oriented: bool = True) -> GeodesicClass:
    space = _ts_space(space)
    d = np.asarray(t.direction, dtype=float)
    nd = float(np.linalg.norm(d))
    if nd == 0.0:
        raise ValueError("direction must be nonzero")
    d = d / nd
    w = np.asarray(t.offset, dtype=float)
    w = w - float(w @ d) * d
    if space.kind == "klein" and float(w @ w) >= 1.0 - 1e-13:
        raise OutsideDisc(f"offset norm {np.linalg.norm(w):.6g} leaves the unit ball")
    return canonicalize(space, GeodesicState(w, d), oriented)


# --- the Hadamard map F -----------------------------------------------------------

def hadamard_F(space, p, X, Y, tol: float = FLOW_TOL) -> GeodesicClass:
    """Oriented geodesic through ``exp_p(Y)`` with direction the transport of ``X``."""
    space = make_space(space)
    p = np.asarray(p, dtype=float)
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if not np.any(Y):
        return canonicalize(space, GeodesicState(p, X), True)
    tr = integrate(space, GeodesicState(p, Y), 1.0, tol, transport=X[None, :])
    if tr.truncated:
        from .errors import Inextendible
        raise Inextendible("exp_p(Y) is not defined")
    return canonicalize(space, GeodesicState(tr.final.point, tr.final_transported[0]), True)


def hadamard_F_inverse(space, c: GeodesicClass, p, tol: float = FLOW_TOL):
    """``(X, Y)`` with ``hadamard_F(p, X, Y) = c``, from the foot of ``p`` on ``c``."""
    from .sky_connect import foot

    space = make_space(space)
    p = np.asarray(p, dtype=float)
    q, t_q = foot(space, p, c)
    tr_c = integrate(space, c.rep, t_q, tol) if t_q != 0.0 else None
    w = c.rep.velocity if tr_c is None else tr_c.final.velocity
    w = w / space.norm(q, w)
    if space.separation(p, q) < 1e-13:
        return w, np.zeros_like(p)
    Y = log_map(space, p, q)
    c1 = integrate(space, GeodesicState(p, Y), 1.0, tol)
    back = integrate(space, GeodesicState(q, -c1.final.velocity), 1.0, tol, transport=w[None, :])
    X = back.final_transported[0]
    return X, Y


# --- the chart TM + R x G(M) of product geodesics -------------------------------------

def _split_product(space):
    space = make_space(space)
    if not space.factors or space.factors[0].kind != "euclidean" or space.factors[0].dim != 1:
        raise UnsupportedChart("product_chart needs product(euclidean1, M)")
    return space, space.factors[1]


def product_chart(c: GeodesicClass, space=None) -> ProductClassPoint:
    space, M = _split_product(space or c.space or c.space_id)
    A = c.rep.point
    U = c.rep.velocity
    sigma = float(U[0])
    if abs(sigma) > 1e-12 * max(1.0, float(np.linalg.norm(U))):
        x0, w0 = flow(M, A[1:], U[1:], -A[0] / sigma)
        return ProductClassPoint("nonvertical", base=np.asarray(x0), vector=np.asarray(w0) / sigma,
                                 space=M)
    inner = canonicalize(M, GeodesicState(A[1:], U[1:]), c.oriented)
    return ProductClassPoint("vertical", s=float(A[0]), inner=inner, space=M)


def _image_distance_fn(M, beta: GeodesicClass, reach: float):
    """``z -> distance from z to the image of beta`` sampled over ``|t| <= reach``."""
    if M.dim == 1:
        return lambda z: 0.0
    n = int(32 * max(reach, 1.0)) + 1
    ts = np.linspace(-reach, reach, 2 * n + 1)
    tr_f = integrate(M, beta.rep, reach, 1e-11)
    tr_b = integrate(M, beta.rep, -reach, 1e-11)

    def at(t):
        tr = tr_f if t >= 0 else tr_b
        return tr.at(min(max(t, tr.t[0]), tr.t[-1])).point

    pts = [at(t) for t in ts]
    g = (math.sqrt(5) - 1) / 2

    def dist(z):
        vals = np.array([M.separation(z, q) for q in pts])
        k = int(np.argmin(vals))
        lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, len(ts) - 1)]
        for _ in range(50):
            m1 = hi - g * (hi - lo)
            m2 = lo + g * (hi - lo)
            if M.separation(z, at(m1)) < M.separation(z, at(m2)):
                hi = m2
            else:
                lo = m1
        return float(min(vals[k], M.separation(z, at(0.5 * (lo + hi)))))

    return dist


def _slide_to(M, beta, y):
    """State of ``beta`` near ``y`` (the crossing), as a starting state for sampling."""
    if M.dim == 1 or M.distance_fn is None and M.gluing is None:
        return beta.rep.point, beta.rep.velocity
    best = (M.separation(y, beta.rep.point), beta.rep.point, beta.rep.velocity)
    for t in np.linspace(-20.0, 20.0, 401):
        try:
            q, v = flow(M, beta.rep.point, beta.rep.velocity, float(t))
        except Exception:
            continue
        d = M.separation(y, q)
        if d < best[0]:
            best = (d, q, v)
    return best[1], best[2]


def converges_to_vertical(seq, target, horizon: float = 10.0, *, tol: float = 1e-4,
                          n_samples: int = 64, tail: int = 3, space=None) -> bool:
    """Sampled test that nonvertical product geodesics converge to a vertical one.

    ``seq`` holds nonvertical ``ProductClassPoint`` payloads (or raw
    ``(base, vector)`` pairs together with ``space``); ``target`` is
    ``(s, GeodesicClass of M)``.  On the last ``tail`` elements:

    (a) the unit-speed projected M-geodesics stay within ``tol`` of the target
        image at ``n_samples`` parameters over ``|t| <= horizon``;
    (b) the crossings with ``{s} x M`` lie on the target image and are Cauchy;
    (c) the geodesics turn vertical: ``1 / |vector| < tol``.

    A semi-decision procedure: True is evidence of convergence, not proof.
    """
    s_star, beta = target
    M = None
    if space is not None:
        M = _split_product(space)[1]
    elif beta.space is not None:
        M = beta.space
    items = []
    for item in seq:
        if isinstance(item, ProductClassPoint):
            if item.kind != "nonvertical":
                return False
            items.append((np.atleast_1d(np.asarray(item.base, float)),
                          np.atleast_1d(np.asarray(item.vector, float))))
            M = M or item.space
        else:
            b, w = item
            items.append((np.atleast_1d(np.asarray(b, float)), np.atleast_1d(np.asarray(w, float))))
    if M is None:
        M = make_space(beta.space_id)
    if len(items) < tail:
        return False
    crossings = []
    image_dist = None
    for base, w in items[-tail:]:
        speed = M.norm(base, w)
        if speed == 0.0 or 1.0 / speed >= tol:
            return False
        y, wy = flow(M, base, w, float(s_star))
        crossings.append(y)
        if image_dist is None:
            # the target image near the crossings, long enough to cover the samples
            reach = 2.0 * horizon + 1.0
            beta_here = canonicalize(M, GeodesicState(*_slide_to(M, beta, y)), beta.oriented)
            image_dist = _image_distance_fn(M, beta_here, reach)
        if image_dist(y) > tol:
            return False
        u = wy / M.norm(y, wy)
        for t in np.linspace(-horizon, horizon, n_samples):
            z, _ = flow(M, y, u, float(t))
            if image_dist(z) > tol:
                return False
    for i in range(len(crossings)):
        for j in range(i + 1, len(crossings)):
            if M.separation(crossings[i], crossings[j]) > tol:
                return False
    return True
