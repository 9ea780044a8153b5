"""Skies, sky-difference root finding, geodesic connection, feet, first law of cosines."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .connection import GeodesicState, Space, exp_map, integrate, log_map
from .errors import (
    Inextendible,
    MinimizationDiverged,
    NoConnectionFound,
    NoRootFound,
    UnsupportedChart,
)
from .geodesic_space import (
    GeodesicClass,
    TSPoint,
    canonicalize,
    chart_ts,
)
from .models import (
    COVERING_NAMES,
    klein_distance,
    make_covering,
    make_space,
    sphere_tangent_to_stereo,
    sphere_to_stereo,
    stereo_tangent_to_sphere,
    stereo_to_sphere,
)

ROOT_TOL = 1e-8
DEDUP_TOL = 1e-6
FD_STEP = 1e-7
EXTRA_STARTS = 8
_START_SEED = 20240917

_TS_KINDS = ("euclidean", "pseudoeuclidean", "klein")
_QUOTIENT_COVER = {
    "cylinder": "plane_over_cylinder",
    "torus": "plane_over_torus",
    "mobius": "plane_over_mobius",
    "circle": "line_over_circle",
}

__all__ = [
    "SkySection",
    "Connection",
    "sky",
    "sky_difference_roots",
    "connect",
    "foot",
    "orthogonality_residual",
    "triangle_first_law",
    "TriangleReport",
]


@dataclass(frozen=True, eq=False)
class SkySection:
    base_point: np.ndarray
    space_id: str
    evaluate: Callable[[np.ndarray], TSPoint] = field(repr=False)
    offset: Callable[[np.ndarray], np.ndarray] = field(repr=False)


@dataclass(frozen=True, eq=False)
class Connection:
    cls: GeodesicClass
    t_x: float
    t_z: float
    start_velocity: np.ndarray
    residual: float

    @property
    def length(self) -> float:
        return self.t_z - self.t_x

    def to_dict(self):
        return {
            "class": self.cls.to_dict(),
            "t_x": float(self.t_x),
            "t_z": float(self.t_z),
            "start_velocity": np.asarray(self.start_velocity).tolist(),
            "endpoint_residual": float(self.residual),
        }


def _ts_space(space):
    space = make_space(space)
    if space.kind not in _TS_KINDS:
        raise UnsupportedChart(f"skies are charted only on flat and Klein spaces, not {space.name}")
    return space


def sky(space, x) -> SkySection:
    """The section ``d -> chart_ts(class of the geodesic through x with direction d)``."""
    space = _ts_space(space)
    x = np.asarray(x, dtype=float)
    if not space.in_chart(x):
        from .errors import OutOfChart
        raise OutOfChart(f"{x.tolist()} outside chart of {space.name}")

    def evaluate(d):
        d = np.asarray(d, dtype=float)
        return chart_ts(space, canonicalize(space, GeodesicState(x, d), True))

    def offset(d):
        # closed form of evaluate(d).offset: for straight-chord models the
        # canonical point is the foot of the chart origin on the chord
        d = np.asarray(d, dtype=float)
        return x - float(x @ d) * d

    return SkySection(x.copy(), space.name, evaluate, offset)


def _tangent_basis(d):
    """Orthonormal basis (columns) of the tangent plane of the sphere at ``d``."""
    return np.linalg.svd(d[None, :])[2][1:].T


def _start_directions(n, n_starts=None):
    """``+-e_i`` followed by fixed pseudo-random directions (2n + 8 by default)."""
    total = 2 * n + EXTRA_STARTS if n_starts is None else max(int(n_starts), 1)
    eye = np.eye(n)
    starts = [s * eye[i] for i in range(n) for s in (1.0, -1.0)]
    rng = np.random.default_rng(_START_SEED + n)
    while len(starts) < total:
        w = rng.normal(size=n)
        starts.append(w / np.linalg.norm(w))
    return starts[:total]


def _newton_sphere(F, d, max_iter=60):
    n = d.size
    r = F(d)
    nr = float(np.linalg.norm(r))
    lam = 1e-12
    polish = 0
    for _ in range(max_iter):
        if nr < ROOT_TOL:
            polish += 1
            if polish > 3 or nr < 1e-15:
                break
        B = _tangent_basis(d)
        J = np.empty((r.size, n - 1))
        for j in range(n - 1):
            dj = d + FD_STEP * B[:, j]
            J[:, j] = (F(dj / np.linalg.norm(dj)) - r) / FD_STEP
        JtJ = J.T @ J
        g = J.T @ r
        improved = False
        for _ in range(30):
            try:
                step = np.linalg.solve(JtJ + lam * np.eye(n - 1), -g)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(J, -r, rcond=None)[0]
            alpha = 1.0
            while alpha > 1e-4:
                dn = d + alpha * (B @ step)
                dn /= np.linalg.norm(dn)
                rn = F(dn)
                nrn = float(np.linalg.norm(rn))
                if nrn < nr:
                    d, r, nr = dn, rn, nrn
                    improved = True
                    break
                alpha *= 0.5
            if improved:
                lam = max(lam * 0.1, 1e-15)
                break
            lam = max(lam * 100.0, 1e-8)
        if not improved:
            break
    return d, nr


def sky_difference_roots(space, x, z, n_starts: int | None = None) -> list[np.ndarray]:
    """Unit directions where the skies of ``x`` and ``z`` meet.

    Solves ``offset_x(d) = offset_z(d)`` on the unit sphere by damped
    Gauss-Newton in tangent-plane coordinates from ``2n + 8`` deterministic
    starts (``n_starts`` overrides the count).  Roots closer than 1e-6 are
    merged.  Raises ``NoRootFound`` if no start converges.
    """
    space = _ts_space(space)
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    hx = sky(space, x)
    hz = sky(space, z)

    def F(d):
        return hx.offset(d) - hz.offset(d)

    n = space.dim
    roots: list[np.ndarray] = []
    if n == 1:
        cands = [np.array([1.0]), np.array([-1.0])]
        roots = [d for d in cands if np.linalg.norm(F(d)) < ROOT_TOL]
    else:
        for d0 in _start_directions(n, n_starts):
            d, nr = _newton_sphere(F, d0)
            if nr < ROOT_TOL and not any(np.linalg.norm(d - r) < DEDUP_TOL for r in roots):
                roots.append(d)
    if not roots:
        raise NoRootFound(f"no sky intersection found from {n_starts or 2 * n + EXTRA_STARTS} starts")
    roots.sort(key=lambda d: tuple(-d))
    return roots


# --- connections --------------------------------------------------------------------

def _finish(space, x, z, w, tol=1e-10):
    """Connection record for the geodesic ``t -> exp_x(t w)``, ``t in [0, 1]``."""
    L = space.norm(x, w)
    u = w / L
    cls, shift = canonicalize(space, GeodesicState(x, u), True, return_shift=True)
    t_x = -shift
    t_z = t_x + L
    try:
        end = exp_map(space, x, L * u, tol)
        residual = space.separation(end, z)
    except Inextendible:
        residual = math.inf
    return Connection(cls, t_x, t_z, np.asarray(w, dtype=float), float(residual))


def _lengths_ts(space, x, z):
    if space.kind == "klein":
        return klein_distance(x, z)
    return float(np.linalg.norm(z - x))


def _connect_ts(space, x, z):
    out = []
    for d in sky_difference_roots(space, x, z):
        if float((z - x) @ d) <= 0.0:
            continue  # the same line with the opposite orientation
        L = _lengths_ts(space, x, z)
        u = d / space.norm(x, d)
        out.append(_finish(space, x, z, L * u))
    return out


def _connect_quotient(space, x, z, windings):
    cov = make_covering(_QUOTIENT_COVER[space.kind])
    up = cov.upstairs
    xt = cov.lift(x, 0)
    out = []
    for k in cov.sheets(windings):
        zt = cov.lift(z, k)
        w_up = zt - xt
        if float(np.linalg.norm(w_up)) < 1e-14:
            continue
        if not all(up.in_chart(xt + s * w_up) for s in np.linspace(0, 1, 3)):
            continue
        p, w = cov.project_tangent(xt, w_up)
        out.append(_finish(space, np.asarray(p), z, np.asarray(w)))
    return out


def _arc_blocked(X, V, L, poles):
    """Does the arc ``t -> X cos t + V sin t``, ``0 < t < L`` meet one of ``poles``?"""
    for P in poles:
        if abs(float(P @ np.cross(X, V))) > 1e-12:
            continue
        s = math.atan2(float(P @ V), float(P @ X)) % (2 * math.pi)
        while s < L - 1e-12:
            if s > 1e-12:
                return True
            s += 2 * math.pi
    return False


def _connect_round(space, x, z, windings):
    X = stereo_to_sphere(x)
    kind = space.kind
    projective = kind in ("projective", "punctured_projective")
    poles = []
    if kind in ("punctured_sphere", "punctured_projective"):
        poles = [np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.0, -1.0])]
    Z = stereo_to_sphere(z)
    if projective and float(X @ Z) < 0.0:
        Z = -Z
    c = float(np.clip(X @ Z, -1.0, 1.0))
    W = Z - c * X
    nw = float(np.linalg.norm(W))
    if nw < 1e-12:
        raise NoConnectionFound("points are equal or antipodal: the connecting great circle is not unique")
    V = W / nw
    theta = math.atan2(nw, c)
    lap = math.pi if projective else 2 * math.pi
    arcs = []
    for k in range(windings + 1):
        arcs.append((V, theta + lap * k))
        arcs.append((-V, lap - theta + lap * k))
    out = []
    for Vd, L in arcs:
        if _arc_blocked(X, Vd, L, poles):
            continue
        w = sphere_tangent_to_stereo(X, Vd) * L
        out.append(_finish(space, x, z, w))
    return out


def _connect_product(space, x, z, windings):
    s1, s2 = space.factors
    n1 = s1.dim
    parts = []
    for f, b in ((s1, slice(0, n1)), (s2, slice(n1, space.dim))):
        if f.separation(x[b], z[b]) < 1e-14:
            parts.append([np.zeros(f.dim)])
        else:
            parts.append([c.start_velocity for c in connect(f, x[b], z[b], windings=windings)])
    out = []
    for w1 in parts[0]:
        for w2 in parts[1]:
            out.append(_finish(space, x, z, np.concatenate((w1, w2))))
    return out


def connect(space, x, z, windings: int = 2) -> list[Connection]:
    """Geodesic segments from ``x`` to ``z``.

    Hadamard/flat chart models go through sky-difference roots (one
    oriented class per unoriented line); quotients of the plane enumerate
    lifts of ``z`` within ``windings`` deck steps; round models enumerate
    great-circle arcs with up to ``windings`` extra laps, dropping arcs that
    cross a deleted point.  Raises ``NoConnectionFound`` when nothing is found.
    """
    space = make_space(space)
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if not space.in_chart(x) or not space.in_chart(z):
        from .errors import OutOfChart
        raise OutOfChart("connect endpoints must lie in the chart")
    x_in = x
    x, z = space.reduce(x), space.reduce(z)
    if space.separation(x, z) < 1e-14:
        raise NoConnectionFound("endpoints coincide")
    kind = space.kind
    if kind in _TS_KINDS:
        out = _connect_ts(space, x, z)
    elif kind in _QUOTIENT_COVER:
        out = _connect_quotient(space, x, z, windings)
    elif kind in ("sphere", "punctured_sphere", "projective", "punctured_projective"):
        out = _connect_round(space, x, z, windings)
    elif kind == "strip":
        out = [_finish(space, x, z, z - x)]
    elif kind == "product":
        out = _connect_product(space, x, z, windings)
    elif space.is_hadamard or space.is_pseudohadamard:
        out = [_finish(space, x, z, log_map(space, x, z))]
    else:
        raise NoConnectionFound(f"no connection strategy for {space.name}")
    if not out:
        raise NoConnectionFound(f"no geodesic from {x.tolist()} to {z.tolist()} in {space.name}")
    if not np.array_equal(x, x_in):
        # report start velocities at the caller's copy of x
        _, J = space.nearest(x_in, x)
        if J is not None:
            out = [Connection(c.cls, c.t_x, c.t_z, J @ c.start_velocity, c.residual) for c in out]
    return out


# --- feet ------------------------------------------------------------------------------

def _dist(space, p, q):
    if space.distance_fn is not None:
        return space.distance(p, q)
    return space.norm(p, log_map(space, p, q))


def foot(space, p, c: GeodesicClass, tol: float = 1e-12):
    """Closest point ``q = c(t_q)`` of the geodesic ``c`` to ``p``.

    Golden-section search over the bracket ``|t| <= 2 d(p, c(0))`` (valid by
    the triangle inequality for unit speed), then Newton polish on the
    derivative of the squared distance.  Returns ``(q, t_q)``.
    """
    space = make_space(space)
    if not space.has_metric:
        raise UnsupportedChart("foot needs a metric")
    p = np.asarray(p, dtype=float)
    rep = c.rep
    d0 = _dist(space, p, rep.point)
    if d0 < 1e-14:
        return rep.point.copy(), 0.0
    T = 2.0 * d0
    fw = integrate(space, rep, T, tol)
    bw = integrate(space, rep, -T, tol)
    lo_t, hi_t = bw.t_end, fw.t_end

    def point(t):
        tr = fw if t >= 0 else bw
        return tr.at(t).point

    def D(t):
        return _dist(space, p, point(t))

    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo_t, hi_t
    grid = np.linspace(a, b, 33)
    vals = [D(t) for t in grid]
    k = int(np.argmin(vals))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, 32)]
    m1, m2 = b - g * (b - a), a + g * (b - a)
    f1, f2 = D(m1), D(m2)
    while b - a > 1e-9:
        if f1 < f2:
            b, m2, f2 = m2, m1, f1
            m1 = b - g * (b - a)
            f1 = D(m1)
        else:
            a, m1, f1 = m1, m2, f2
            m2 = a + g * (b - a)
            f2 = D(m2)
    t = 0.5 * (a + b)
    h = 1e-4
    for _ in range(8):
        tl, tr_ = max(t - h, lo_t), min(t + h, hi_t)
        if tr_ - tl < 1.5 * h:
            break
        fm, f0, fp = D(t - h) ** 2, D(t) ** 2, D(t + h) ** 2
        d1 = (fp - fm) / (2 * h)
        d2 = (fp - 2 * f0 + fm) / (h * h)
        if d2 <= 0:
            break
        dt = -d1 / d2
        if abs(dt) > h:
            dt = math.copysign(h, dt)
        t += dt
        if abs(dt) < 1e-13:
            break
    if t - lo_t < 1e-6 and not bw.truncated or hi_t - t < 1e-6 and not fw.truncated:
        raise MinimizationDiverged("distance minimum sits on the search bracket boundary")
    if (t - lo_t < 1e-6 and bw.truncated) or (hi_t - t < 1e-6 and fw.truncated):
        raise MinimizationDiverged("geodesic leaves the chart before the minimum is bracketed")
    return point(t), float(t)


def orthogonality_residual(space, p, c: GeodesicClass, t_q: float, tol: float = 1e-12) -> float:
    """Cosine of the angle at the foot between ``c`` and the geodesic back to ``p``."""
    space = make_space(space)
    st = c.rep if t_q == 0.0 else integrate(space, c.rep, t_q, tol).final
    q = st.point
    w = log_map(space, q, np.asarray(p, dtype=float))
    nw = space.norm(q, w)
    if nw < 1e-12:
        return 0.0
    return abs(space.inner(q, st.velocity, w)) / (space.norm(q, st.velocity) * nw)


# --- first law of cosines ----------------------------------------------------------------

@dataclass(frozen=True)
class TriangleReport:
    a1: float
    a2: float
    a3: float
    alpha3: float
    slack: float

    def to_dict(self):
        return {k: float(getattr(self, k)) for k in ("a1", "a2", "a3", "alpha3", "slack")}


def _side(space, x, y):
    conns = connect(space, x, y)
    conn = min(conns, key=lambda c: c.length)
    L = space.distance(x, y) if space.distance_fn is not None else conn.length
    u = conn.start_velocity / space.norm(x, conn.start_velocity)
    return L, u


def triangle_first_law(space, x, y, z) -> TriangleReport:
    """Sides ``a1 = d(x,y)``, ``a2 = d(x,z)``, ``a3 = d(y,z)`` and the angle at ``x``."""
    space = make_space(space)
    if not space.has_metric:
        raise UnsupportedChart("the law of cosines needs a metric")
    x, y, z = (np.asarray(v, dtype=float) for v in (x, y, z))
    a1, u1 = _side(space, x, y)
    a2, u2 = _side(space, x, z)
    a3 = space.distance(y, z) if space.distance_fn is not None else _side(space, y, z)[0]
    cos_a = float(np.clip(space.inner(x, u1, u2), -1.0, 1.0))
    slack = a3 * a3 - (a1 * a1 + a2 * a2 - 2.0 * a1 * a2 * cos_a)
    return TriangleReport(a1, a2, a3, math.acos(cos_a), slack)
