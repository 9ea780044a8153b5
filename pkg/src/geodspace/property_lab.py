"""Sampling testers and re-checkable counterexample witnesses.

Every tester here is a semi-decision procedure: a returned witness is a
certificate (re-runnable through :func:`recheck`), while the absence of a
witness is only evidence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .connection import GeodesicState, Space, integrate, log_map
from .errors import NoConnectionFound, NotClosed
from .geodesic_space import GeodesicClass, canonicalize, class_distance
from .models import (
    CoveringMap,
    make_covering,
    make_space,
    product,
    sphere_tangent_to_stereo,
    sphere_to_stereo,
    stereo_to_sphere,
)
from .sky_connect import connect

SEMI_DECISION_NOTE = ("sampling-based semi-decision procedure: a witness certifies the "
                      "property violation/occurrence, absence of a witness is only evidence")
ANGLE_TOL = 1e-6
PERIODIC_TOL = 1e-6

__all__ = [
    "Witness",
    "HullReport",
    "SEMI_DECISION_NOTE",
    "detect_closed",
    "returning_test",
    "product_regularity_witness",
    "hull_estimate",
    "puncture_escape_witness",
    "covering_push",
    "lift_geodesic",
    "covering_square_residual",
    "non_hausdorff_witness",
    "recheck",
]


@dataclass(frozen=True, eq=False)
class Witness:
    kind: str
    payload: dict
    recheck: dict = field(default_factory=dict)

    def to_dict(self):
        return {"kind": self.kind, "payload": _jsonable(self.payload),
                "recheck": _jsonable(self.recheck), "note": SEMI_DECISION_NOTE}


@dataclass(frozen=True)
class HullReport:
    hull_radius: float
    diameter: float
    n_segments: int
    min_puncture_distance: float | None = None

    def to_dict(self):
        return {"hull_radius": self.hull_radius, "diameter": self.diameter,
                "n_segments": self.n_segments, "min_puncture_distance": self.min_puncture_distance,
                "note": SEMI_DECISION_NOTE}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, (GeodesicState, GeodesicClass)):
        return obj.to_dict()
    return obj


def _state_of(space, c):
    if isinstance(c, GeodesicClass):
        return c.rep
    if isinstance(c, GeodesicState):
        return c
    p, v = c
    return GeodesicState(p, v)


# --- closed geodesics -------------------------------------------------------------

def _golden_min(f, a, b, iters=80):
    g = (math.sqrt(5.0) - 1.0) / 2.0
    m1, m2 = b - g * (b - a), a + g * (b - a)
    f1, f2 = f(m1), f(m2)
    for _ in range(iters):
        if b - a < 1e-13 * max(1.0, abs(a)):
            break
        if f1 < f2:
            b, m2, f2 = m2, m1, f1
            m1 = b - g * (b - a)
            f1 = f(m1)
        else:
            a, m1, f1 = m1, m2, f2
            m2 = a + g * (b - a)
            f2 = f(m2)
    return (m1, f1) if f1 < f2 else (m2, f2)


def detect_closed(space, c, t_max: float, tol: float = 1e-6, *, int_tol: float = 1e-11,
                  max_step: float = 0.05):
    """Return a closed-geodesic witness if ``gamma(t)`` comes back to ``gamma(0)``.

    Local minima of the separation from ``gamma(0)`` are refined on the dense
    output; a return within ``tol`` whose velocity is parallel to the initial
    velocity (angle < 1e-6) is *closed*; if moreover the proportionality
    constant is 1 (within 1e-6) it is *periodic*.
    """
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    space = make_space(space)
    s0 = _state_of(space, c)
    p0, v0 = s0.point, s0.velocity
    tr = integrate(space, s0, t_max, int_tol, max_step=max_step)
    sep = np.array([space.separation(p0, q) for q in tr.points])
    left = np.nonzero(sep > 10.0 * tol)[0]
    if left.size == 0:
        return None
    start = int(left[0])

    def dist(t):
        return space.separation(p0, tr.at(t).point)

    for i in range(max(start, 1), len(sep)):
        last = i == len(sep) - 1
        if not (sep[i] <= sep[i - 1] and (last or sep[i] <= sep[i + 1])):
            continue
        if sep[i] > 100.0 * max(tol, max_step):
            continue
        lo = tr.t[i - 1]
        hi = tr.t[i] if last else tr.t[i + 1]
        t_star, d = _golden_min(dist, lo, hi)
        if d > tol:
            continue
        st = tr.at(t_star)
        q, J = space.nearest(p0, st.point)
        vt = st.velocity if J is None else J @ st.velocity
        cst = float(vt @ v0) / float(v0 @ v0)
        resid = float(np.linalg.norm(vt - cst * v0)) / float(np.linalg.norm(vt))
        angle = math.asin(min(resid, 1.0))
        if angle >= ANGLE_TOL or cst == 0.0:
            continue
        periodic = abs(cst - 1.0) < PERIODIC_TOL
        payload = {
            "space": space.name,
            "start": s0,
            "t": float(t_star),
            "c": cst,
            "closed": True,
            "periodic": periodic,
            "distance": d,
            "angle": angle,
            "tol": tol,
        }
        return Witness("closed_geodesic", payload,
                       {"op": "detect_closed", "space": space.name, "start": s0.to_dict(),
                        "t_max": t_max, "tol": tol, "expect_t": float(t_star)})
    return None


# --- returning geodesics -------------------------------------------------------------

def _refine_crossing(f, a, b, fa, xtol=1e-10):
    while b - a > xtol:
        m = 0.5 * (a + b)
        fm = f(m)
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def _ball_events(space, tr, p, radius):
    """Parameters where the trajectory crosses the ball boundary, with direction."""
    def f(t):
        return space.separation(p, tr.at(t).point) - radius

    vals = np.array([space.separation(p, q) - radius for q in tr.points])
    events = []
    for i in range(len(vals) - 1):
        a, b = tr.t[i], tr.t[i + 1]
        fa, fb = vals[i], vals[i + 1]
        if (fa > 0) != (fb > 0):
            events.append(("exit" if fb > 0 else "enter", _refine_crossing(f, a, b, fa)))
        elif fa > 0 and fb > 0 and min(fa, fb) < 2.0 * float(np.linalg.norm(tr.points[i + 1] - tr.points[i])):
            # possible thin re-entry between samples: check the dense minimum
            tm, fm = _golden_min(f, a, b, 40)
            if fm < 0:
                t1 = _refine_crossing(f, a, tm, fa)
                t2 = _refine_crossing(f, tm, b, fm)
                events.append(("enter", t1))
                events.append(("exit", t2))
    return events


def _retraces(space, fw, bw, t_enter, t_first_exit, t_back_exit, tol=1e-6):
    """Does the re-entry state lie on the first passage (up to direction)?"""
    st = fw.at(t_enter)

    def state(t):
        return fw.at(t) if t >= 0 else bw.at(t)

    def d(t):
        return space.separation(st.point, state(t).point)

    grid = np.linspace(t_back_exit, t_first_exit, 129)
    vals = [d(t) for t in grid]
    k = int(np.argmin(vals))
    t0, dist = _golden_min(d, grid[max(k - 1, 0)], grid[min(k + 1, 128)], 100)
    if vals[k] < dist:
        t0, dist = grid[k], vals[k]
    if dist > tol:
        return False, dist
    s0 = state(t0)
    q, J = space.nearest(st.point, s0.point)
    w = s0.velocity if J is None else J @ s0.velocity
    c = float(st.velocity @ w) / float(w @ w)
    resid = float(np.linalg.norm(st.velocity - c * w))
    return resid / float(np.linalg.norm(st.velocity)) < 1e-5, dist


def returning_test(space, p, radius: float, n_samples: int, t_max: float, *, seed=0,
                   int_tol: float = 1e-10):
    """Sample geodesics through a ball; return a witness for the first that comes back.

    Starts are drawn uniformly in the inner half of the ball with uniformly
    random unit directions.  The witness records every boundary event
    (refined by bisection to 1e-10 in ``t``) and whether the re-entry
    retraces the first pass.
    """
    space = make_space(space)
    p = np.asarray(p, dtype=float)
    rng = np.random.default_rng(seed)
    n = space.dim
    for i in range(n_samples):
        w = rng.normal(size=n)
        w *= 0.5 * radius * rng.uniform() ** (1.0 / n) / np.linalg.norm(w)
        x = p + w
        if not space.in_chart(x):
            continue
        v = rng.normal(size=n)
        v /= space.norm(x, v)
        tr = integrate(space, GeodesicState(x, v), t_max, int_tol, max_step=radius / 4.0)
        events = _ball_events(space, tr, p, radius)
        seen_exit = None
        for kind, t in events:
            if kind == "exit" and seen_exit is None:
                seen_exit = t
            elif kind == "enter" and seen_exit is not None:
                # the first passage also extends backwards from the start
                bw = integrate(space, GeodesicState(x, v), -t_max, int_tol, max_step=radius / 4.0)
                back = [tt for k2, tt in _ball_events(space, bw, p, radius) if k2 == "enter"]
                t_back = back[-1] if back else bw.t[0]
                retrace, gap = _retraces(space, tr, bw, t, seen_exit, t_back)
                payload = {
                    "space": space.name,
                    "center": p,
                    "radius": radius,
                    "sample_index": i,
                    "start": GeodesicState(x, v),
                    "events": [{"kind": k, "t": float(tt)} for k, tt in events],
                    "t_exit": float(seen_exit),
                    "t_reenter": float(t),
                    "retrace": bool(retrace),
                    "retrace_gap": float(gap),
                }
                return Witness("returning_geodesic", payload,
                               {"op": "returning_single", "space": space.name,
                                "center": p.tolist(), "radius": radius,
                                "start": GeodesicState(x, v).to_dict(), "t_max": t_max,
                                "expect_t_reenter": float(t)})
    return None


def _returning_single(space, center, radius, start, t_max):
    tr = integrate(space, start, t_max, 1e-10, max_step=radius / 4.0)
    ev = _ball_events(space, tr, np.asarray(center, float), radius)
    exit_seen = False
    for kind, t in ev:
        if kind == "exit":
            exit_seen = True
        elif exit_seen:
            return t
    return None


# --- regularity failure in products ----------------------------------------------------

def _default_closed(space):
    kind = space.kind
    if kind == "cylinder":
        return GeodesicState([0.0, 0.0], [0.0, 1.0])
    if kind in ("sphere", "projective"):
        return GeodesicState([1.0, 0.0], [0.0, 1.0])
    if kind == "torus":
        return GeodesicState([0.0, 0.0], [1.0, 0.0])
    if kind == "circle":
        return GeodesicState([0.0], [1.0])
    raise NotClosed(f"no default closed geodesic on {space.name}")


def _line_angle(g, a, b):
    """Angle between the lines spanned by ``a`` and ``b`` in the inner product ``g``."""
    aa = float(a @ g @ a)
    bb = float(b @ g @ b)
    ab = float(a @ g @ b)
    s2 = max(aa * bb - ab * ab, 0.0)
    return math.atan2(math.sqrt(s2), abs(ab))


def product_regularity_witness(space1, space2, beta, eps_seq, *, gamma=None,
                               neighborhood: float = 0.5, t_search: float | None = None) -> Witness:
    """Witness that ``space1 x space2`` is not geodesically regular.

    With ``gamma`` closed in ``space1`` (return parameter ``a``), the product
    geodesics ``lambda_eps(t) = (gamma(t), beta(eps t))`` have tangent lines at
    ``t = a`` approaching the line of ``(gamma'(0), 0)`` at ``t = 0`` as
    ``eps -> 0``, while each leaves the ``neighborhood`` of the start in
    between.  Recorded per ``eps``: the angle between those lines, the base
    offset ``|beta(eps a) - beta(0)|`` and the maximal excursion.
    """
    s1 = make_space(space1)
    s2 = make_space(space2)
    g0 = _state_of(s1, gamma) if gamma is not None else _default_closed(s1)
    g0 = GeodesicState(g0.point, g0.velocity / s1.norm(g0.point, g0.velocity))
    w = detect_closed(s1, g0, t_search or 8.0 * math.pi)
    if w is None:
        raise NotClosed(f"the factor geodesic is not closed in {s1.name}")
    a = w.payload["t"]
    b0 = _state_of(s2, beta)
    P = product(s1, s2)
    n1 = s1.dim
    ref = np.concatenate((g0.velocity, np.zeros(s2.dim)))
    rows = []
    for eps in eps_seq:
        eps = float(eps)
        x0 = np.concatenate((g0.point, b0.point))
        v0 = np.concatenate((g0.velocity, eps * b0.velocity))
        tr = integrate(P, GeodesicState(x0, v0), a, 1e-11, max_step=0.05)
        end = tr.final
        q, J = P.nearest(x0, end.point)
        ve = end.velocity if J is None else J @ end.velocity
        g = P.metric(x0) if P.has_metric else np.eye(P.dim)
        angle = _line_angle(g, ve, ref)
        exc = max(P.separation(x0, pt) for pt in tr.points)
        rows.append({
            "eps": eps,
            "tangent_line_distance": angle,
            "base_offset": float(s2.separation(b0.point, end.point[n1:])),
            "max_excursion": float(exc),
            "leaves_neighborhood": bool(exc > neighborhood),
        })
    dists = [r["tangent_line_distance"] for r in rows]
    monotone = all(d2 < d1 for d1, d2 in zip(dists, dists[1:]))
    payload = {
        "space1": s1.name,
        "space2": s2.name,
        "gamma": g0,
        "beta": b0,
        "a": a,
        "c": w.payload["c"],
        "neighborhood": neighborhood,
        "rows": rows,
        "monotone_decreasing": monotone,
        "final_distance": dists[-1] if dists else None,
    }
    return Witness("regularity_violation", payload,
                   {"op": "product_regularity", "space1": s1.name, "space2": s2.name,
                    "gamma": g0.to_dict(), "beta": b0.to_dict(),
                    "eps_seq": [float(e) for e in eps_seq],
                    "expect_distances": dists})


# --- hulls ---------------------------------------------------------------------------------

def _segment_points(space, x, w, n=33, tol=1e-10):
    tr = integrate(space, GeodesicState(x, w), 1.0, tol)
    if tr.truncated:
        raise NoConnectionFound("segment leaves the chart")
    return [tr.at(t).point for t in np.linspace(0.0, 1.0, n)], tr


def _dist(space, p, q):
    return space.distance(p, q) if space.distance_fn is not None else space.separation(p, q)


def _puncture_distance(space, tr):
    """Smallest chart distance from the segment to a deleted point (dense refinement)."""
    pts = space._puncture_blocks(space.atlas.primary)
    if not pts:
        return None
    best = math.inf
    for sl, q in pts:
        def f(t):
            return float(np.linalg.norm(tr.at(t).point[sl] - q))
        grid = np.linspace(tr.t[0], tr.t[-1], 257)
        vals = [f(t) for t in grid]
        k = int(np.argmin(vals))
        _, d = _golden_min(f, grid[max(k - 1, 0)], grid[min(k + 1, 256)], 100)
        best = min(best, d, vals[k])
    return best


def hull_estimate(space, K, t_cap: float, bound: float, *, windings: int = 0,
                  puncture_tol: float = 1e-3, n_points: int = 33):
    """Size of the geodesic hull of ``K`` or a ``hull_escape`` witness.

    Hadamard spaces: the hull is the union of the cones ``exp_x(C_x)`` with
    ``C_x`` the closed cone on ``log_x(K)``, i.e. all segments from ``x`` to
    ``K`` traced through ``log_map``.  Elsewhere every connection between
    points of ``K`` with length at most ``t_cap`` (``windings`` extra laps)
    is traced.  ``hull_radius`` is the largest distance of a traced point
    from ``K``; a witness is returned when it exceeds ``bound`` or a segment
    comes within ``puncture_tol`` of a deleted point.
    """
    space = make_space(space)
    K = [np.asarray(k, dtype=float) for k in K]
    if not K:
        raise ValueError("K must be nonempty")
    segs = []
    if space.is_hadamard:
        for i, x in enumerate(K):
            for j, y in enumerate(K):
                if i != j:
                    segs.append((i, j, x, log_map(space, x, y)))
    else:
        for i, x in enumerate(K):
            for j in range(i + 1, len(K)):
                try:
                    conns = connect(space, x, K[j], windings=windings)
                except NoConnectionFound:
                    continue
                for c in conns:
                    if c.length <= t_cap:
                        segs.append((i, j, x, c.start_velocity))
    hull_pts = [k for k in K]
    min_punct = None
    worst = None
    for i, j, x, w in segs:
        pts, tr = _segment_points(space, x, w, n_points)
        hull_pts.extend(pts)
        d = _puncture_distance(space, tr)
        if d is not None and (min_punct is None or d < min_punct):
            min_punct = d
            worst = (i, j, w)
    reach = max(min(_dist(space, h, k) for k in K) for h in hull_pts)
    diam = max(_dist(space, a, b) for a in hull_pts for b in hull_pts)
    escaped = reach > bound or (min_punct is not None and min_punct < puncture_tol)
    if escaped:
        payload = {
            "space": space.name,
            "K": K,
            "hull_radius": reach,
            "bound": bound,
            "min_puncture_distance": min_punct,
            "worst_segment": None if worst is None else
            {"from": K[worst[0]], "to": K[worst[1]], "start_velocity": worst[2]},
            "n_segments": len(segs),
        }
        return Witness("hull_escape", payload,
                       {"op": "hull_estimate", "space": space.name,
                        "K": [k.tolist() for k in K], "t_cap": t_cap, "bound": bound,
                        "windings": windings, "puncture_tol": puncture_tol})
    return HullReport(float(reach), float(diam), len(segs), min_punct)


def _rotate(z, phi):
    c, s = math.cos(phi), math.sin(phi)
    return np.array([c * z[0] - s * z[1], s * z[0] + c * z[1]])


def _approach_through_top(x, z):
    """Chart distance from the origin to the great circle through ``x`` and ``z``."""
    n = np.cross(stereo_to_sphere(x), stereo_to_sphere(z))
    n /= np.linalg.norm(n)
    psi = math.asin(min(abs(n[2]), 1.0))
    return math.tan(psi / 2.0)


def puncture_escape_witness(x=(0.5, 0.0), z_star=(-0.5, 0.0), delta0: float = 1e-3,
                            delta_min: float = 1e-6, space="punctured_projective_plane") -> Witness:
    """Segments between fixed compact data that approach the deleted point.

    ``K = {x, z_star} + {z_delta}`` where ``z_delta`` is ``z_star`` rotated
    about the chart origin so that the great circle through ``x`` and
    ``z_delta`` passes at chart distance ``delta`` from the puncture.  For
    ``delta = delta0, delta0/2, ...`` down to ``delta_min`` the actual
    connecting segments are traced and their closest approach measured.
    """
    space = make_space(space)
    x = np.asarray(x, dtype=float)
    z_star = np.asarray(z_star, dtype=float)
    rows = []
    delta = delta0
    K = [x, z_star]
    while delta >= delta_min * (1 - 1e-12):
        phi = brentq(lambda f: _approach_through_top(x, _rotate(z_star, f)) - delta, 1e-14, 0.5,
                     xtol=1e-15, rtol=1e-14)
        z = _rotate(z_star, phi)
        try:
            rep = hull_estimate(space, [x, z], t_cap=math.pi, bound=math.inf, puncture_tol=math.inf)
        except NoConnectionFound:
            break
        measured = rep.payload["min_puncture_distance"] if isinstance(rep, Witness) else rep.min_puncture_distance
        rows.append({"delta": delta, "rotation": phi, "z": z, "measured_distance": measured})
        K.append(z)
        delta *= 0.5
    payload = {
        "space": space.name,
        "x": x,
        "z_star": z_star,
        "K": K,
        "rows": rows,
        "min_puncture_distance": min(r["measured_distance"] for r in rows) if rows else None,
    }
    return Witness("hull_escape", payload,
                   {"op": "puncture_escape", "x": x.tolist(), "z_star": z_star.tolist(),
                    "deltas": [r["delta"] for r in rows],
                    "expect": [r["measured_distance"] for r in rows]})


# --- coverings ---------------------------------------------------------------------------

def covering_push(cov: CoveringMap, c: GeodesicClass) -> GeodesicClass:
    """Downstairs class of the projected geodesic."""
    if isinstance(cov, str):
        cov = make_covering(cov)
    p, v = cov.project_tangent(c.rep.point, c.rep.velocity)
    return canonicalize(cov.downstairs, GeodesicState(p, v), c.oriented)


def lift_geodesic(cov: CoveringMap, c: GeodesicClass, sheet) -> GeodesicClass:
    """Upstairs class of the lift of ``c`` through its representative on ``sheet``."""
    if isinstance(cov, str):
        cov = make_covering(cov)
    p = cov.lift(c.rep.point, sheet)
    v = cov.lift_tangent(c.rep.point, c.rep.velocity, sheet)
    return canonicalize(cov.upstairs, GeodesicState(p, v), c.oriented)


def covering_square_residual(cov: CoveringMap, s: GeodesicState, oriented: bool = True) -> float:
    """Mismatch between ``canonicalize(project(s))`` and ``push(canonicalize(s))``."""
    if isinstance(cov, str):
        cov = make_covering(cov)
    p, v = cov.project_tangent(s.point, s.velocity)
    down = canonicalize(cov.downstairs, GeodesicState(p, v), oriented)
    pushed = covering_push(cov, canonicalize(cov.upstairs, s, oriented))
    return class_distance(down, pushed, cov.downstairs)


def _great_circle_samples(n, m=721, t0=0.0, t1=2 * math.pi):
    n = np.asarray(n, dtype=float)
    n /= np.linalg.norm(n)
    a = np.cross(n, [1.0, 0.0, 0.0])
    if np.linalg.norm(a) < 1e-8:
        a = np.cross(n, [0.0, 1.0, 0.0])
    a /= np.linalg.norm(a)
    b = np.cross(n, a)
    ts = np.linspace(t0, t1, m)
    return np.outer(np.cos(ts), a) + np.outer(np.sin(ts), b)


def _distance_to_circle(P, n):
    """Chordal distance from unit vectors ``P`` to the great circle with normal ``n``."""
    s = np.abs(P @ n)
    ang = np.arcsin(np.clip(s, 0.0, 1.0))
    return 2.0 * np.sin(ang / 2.0)


def non_hausdorff_witness(n_max: int = 10, n_samples: int = 2001) -> Witness:
    """Closed geodesics upstairs accumulating on both lifts of one downstairs geodesic.

    Downstairs (projective plane less a point) take the line through the
    puncture in the ``xz``-plane; it is not closed, and its two lifts to the
    sphere less both poles are the open meridian semicircles ``x > 0`` and
    ``x < 0``.  The great circles tilted by ``delta_n = 2^-n`` about the
    ``x``-axis avoid the poles, are closed, and come within ``delta_n`` of
    every point of both semicircles.
    """
    cov = make_covering("punctured_sphere_over_punctured_projective")
    up = cov.upstairs
    down_class = canonicalize(cov.downstairs, GeodesicState([0.5, 0.0], [1.0, 0.0]), False)
    lifts = [lift_geodesic(cov, down_class, k) for k in (0, 1)]
    # sampled images of the two open semicircles (poles excluded)
    ts = np.linspace(1e-6, math.pi - 1e-6, n_samples)
    semis = [np.column_stack([np.sin(ts) * s, np.zeros_like(ts), np.cos(ts)]) for s in (1.0, -1.0)]
    rows = []
    for n in range(1, n_max + 1):
        delta = 2.0 ** -n
        nrm = np.array([0.0, math.cos(delta), math.sin(delta)])
        d_lifts = [float(np.max(_distance_to_circle(S, nrm))) for S in semis]
        circ = _great_circle_samples(nrm, 361)
        X = circ[0]
        V = np.cross(nrm, X)
        x0 = sphere_to_stereo(X)
        v0 = sphere_tangent_to_stereo(X, V)
        up_class = canonicalize(up, GeodesicState(x0, v0), False)
        closed = detect_closed(up, up_class, 3.0 * math.pi) is not None
        pushed = covering_push(cov, up_class)
        rows.append({"n": n, "delta": delta, "distance_to_lift0": d_lifts[0],
                     "distance_to_lift1": d_lifts[1], "closed_upstairs": closed,
                     "pushed": pushed})
    payload = {
        "covering": cov.name,
        "downstairs": down_class,
        "lifts": lifts,
        "lifts_distinct": class_distance(lifts[0], lifts[1], up) > 1e-3,
        "rows": rows,
    }
    return Witness("covering_mismatch", payload,
                   {"op": "non_hausdorff", "n_max": n_max,
                    "expect": [[r["distance_to_lift0"], r["distance_to_lift1"]] for r in rows]})


# --- re-checking ---------------------------------------------------------------------------

def _close(a, b, tol):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a.shape == b.shape and bool(np.all(np.abs(a - b) <= tol * np.maximum(1.0, np.abs(b))))


def recheck(w: Witness | dict, tol: float = 1e-6) -> bool:
    """Re-run the certifying computation recorded in a witness."""
    rc = w.recheck if isinstance(w, Witness) else w["recheck"]
    op = rc["op"]
    if op == "detect_closed":
        st = GeodesicState(rc["start"]["point"], rc["start"]["velocity"])
        again = detect_closed(rc["space"], st, rc["t_max"], rc["tol"])
        return again is not None and abs(again.payload["t"] - rc["expect_t"]) <= tol
    if op == "returning_single":
        st = GeodesicState(rc["start"]["point"], rc["start"]["velocity"])
        t = _returning_single(make_space(rc["space"]), rc["center"], rc["radius"], st, rc["t_max"])
        return t is not None and abs(t - rc["expect_t_reenter"]) <= tol
    if op == "product_regularity":
        again = product_regularity_witness(
            rc["space1"], rc["space2"], GeodesicState(rc["beta"]["point"], rc["beta"]["velocity"]),
            rc["eps_seq"], gamma=GeodesicState(rc["gamma"]["point"], rc["gamma"]["velocity"]))
        got = [r["tangent_line_distance"] for r in again.payload["rows"]]
        return _close(got, rc["expect_distances"], tol)
    if op == "hull_estimate":
        again = hull_estimate(rc["space"], rc["K"], rc["t_cap"], rc["bound"],
                              windings=rc["windings"], puncture_tol=rc["puncture_tol"])
        return isinstance(again, Witness)
    if op == "puncture_escape":
        again = puncture_escape_witness(rc["x"], rc["z_star"], rc["deltas"][0], rc["deltas"][-1])
        got = [r["measured_distance"] for r in again.payload["rows"]]
        return _close(got, rc["expect"], tol)
    if op == "non_hausdorff":
        again = non_hausdorff_witness(rc["n_max"])
        got = [[r["distance_to_lift0"], r["distance_to_lift1"]] for r in again.payload["rows"]]
        return _close(got, rc["expect"], tol)
    raise ValueError(f"unknown recheck op {op!r}")
