"""Model spaces and the geodesic coverings between them.

All two-dimensional round models (sphere, projective plane and their
punctured variants) share one coordinate system: stereographic projection
from the south pole, so the chart origin is the north pole.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .connection import Space
from .errors import BadParams, BadSheet, UnknownCovering, UnknownSpace
from .gluing import (
    AntipodalInversion,
    MobiusGluing,
    PeriodicGluing,
    ProductAtlas,
    ProductGluing,
    PuncturedChart,
    StereoAtlas,
    TrivialAtlas,
)

TWO_PI = 2.0 * math.pi
KLEIN_MARGIN = 1e-13
PUNCTURE_RADIUS = 1e-12
INF_SHEETS = math.inf

__all__ = [
    "make_space",
    "make_covering",
    "parse_space",
    "CoveringMap",
    "SPACE_NAMES",
    "COVERING_NAMES",
    "stereo_to_sphere",
    "sphere_to_stereo",
    "stereo_tangent_to_sphere",
    "sphere_tangent_to_stereo",
    "klein_distance",
]


# --- round-sphere helpers ---------------------------------------------------

def stereo_to_sphere(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    r2 = float(x @ x)
    if not np.isfinite(r2):
        return np.array([0.0, 0.0, -1.0])
    return np.array([2 * x[0], 2 * x[1], 1.0 - r2]) / (1.0 + r2)


def stereo_jacobian(x) -> np.ndarray:
    """d(embedding)/dx, a 3x2 matrix."""
    x = np.asarray(x, dtype=float)
    r2 = float(x @ x)
    d = 1.0 + r2
    J = np.empty((3, 2))
    J[:2, :] = 2.0 * (d * np.eye(2) - 2.0 * np.outer(x, x)) / (d * d)
    J[2, :] = -4.0 * x / (d * d)
    return J


def stereo_tangent_to_sphere(x, v) -> np.ndarray:
    return stereo_jacobian(x) @ np.asarray(v, dtype=float)


def sphere_to_stereo(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return X[:2] / (1.0 + X[2])


def sphere_tangent_to_stereo(X, V) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    V = np.asarray(V, dtype=float)
    d = 1.0 + X[2]
    return V[:2] / d - X[:2] * V[2] / (d * d)


def _chordal(p, q):
    return float(np.linalg.norm(stereo_to_sphere(p) - stereo_to_sphere(q)))


def _round_angle(p, q):
    c = float(np.clip(stereo_to_sphere(p) @ stereo_to_sphere(q), -1.0, 1.0))
    return math.acos(c)


def _elliptic_distance(p, q):
    a = _round_angle(p, q)
    return min(a, math.pi - a)


def _elliptic_separation(p, q):
    P = stereo_to_sphere(p)
    Q = stereo_to_sphere(q)
    return float(min(np.linalg.norm(P - Q), np.linalg.norm(P + Q)))


def _stereo_christoffel(x):
    r2 = float(x @ x)
    g = -2.0 * x / (1.0 + r2)
    G = np.zeros((2, 2, 2))
    I = np.eye(2)
    for k in range(2):
        G[k] = np.outer(I[k], g) + np.outer(g, I[k]) - g[k] * I
    return G


def _stereo_accel(x, v):
    g = -2.0 * x / (1.0 + float(x @ x))
    return -2.0 * float(g @ v) * v + float(v @ v) * g


def _stereo_metric(x):
    return (4.0 / (1.0 + float(x @ x)) ** 2) * np.eye(2)


# --- hyperbolic (Klein) helpers ---------------------------------------------

def _klein_to_poincare(a):
    return a / (1.0 + math.sqrt(max(1.0 - float(a @ a), 0.0)))


def klein_distance(a, b) -> float:
    """Hyperbolic distance between Klein-model points (via the Poincare ball)."""
    p = _klein_to_poincare(np.asarray(a, dtype=float))
    q = _klein_to_poincare(np.asarray(b, dtype=float))
    num = float(np.linalg.norm(p - q))
    den = math.sqrt(max(float(p @ p) * float(q @ q) - 2.0 * float(p @ q) + 1.0, 0.0))
    if num == 0.0:
        return 0.0
    return 2.0 * math.atanh(min(num / den, 1.0 - 1e-16))


def _klein_space(n: int) -> Space:
    I = np.eye(n)

    def christoffel(x):
        s = 1.0 - float(x @ x)
        # G[k, i, j] = (x_i delta_kj + x_j delta_ki) / s
        return (np.einsum("i,kj->kij", x, I) + np.einsum("j,ki->kij", x, I)) / s

    def accel(x, v):
        return -2.0 * float(x @ v) * v / (1.0 - float(x @ x))

    def metric(x):
        s = 1.0 - float(x @ x)
        return I / s + np.outer(x, x) / (s * s)

    return Space(
        name=f"klein{n}",
        dim=n,
        christoffel_fn=christoffel,
        domain_fn=lambda x: float(x @ x) < 1.0 - KLEIN_MARGIN,
        metric_fn=metric,
        accel_fn=accel,
        distance_fn=klein_distance,
        kind="klein",
        params={"n": n},
        is_hadamard=True,
        is_pseudohadamard=True,
        is_flat=False,
    )


# --- flat models --------------------------------------------------------------

def _flat(name, n, *, kind, metric=True, domain=None, gluing=None, atlas=None,
          hadamard=False, params=None, signature=None, distance=None):
    zeros = np.zeros((n, n, n))
    I = np.eye(n)
    return Space(
        name=name,
        dim=n,
        christoffel_fn=lambda x: zeros.copy(),
        domain_fn=domain or (lambda x: True),
        metric_fn=(lambda x: I.copy()) if metric else None,
        accel_fn=lambda x, v: np.zeros(n),
        distance_fn=distance,
        kind=kind,
        params=params or {},
        is_hadamard=hadamard,
        is_pseudohadamard=hadamard or kind == "pseudoeuclidean",
        is_flat=True,
        gluing=gluing,
        atlas=atlas or TrivialAtlas(),
        signature=signature,
    )


def _euclid_distance(p, q):
    return float(np.linalg.norm(p - q))


def euclidean(n: int) -> Space:
    return _flat(f"euclidean{n}", n, kind="euclidean", hadamard=True,
                 params={"n": n}, distance=_euclid_distance)


def pseudoeuclidean(n: int, signature=None) -> Space:
    if signature is None:
        signature = (n - 1, 1)
    signature = tuple(int(s) for s in signature)
    if len(signature) != 2 or min(signature) < 0 or sum(signature) != n:
        raise BadParams(f"signature {signature} incompatible with dimension {n}")
    return _flat(f"pseudoeuclidean{n}", n, kind="pseudoeuclidean", metric=False,
                 params={"n": n, "signature": list(signature)}, signature=signature)


def circle() -> Space:
    return _flat("circle", 1, kind="circle", gluing=PeriodicGluing({0: TWO_PI}),
                 params={"period": TWO_PI})


def cylinder() -> Space:
    return _flat("cylinder", 2, kind="cylinder", gluing=PeriodicGluing({1: TWO_PI}),
                 params={"period": TWO_PI})


def flat_torus() -> Space:
    return _flat("flat_torus", 2, kind="torus",
                 gluing=PeriodicGluing({0: TWO_PI, 1: TWO_PI}),
                 params={"periods": [TWO_PI, TWO_PI]})


def flat_strip() -> Space:
    return _flat("flat_strip", 2, kind="strip", domain=lambda x: abs(x[1]) < 1.0,
                 params={"width": 2.0}, distance=_euclid_distance)


def flat_mobius() -> Space:
    return _flat("flat_mobius", 2, kind="mobius", domain=lambda x: abs(x[1]) < 1.0,
                 gluing=MobiusGluing(1.0), params={"period": 1.0})


# --- round models ----------------------------------------------------------------

def _round(name, kind, *, gluing=None, atlas=None, distance, separation):
    return Space(
        name=name,
        dim=2,
        christoffel_fn=_stereo_christoffel,
        domain_fn=lambda x: True,
        metric_fn=_stereo_metric,
        accel_fn=_stereo_accel,
        distance_fn=distance,
        separation_fn=separation,
        kind=kind,
        params={},
        gluing=gluing,
        atlas=atlas or TrivialAtlas(),
    )


def sphere2() -> Space:
    return _round("sphere2", "sphere", atlas=StereoAtlas(),
                  distance=_round_angle, separation=_chordal)


def punctured_sphere() -> Space:
    return _round("punctured_sphere", "punctured_sphere",
                  atlas=StereoAtlas(punctured=True, radius=PUNCTURE_RADIUS),
                  distance=_round_angle, separation=_chordal)


def projective_plane() -> Space:
    return _round("projective_plane", "projective", gluing=AntipodalInversion(),
                  distance=_elliptic_distance, separation=_elliptic_separation)


def punctured_projective_plane() -> Space:
    return _round("punctured_projective_plane", "punctured_projective",
                  gluing=AntipodalInversion(),
                  atlas=PuncturedChart([np.zeros(2)], radius=PUNCTURE_RADIUS),
                  distance=_elliptic_distance, separation=_elliptic_separation)


# --- products --------------------------------------------------------------------

def product(s1: Space, s2: Space) -> Space:
    n1, n2 = s1.dim, s2.dim
    n = n1 + n2
    b1, b2 = slice(0, n1), slice(n1, n)

    def christoffel(x):
        G = np.zeros((n, n, n))
        G[b1, b1, b1] = s1.christoffel_fn(x[b1])
        G[b2, b2, b2] = s2.christoffel_fn(x[b2])
        return G

    def accel(x, v):
        return np.concatenate((s1.acceleration(x[b1], v[b1]), s2.acceleration(x[b2], v[b2])))

    metric = None
    if s1.has_metric and s2.has_metric:
        def metric(x):
            g = np.zeros((n, n))
            g[b1, b1] = s1.metric_fn(x[b1])
            g[b2, b2] = s2.metric_fn(x[b2])
            return g

    distance = None
    if s1.distance_fn is not None and s2.distance_fn is not None:
        def distance(p, q):
            return math.hypot(s1.distance_fn(p[b1], q[b1]), s2.distance_fn(p[b2], q[b2]))

    def separation(p, q):
        return math.hypot(s1.separation(p[b1], q[b1]), s2.separation(p[b2], q[b2]))

    gluing = None
    if s1.gluing is not None or s2.gluing is not None:
        gluing = ProductGluing([(b1, s1.gluing), (b2, s2.gluing)])
    sig = None
    if s1.signature is not None or s2.signature is not None:
        a = s1.signature or (n1, 0)
        b = s2.signature or (n2, 0)
        sig = (a[0] + b[0], a[1] + b[1])
    return Space(
        name=f"product({s1.name},{s2.name})",
        dim=n,
        christoffel_fn=christoffel,
        domain_fn=lambda x: s1.in_chart(x[b1]) and s2.in_chart(x[b2]),
        metric_fn=metric,
        accel_fn=accel,
        distance_fn=distance,
        separation_fn=separation,
        kind="product",
        params={"factors": [s1.name, s2.name]},
        is_hadamard=s1.is_hadamard and s2.is_hadamard,
        is_pseudohadamard=s1.is_pseudohadamard and s2.is_pseudohadamard,
        is_flat=s1.is_flat and s2.is_flat,
        gluing=gluing,
        atlas=ProductAtlas([(b1, s1.atlas), (b2, s2.atlas)]),
        factors=(s1, s2),
        signature=sig,
    )


# --- name parsing ------------------------------------------------------------------

_SIMPLE = {
    "sphere2": sphere2,
    "sphere": sphere2,
    "projective_plane": projective_plane,
    "punctured_projective_plane": punctured_projective_plane,
    "punctured_sphere": punctured_sphere,
    "cylinder": cylinder,
    "flat_torus": flat_torus,
    "torus": flat_torus,
    "flat_mobius": flat_mobius,
    "mobius": flat_mobius,
    "flat_strip": flat_strip,
    "strip": flat_strip,
    "circle": circle,
}

_ALIASES = {"klein_hyperbolic": "klein", "hyperbolic": "klein"}

SPACE_NAMES = ["euclidean(n)", "pseudoeuclidean(n, signature)", "klein_hyperbolic(n)",
               *sorted(_SIMPLE), "product(s1, s2)"]


def _split_top(s: str) -> list[str]:
    parts, depth, cur = [], 0, ""
    for ch in s:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append(cur.strip())
            cur = ""
        else:
            cur += ch
    if cur.strip():
        parts.append(cur.strip())
    return parts


def _dim(params, default=None):
    n = params.get("n", params.get("dim", default))
    if n is None:
        raise BadParams("dimension parameter 'n' required")
    try:
        n = int(n)
    except (TypeError, ValueError):
        raise BadParams(f"dimension must be an integer, got {n!r}") from None
    if n < 1:
        raise BadParams(f"dimension must be positive, got {n}")
    return n


def parse_space(text: str) -> Space:
    """Parse names like ``euclidean3``, ``klein(2)``, ``product:euclidean1,cylinder``."""
    return make_space(text)


def make_space(name, params: dict | None = None, **kw) -> Space:
    """Construct a model space by name.

    ``name`` may embed its parameters: ``euclidean3``, ``euclidean(3)``,
    ``klein_hyperbolic(2)``, ``pseudoeuclidean(3, 2, 1)``,
    ``product(euclidean1, cylinder)`` or ``product:euclidean1,cylinder``.
    A ``Space`` passes through unchanged.
    """
    if isinstance(name, Space):
        return name
    params = dict(params or {}, **kw)
    if not isinstance(name, str):
        raise UnknownSpace(f"space name must be a string, got {type(name).__name__}")
    s = name.strip().lower().replace(" ", "")
    args: list[str] = []
    if s.startswith("product:"):
        args = _split_top(s[len("product:"):])
        s = "product"
    else:
        m = re.fullmatch(r"([a-z_]+?)(\d*)(?:\((.*)\))?", s)
        if m is None:
            raise UnknownSpace(f"cannot parse space name {name!r}")
        base, digits, inner = m.groups()
        if base in _SIMPLE or base + digits in _SIMPLE:
            key = base + digits if base + digits in _SIMPLE else base
            if inner:
                raise BadParams(f"{key} takes no positional parameters")
            return _SIMPLE[key]()
        s = _ALIASES.get(base, base)
        if digits:
            params.setdefault("n", int(digits))
        if inner:
            args = _split_top(inner)

    if s == "euclidean":
        if args:
            params.setdefault("n", args[0])
        return euclidean(_dim(params))
    if s == "klein":
        if args:
            params.setdefault("n", args[0])
        return _klein_space(_dim(params))
    if s == "pseudoeuclidean":
        if args:
            params.setdefault("n", args[0])
            if len(args) == 3:
                params.setdefault("signature", (args[1], args[2]))
            elif len(args) != 1:
                raise BadParams("pseudoeuclidean(n) or pseudoeuclidean(n, p, q)")
        sig = params.get("signature")
        if isinstance(sig, str):
            sig = tuple(int(t) for t in re.split(r"[,:]", sig))
        try:
            return pseudoeuclidean(_dim(params), sig)
        except (TypeError, ValueError) as exc:
            raise BadParams(str(exc)) from None
    if s == "product":
        factors = args or params.get("factors")
        if not factors or len(factors) != 2:
            raise BadParams("product needs exactly two factors")
        return product(*(make_space(f) for f in factors))
    raise UnknownSpace(f"unknown space {name!r}; known: {', '.join(SPACE_NAMES)}")


# --- coverings -----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CoveringMap:
    """A geodesic covering ``upstairs -> downstairs`` written in chart coordinates.

    ``lift(x, sheet)`` returns the upstairs point over ``x`` on ``sheet``;
    ``lift_tangent(x, v, sheet)`` the matching tangent vector.  Sheets are
    integers (tuples of integers for the torus), ``0 .. sheet_count - 1`` for
    finite coverings.
    """

    name: str
    upstairs: Space
    downstairs: Space
    project: Callable
    project_tangent: Callable
    lift: Callable
    lift_tangent: Callable
    sheet_count: float
    sheet_rank: int = 1

    @property
    def finite(self) -> bool:
        return self.sheet_count != INF_SHEETS

    def sheets(self, cap: int = 2):
        """Sheet selectors within ``cap`` deck steps of sheet 0."""
        if self.finite:
            return list(range(int(self.sheet_count)))
        rng = range(-cap, cap + 1)
        if self.sheet_rank == 1:
            return list(rng)
        return list(itertools.product(rng, repeat=self.sheet_rank))

    def check_sheet(self, sheet):
        if self.finite:
            if not isinstance(sheet, (int, np.integer)) or not 0 <= sheet < self.sheet_count:
                raise BadSheet(f"{self.name}: sheet must be in 0..{int(self.sheet_count) - 1}, got {sheet!r}")
            return int(sheet)
        if self.sheet_rank == 1:
            if isinstance(sheet, (tuple, list)) and len(sheet) == 1:
                sheet = sheet[0]
            if isinstance(sheet, bool) or not isinstance(sheet, (int, np.integer)):
                raise BadSheet(f"{self.name}: sheet must be an integer, got {sheet!r}")
            return int(sheet)
        if isinstance(sheet, (int, np.integer)) and not isinstance(sheet, bool):
            sheet = (int(sheet),) + (0,) * (self.sheet_rank - 1)
        if (not isinstance(sheet, (tuple, list)) or len(sheet) != self.sheet_rank
                or not all(isinstance(k, (int, np.integer)) for k in sheet)):
            raise BadSheet(f"{self.name}: sheet must be {self.sheet_rank} integers, got {sheet!r}")
        return tuple(int(k) for k in sheet)


def _translation_cover(name, up, down, periods: dict):
    axes = sorted(periods)

    def project(x):
        return down.reduce(np.asarray(x, dtype=float))

    def project_tangent(x, v):
        return down.reduce(np.asarray(x, dtype=float), np.asarray(v, dtype=float))

    cov = None

    def lift(x, sheet=0):
        k = cov.check_sheet(sheet)
        ks = (k,) if not isinstance(k, tuple) else k
        out = down.reduce(np.asarray(x, dtype=float)).copy()
        for a, kk in zip(axes, ks):
            out[a] += kk * periods[a]
        return out

    def lift_tangent(x, v, sheet=0):
        cov.check_sheet(sheet)
        return np.asarray(v, dtype=float).copy()

    cov = CoveringMap(name, up, down, project, project_tangent, lift, lift_tangent,
                      INF_SHEETS, sheet_rank=len(axes))
    return cov


def _mobius_cover():
    up, down = flat_strip(), flat_mobius()
    glue = down.gluing
    cov = None

    def project(x):
        return down.reduce(np.asarray(x, dtype=float))

    def project_tangent(x, v):
        return down.reduce(np.asarray(x, dtype=float), np.asarray(v, dtype=float))

    def lift(x, sheet=0):
        k = cov.check_sheet(sheet)
        out, _ = glue._shift(down.reduce(np.asarray(x, dtype=float)), -k)
        return out

    def lift_tangent(x, v, sheet=0):
        k = cov.check_sheet(sheet)
        x = np.asarray(x, dtype=float)
        r = glue.reduce(x)
        v = np.asarray(v, dtype=float)
        if r is not None and r[1] is not None:
            v = r[1] @ v
        return np.array([v[0], (-1.0) ** (k % 2) * v[1]])

    cov = CoveringMap("plane_over_mobius", up, down, project, project_tangent, lift,
                      lift_tangent, INF_SHEETS)
    return cov


def _antipodal_cover(name, up, down):
    cov = None

    def project(x):
        return down.reduce(np.asarray(x, dtype=float))

    def project_tangent(x, v):
        return down.reduce(np.asarray(x, dtype=float), np.asarray(v, dtype=float))

    def _antipode(x, v=None):
        r2 = float(x @ x)
        y = -x / r2
        if v is None:
            return y
        J = -(r2 * np.eye(2) - 2.0 * np.outer(x, x)) / (r2 * r2)
        return y, J @ v

    def lift(x, sheet=0):
        k = cov.check_sheet(sheet)
        x = down.reduce(np.asarray(x, dtype=float))
        return x.copy() if k == 0 else _antipode(x)

    def lift_tangent(x, v, sheet=0):
        k = cov.check_sheet(sheet)
        x, v = down.reduce(np.asarray(x, dtype=float), np.asarray(v, dtype=float))
        return np.asarray(v, dtype=float).copy() if k == 0 else _antipode(x, v)[1]

    cov = CoveringMap(name, up, down, project, project_tangent, lift, lift_tangent, 2)
    return cov


_COVERINGS = {
    "line_over_circle": lambda: _translation_cover("line_over_circle", euclidean(1), circle(), {0: TWO_PI}),
    "plane_over_cylinder": lambda: _translation_cover("plane_over_cylinder", euclidean(2), cylinder(), {1: TWO_PI}),
    "plane_over_torus": lambda: _translation_cover("plane_over_torus", euclidean(2), flat_torus(),
                                                   {0: TWO_PI, 1: TWO_PI}),
    "plane_over_mobius": _mobius_cover,
    "sphere_over_projective": lambda: _antipodal_cover("sphere_over_projective", sphere2(), projective_plane()),
    "punctured_sphere_over_punctured_projective": lambda: _antipodal_cover(
        "punctured_sphere_over_punctured_projective", punctured_sphere(), punctured_projective_plane()),
}

COVERING_NAMES = sorted(_COVERINGS)


def make_covering(name: str) -> CoveringMap:
    key = str(name).strip().lower()
    if key not in _COVERINGS:
        raise UnknownCovering(f"unknown covering {name!r}; known: {', '.join(COVERING_NAMES)}")
    return _COVERINGS[key]()
