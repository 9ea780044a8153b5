"""Independent oracles for derived expected values.

Nothing here imports geodspace.  Symbolic quantities come from sympy, the
rest from closed-form formulas.  ``python3 tests/oracles.py`` rewrites
``frozen_oracles.json``; the tests compare both the live oracle and the
package against the frozen numbers.
"""
from __future__ import annotations

import json
import math
from functools import lru_cache
from pathlib import Path

import numpy as np
import sympy as sp

FROZEN_PATH = Path(__file__).with_name("frozen_oracles.json")


# --- symbolic Levi-Civita ----------------------------------------------------------

@lru_cache(maxsize=None)
def _christoffel_symbolic(model: str):
    x, y = sp.symbols("x y", real=True)
    X = sp.Matrix([x, y])
    if model == "klein":
        s = 1 - x**2 - y**2
        g = sp.eye(2) / s + X * X.T / s**2
    elif model == "stereo":
        g = sp.eye(2) * 4 / (1 + x**2 + y**2) ** 2
    else:
        raise ValueError(model)
    ginv = sp.simplify(g.inv())
    coords = (x, y)
    gam = [[[sp.S(0)] * 2 for _ in range(2)] for _ in range(2)]
    for k in range(2):
        for i in range(2):
            for j in range(2):
                gam[k][i][j] = sp.simplify(sum(
                    ginv[k, l] * (sp.diff(g[l, i], coords[j]) + sp.diff(g[l, j], coords[i])
                                  - sp.diff(g[i, j], coords[l])) / 2
                    for l in range(2)))
    return sp.lambdify((x, y), gam, "numpy")


def christoffel(model: str, p) -> np.ndarray:
    """Gamma[k, i, j] of the Klein or stereographic-sphere metric at ``p``."""
    return np.array(_christoffel_symbolic(model)(float(p[0]), float(p[1])), dtype=float)


# --- closed-form geodesics ------------------------------------------------------------

def klein_radial(t: float, speed: float = 1.0) -> float:
    """Chart radius of the Klein geodesic leaving the centre with hyperbolic speed ``speed``."""
    return math.tanh(speed * t)


def klein_distance(a, b) -> float:
    """Hyperbolic distance in the Klein model via the cross-ratio formula."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    num = 1.0 - a @ b
    den = math.sqrt((1.0 - a @ a) * (1.0 - b @ b))
    return math.acosh(max(num / den, 1.0))


def great_circle(P, V, t):
    """Unit-speed great circle in R^3."""
    return np.cos(t) * np.asarray(P, float) + np.sin(t) * np.asarray(V, float)


def stereo(X):
    """Stereographic coordinates from the south pole (north pole -> origin)."""
    X = np.asarray(X, float)
    return X[:2] / (1.0 + X[2])


def stereo_inv(x):
    x = np.asarray(x, float)
    r2 = x @ x
    return np.array([2 * x[0], 2 * x[1], 1 - r2]) / (1 + r2)


def stereo_push(X, V):
    """Tangent vector ``V`` at ``X`` on the sphere, written in stereographic coordinates."""
    X = np.asarray(X, float)
    V = np.asarray(V, float)
    d = 1.0 + X[2]
    return V[:2] / d - X[:2] * V[2] / d**2


def octant_holonomy() -> float:
    """Rotation angle after transport around the geodesic triangle with three right angles.

    Holonomy equals enclosed area for unit curvature: one eighth of 4 pi.
    """
    return 4.0 * math.pi / 8.0


def euclid_triangle_slack(x, y, z) -> float:
    x, y, z = (np.asarray(q, float) for q in (x, y, z))
    a1 = np.linalg.norm(y - x)
    a2 = np.linalg.norm(z - x)
    a3 = np.linalg.norm(z - y)
    cos = (y - x) @ (z - x) / (a1 * a2)
    return a3**2 - (a1**2 + a2**2 - 2 * a1 * a2 * cos)


def klein_triangle_slack(x, y, z) -> float:
    """First-law slack with lengths from the cross-ratio and the angle from the Klein metric."""
    x, y, z = (np.asarray(q, float) for q in (x, y, z))
    a1 = klein_distance(x, y)
    a2 = klein_distance(x, z)
    a3 = klein_distance(y, z)
    s = 1.0 - x @ x
    g = np.eye(2) / s + np.outer(x, x) / s**2
    u, w = y - x, z - x
    cos = (u @ g @ w) / math.sqrt((u @ g @ u) * (w @ g @ w))
    return a3**2 - (a1**2 + a2**2 - 2 * a1 * a2 * cos)


def compute_all() -> dict:
    out = {
        "klein_christoffel_half": christoffel("klein", (0.5, 0.0)).tolist(),
        "klein_christoffel_origin": christoffel("klein", (0.0, 0.0)).tolist(),
        "stereo_christoffel_sample": christoffel("stereo", (0.3, -0.4)).tolist(),
        "klein_exp_unit": [klein_radial(1.0), 0.0],
        "klein_log_half": [math.atanh(0.5), 0.0],
        "klein_chart_radius_t3": klein_radial(3.0),
        "great_circle_period": 2.0 * math.pi,
        "octant_holonomy": octant_holonomy(),
        "klein_slack_right_triangle": klein_triangle_slack((0, 0), (0.5, 0), (0, 0.5)),
        "g_r2_diagonal": [0.0, math.tanh(1.0)],
        "g_r2_vertical_x1_theta": math.atan2(1.0, -1.0),
        "ts_euclid_vertical": {"direction": [0.0, 1.0], "offset": [1.0, 0.0]},
        "ts_klein_chord": {"direction": [1.0, 0.0], "offset": [0.0, 0.5]},
    }
    return out


def frozen() -> dict:
    return json.loads(FROZEN_PATH.read_text())


if __name__ == "__main__":
    FROZEN_PATH.write_text(json.dumps(compute_all(), indent=2, sort_keys=True) + "\n")
    print(f"wrote {FROZEN_PATH}")
