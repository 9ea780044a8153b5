"""Numerical geodesics, geodesic-space charts and structural property testers."""
__version__ = "0.1.0"

from .connection import (
    DEFAULT_TOL,
    GeodesicState,
    Space,
    Trajectory,
    christoffel_at,
    exp_map,
    geodesic_residual,
    integrate,
    log_map,
    parallel_transport,
)
from .errors import *  # noqa: F401,F403
from .geodesic_space import (
    GeodesicClass,
    MobiusChartPoint,
    ProductClassPoint,
    TSPoint,
    canonicalize,
    chart_g_r2,
    chart_ts,
    chart_ts_inverse,
    class_distance,
    converges_to_vertical,
    hadamard_F,
    hadamard_F_inverse,
    product_chart,
)
from .models import COVERING_NAMES, SPACE_NAMES, CoveringMap, make_covering, make_space, product
from .sky_connect import Connection, SkySection, connect, foot, sky, triangle_first_law
