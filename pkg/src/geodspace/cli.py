"""Command-line entry point: ``geodspace {trace,chart,connect,properties}``.

Exit codes: 0 success, 2 numerical failure, 3 unsupported combination,
4 bad arguments.  Every failure writes a one-line JSON error object on stderr.

Randomness comes from numpy's PCG64 seeded through a ``SeedSequence`` built
from ``--seed``; each property suite gets its own child stream (spawned in a
fixed order), so adding or removing suites never shifts another suite's
samples.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .connection import DEFAULT_TOL, GeodesicState, integrate
from .errors import (
    BadParams,
    BadSheet,
    GeodesicError,
    NoConnectionFound,
    NotClosed,
    NumericalFailure,
    OutOfChart,
    OutsideDisc,
    UnknownCovering,
    UnknownSpace,
    UnsupportedChart,
)
from .geodesic_space import canonicalize, chart_g_r2, chart_ts, product_chart
from .models import COVERING_NAMES, make_covering, make_space
from .property_lab import (
    covering_square_residual,
    detect_closed,
    hull_estimate,
    non_hausdorff_witness,
    product_regularity_witness,
    puncture_escape_witness,
    returning_test,
)
from .sky_connect import connect

EXIT_OK, EXIT_NUMERIC, EXIT_UNSUPPORTED, EXIT_BADARGS = 0, 2, 3, 4
SUITES = ("closed", "returning", "regularity-product", "hull", "covering")

_BAD_ARGS = (UnknownSpace, BadParams, UnknownCovering, BadSheet, OutOfChart, OutsideDisc, ValueError)
_UNSUPPORTED = (UnsupportedChart, NoConnectionFound, NotClosed)


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code, self.kind, self.message = code, kind, message


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _emit_error(EXIT_BADARGS, "BadArguments", message)
        sys.exit(EXIT_BADARGS)


def _emit_error(code, kind, message):
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code},
                                sort_keys=True) + "\n")


@dataclass
class RunConfig:
    command: str
    space: str | None
    params: dict = field(default_factory=dict)
    seed: int = 0
    tol: float = DEFAULT_TOL
    out: str | None = None
    fmt: str | None = None
    options: dict = field(default_factory=dict)

    @classmethod
    def from_args(cls, ns) -> "RunConfig":
        skip = {"command", "space", "param", "seed", "tol", "out", "format", "func"}
        opts = {k: v for k, v in vars(ns).items() if k not in skip}
        return cls(ns.command, ns.space, _parse_params(ns.param or []), ns.seed, ns.tol,
                   ns.out, ns.format, opts)

    def make_space(self):
        if self.space is None:
            raise CliError(EXIT_BADARGS, "BadArguments", "--space is required")
        return make_space(self.space, self.params)


# --- argument helpers ---------------------------------------------------------

def _parse_params(items):
    out = {}
    for item in items:
        if "=" not in item:
            raise CliError(EXIT_BADARGS, "BadParams", f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            v = int(v)
        except ValueError:
            try:
                v = float(v)
            except ValueError:
                pass
        out[k.strip()] = v
    return out


def _vec(text, name, dim=None):
    if text is None:
        raise CliError(EXIT_BADARGS, "BadArguments", f"--{name} is required")
    try:
        v = np.array([float(t) for t in text.split(",")], dtype=float)
    except ValueError:
        raise CliError(EXIT_BADARGS, "BadArguments", f"--{name}: cannot parse {text!r}") from None
    if dim is not None and v.size != dim:
        raise CliError(EXIT_BADARGS, "BadArguments",
                       f"--{name} needs {dim} coordinates, got {v.size}")
    return v


def _random_state(space, rng, scale=1.0):
    """A random state with a chart point in ``[-scale, scale]^n`` and unit speed."""
    for _ in range(1000):
        p = rng.uniform(-scale, scale, space.dim)
        if space.in_chart(p):
            break
    else:
        raise CliError(EXIT_NUMERIC, "SamplingFailed", f"no chart point sampled for {space.name}")
    v = rng.normal(size=space.dim)
    v /= space.norm(p, v) if space.has_metric else np.linalg.norm(v)
    return GeodesicState(p, v)


def _sample_scale(space):
    return 0.9 if space.kind == "klein" else 1.0


# --- output -----------------------------------------------------------------------

def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def _write(cfg: RunConfig, text: str):
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _svg(points, boundary_pairs=(), title="", disc=True):
    """Minimal deterministic SVG scatter in ``[-1.1, 1.1]^2`` (disc) or auto box."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2) if len(points) else np.zeros((0, 2))
    if disc:
        lo, hi = -1.1, 1.1
    else:
        allp = pts if pts.size else np.zeros((1, 2))
        lo = float(min(allp.min(), -1.0)) * 1.1
        hi = float(max(allp.max(), 1.0)) * 1.1
    size = 400.0

    def px(q):
        return ((q[0] - lo) / (hi - lo) * size, (hi - q[1]) / (hi - lo) * size)

    lines = ['<?xml version="1.0" encoding="UTF-8"?>',
             f"<!-- geodspace {__version__} -->",
             f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:.0f}" height="{size:.0f}" '
             f'viewBox="0 0 {size:.0f} {size:.0f}">',
             f"<title>{title}</title>"]
    if disc:
        c = px((0.0, 0.0))
        r = size / (hi - lo)
        lines.append(f'<circle cx="{c[0]:.3f}" cy="{c[1]:.3f}" r="{r:.3f}" fill="none" stroke="black"/>')
        for q in ((1.0, 0.0), (-1.0, 0.0)):
            a = px(q)
            lines.append(f'<circle cx="{a[0]:.3f}" cy="{a[1]:.3f}" r="4" fill="white" stroke="red">'
                         "<title>deleted boundary pair</title></circle>")
    else:
        a, b = px((lo, 0.0)), px((hi, 0.0))
        lines.append(f'<line x1="{a[0]:.3f}" y1="{a[1]:.3f}" x2="{b[0]:.3f}" y2="{b[1]:.3f}" stroke="gray"/>')
        a, b = px((0.0, lo)), px((0.0, hi))
        lines.append(f'<line x1="{a[0]:.3f}" y1="{a[1]:.3f}" x2="{b[0]:.3f}" y2="{b[1]:.3f}" stroke="gray"/>')
    for q in pts:
        a = px(q)
        lines.append(f'<circle cx="{a[0]:.3f}" cy="{a[1]:.3f}" r="2" fill="blue"/>')
    for e1, e2 in boundary_pairs:
        a, b = px(e1), px(e2)
        lines.append(f'<line x1="{a[0]:.3f}" y1="{a[1]:.3f}" x2="{b[0]:.3f}" y2="{b[1]:.3f}" '
                     'stroke="orange" stroke-dasharray="4 3"><title>glued pair</title></line>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


# --- commands ---------------------------------------------------------------------

def cmd_trace(cfg: RunConfig) -> str:
    space = cfg.make_space()
    p = _vec(cfg.options["start"], "start", space.dim)
    v = _vec(cfg.options["dir"], "dir", space.dim)
    if not space.in_chart(p):
        raise OutOfChart(f"start point {p.tolist()} is outside the chart of {space.name}")
    t_end = cfg.options["t"]
    max_step = cfg.options.get("max_step") or math.inf
    tr = integrate(space, GeodesicState(p, v), t_end, cfg.tol, max_step=max_step)
    if cfg.fmt == "json":
        return _dumps({"space": space.name, "t": tr.t.tolist(), "points": tr.points.tolist(),
                       "velocities": tr.velocities.tolist(), "truncated": bool(tr.truncated),
                       "truncation": tr.truncation})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n = space.dim
    w.writerow(["t"] + [f"x{i}" for i in range(n)] + [f"v{i}" for i in range(n)])
    for t, x, u in zip(tr.t, tr.points, tr.velocities):
        w.writerow([repr(float(t))] + [repr(float(c)) for c in x] + [repr(float(c)) for c in u])
    if tr.truncated:
        sys.stderr.write(json.dumps({"warning": "truncated", "reason": tr.truncation}, sort_keys=True) + "\n")
    return buf.getvalue()


def _chart_family(cfg, space, rng):
    opts = cfg.options
    if opts.get("start") is not None:
        return [GeodesicState(_vec(opts["start"], "start", space.dim),
                              _vec(opts["dir"], "dir", space.dim))]
    if opts.get("family") == "slopes":
        x0 = opts.get("x") if opts.get("x") is not None else 1.0
        if space.dim != 2:
            raise UnsupportedChart("the slope family lives in a 2-dimensional space")
        return [GeodesicState([x0, 0.0], [1.0, 2.0 ** k]) for k in range(1, opts["kmax"] + 1)]
    return [_random_state(space, rng, _sample_scale(space)) for _ in range(opts["n"])]


def cmd_chart(cfg: RunConfig) -> str:
    space = cfg.make_space()
    chart = cfg.options["chart"]
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    states = _chart_family(cfg, space, rng)
    if chart == "g-r2":
        if space.name != "euclidean2":
            raise UnsupportedChart(f"chart g-r2 is defined on euclidean2 only, not {space.name}")
        pts = [chart_g_r2(canonicalize(space, s, oriented=False)) for s in states]
    elif chart == "ts":
        pts = [chart_ts(space, canonicalize(space, s, oriented=True)) for s in states]
    elif chart == "product":
        if space.kind != "product":
            raise UnsupportedChart(f"product chart needs a product space, not {space.name}")
        pts = [product_chart(canonicalize(space, s, oriented=False), space) for s in states]
    else:
        raise UnsupportedChart(f"unknown chart {chart!r}")
    if cfg.fmt == "svg":
        if chart == "g-r2":
            interior = [q.positions()[0] for q in pts if q.kind == "interior"]
            pairs = [tuple(q.positions()) for q in pts if q.kind == "boundary"]
            return _svg(interior, pairs, title=f"g-r2 chart, {space.name}")
        if chart == "ts":
            xy = []
            for q in pts:
                if space.dim == 2:
                    d = q.direction
                    xy.append((math.atan2(d[1], d[0]) / math.pi, float(q.offset @ np.array([-d[1], d[0]]))))
                else:
                    xy.append((float(q.offset[0]), float(q.offset[1])))
            return _svg(xy, title=f"TS chart, {space.name}", disc=False)
        raise UnsupportedChart("SVG output exists for the g-r2 and ts charts only")
    return _dumps({"space": space.name, "chart": chart, "seed": cfg.seed,
                   "points": [q.to_dict() for q in pts]})


def cmd_connect(cfg: RunConfig) -> str:
    space = cfg.make_space()
    x = _vec(cfg.options["from_"], "from", space.dim)
    z = _vec(cfg.options["to"], "to", space.dim)
    for name, q in (("from", x), ("to", z)):
        if not space.in_chart(q):
            raise OutOfChart(f"--{name} point {q.tolist()} is outside the chart of {space.name}")
    conns = connect(space, x, z, windings=cfg.options["windings"])
    return _dumps({"space": space.name, "from": x.tolist(), "to": z.tolist(),
                   "windings": cfg.options["windings"], "count": len(conns),
                   "connections": [c.to_dict() for c in conns]})


# --- property suites ---------------------------------------------------------------

def _suite_closed(space, rng, opts):
    n = opts["n"]
    t_max = opts.get("t_max") or 4.0 * math.pi + 0.5
    rows = []
    for _ in range(n):
        s = _random_state(space, rng, _sample_scale(space))
        w = detect_closed(space, s, t_max)
        rows.append(w.to_dict() if w is not None else None)
    found = [r for r in rows if r is not None]
    periodic = sum(1 for r in found if r["payload"].get("periodic"))
    return {"samples": n, "witnesses": found,
            "summary": {"closed": len(found), "periodic": periodic,
                        "closed_rate": len(found) / n if n else 0.0,
                        "periodic_rate": periodic / n if n else 0.0}}


def _suite_returning(space, rng, opts):
    t_max = opts.get("t_max") or (8.0 if space.kind == "klein" else 20.0)
    p = np.zeros(space.dim)
    w = returning_test(space, p, opts["radius"], opts["n"], t_max, seed=rng)
    found = [w.to_dict()] if w is not None else []
    return {"samples": opts["n"], "radius": opts["radius"], "t_max": t_max, "witnesses": found,
            "summary": {"returning": len(found),
                        "retraces": bool(found and found[0]["payload"].get("retrace"))}}


def _suite_regularity(space, rng, opts):
    del rng
    if space.kind == "product":
        f1, f2 = space.factors
    else:
        f1, f2 = make_space("cylinder"), make_space("euclidean1")
    eps = [0.5 ** k for k in range(1, opts["kmax"] + 1)]
    w = product_regularity_witness(f1, f2, ([0.0] * f2.dim, [1.0] + [0.0] * (f2.dim - 1)), eps)
    rows = w.payload["rows"]
    return {"factors": [f1.name, f2.name], "witnesses": [w.to_dict()],
            "summary": {"final_angle": rows[-1]["tangent_line_distance"],
                        "all_leave": all(r["leaves_neighborhood"] for r in rows)}}


def _suite_hull(space, rng, opts):
    if space.kind == "punctured_projective":
        w = puncture_escape_witness()
        rows = w.payload["rows"]
        return {"witnesses": [w.to_dict()],
                "summary": {"min_puncture_distance": min(r["measured_distance"] for r in rows)}}
    K = [_random_state(space, rng, 0.6 if space.kind == "klein" else 1.0).point
         for _ in range(opts["k_points"])]
    r = hull_estimate(space, K, opts.get("t_max") or 10.0, opts["bound"])
    out = {"K": [k.tolist() for k in K]}
    if hasattr(r, "hull_radius"):
        out.update(witnesses=[], summary=r.to_dict())
    else:
        out.update(witnesses=[r.to_dict()], summary={"hull_escape": True})
    return out


def _suite_covering(covering, rng, opts):
    cov = make_covering(covering)
    n, thr = opts["n"], 1e-7
    res = []
    for i in range(n):
        s = _random_state(cov.upstairs, rng, 2.0 if cov.upstairs.kind != "round" else 1.0)
        res.append(covering_square_residual(cov, s, oriented=bool(i % 2)))
    out = {"covering": covering, "samples": n, "max_residual": max(res) if res else 0.0,
           "summary": {"pass_rate": sum(r < thr for r in res) / n if n else 1.0, "threshold": thr}}
    if opts.get("witness") or covering == "sphere_over_projective":
        out["witnesses"] = [non_hausdorff_witness().to_dict()] if covering == "sphere_over_projective" else []
    return out


def cmd_properties(cfg: RunConfig) -> str:
    opts = cfg.options
    suite = opts["suite"]
    names = SUITES if suite == "all" else (suite,)
    children = np.random.SeedSequence(cfg.seed).spawn(len(SUITES))
    streams = {name: np.random.Generator(np.random.PCG64(ss)) for name, ss in zip(SUITES, children)}
    covering = opts.get("covering")
    space = cfg.make_space() if cfg.space else None
    if space is None and (suite != "covering" or covering is None):
        if not (suite == "all" and covering):
            raise CliError(EXIT_BADARGS, "BadArguments", "--space is required for this suite")
    report = {"seed": cfg.seed, "suite": suite, "space": space.name if space else None, "results": {}}
    for name in names:
        rng = streams[name]
        if name == "covering":
            if covering is None:
                if suite == "covering":
                    raise CliError(EXIT_BADARGS, "BadArguments", "--covering is required")
                continue
            report["results"][name] = _suite_covering(covering, rng, opts)
            continue
        if space is None:
            continue
        if name == "closed":
            report["results"][name] = _suite_closed(space, rng, opts)
        elif name == "returning":
            report["results"][name] = _suite_returning(space, rng, opts)
        elif name == "regularity-product":
            if suite == "all" and space.kind != "product":
                continue
            report["results"][name] = _suite_regularity(space, rng, opts)
        elif name == "hull":
            if space.kind != "punctured_projective" and not space.is_hadamard and space.kind not in (
                    "flat", "klein"):
                if suite == "all":
                    continue
                raise UnsupportedChart(f"hull suite is not defined for {space.name}")
            report["results"][name] = _suite_hull(space, rng, opts)
    return _dumps(report)


# --- parser -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--space", help="space name, e.g. euclidean2, klein2, product(cylinder,euclidean1)")
    common.add_argument("--param", action="append", metavar="KEY=VALUE", help="space parameter")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL)
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=("json", "csv", "svg"))

    p = _Parser(prog="geodspace", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"geodspace {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("trace", parents=[common], help="integrate a geodesic, CSV rows t,x,v")
    t.add_argument("--start", required=True)
    t.add_argument("--dir", required=True)
    t.add_argument("--t", type=float, required=True)
    t.add_argument("--max-step", type=float, dest="max_step")

    c = sub.add_parser("chart", parents=[common], help="chart points of geodesics")
    c.add_argument("--chart", choices=("g-r2", "ts", "product"), required=True)
    c.add_argument("--start")
    c.add_argument("--dir")
    c.add_argument("--family", choices=("slopes", "random"), default="random")
    c.add_argument("--x", type=float, help="base point of the slope family")
    c.add_argument("--kmax", type=int, default=12)
    c.add_argument("--n", type=int, default=100)

    k = sub.add_parser("connect", parents=[common], help="all connecting geodesics")
    k.add_argument("--from", dest="from_", required=True)
    k.add_argument("--to", required=True)
    k.add_argument("--windings", type=int, default=2)

    r = sub.add_parser("properties", parents=[common], help="property suites")
    r.add_argument("--suite", choices=SUITES + ("all",), required=True)
    r.add_argument("--covering", choices=COVERING_NAMES)
    r.add_argument("--n", type=int, default=20)
    r.add_argument("--radius", type=float, default=0.1)
    r.add_argument("--t-max", type=float, dest="t_max")
    r.add_argument("--kmax", type=int, default=10)
    r.add_argument("--k-points", type=int, default=5, dest="k_points")
    r.add_argument("--bound", type=float, default=100.0)
    return p


_COMMANDS = {"trace": cmd_trace, "chart": cmd_chart, "connect": cmd_connect,
             "properties": cmd_properties}
_DEFAULT_FORMAT = {"trace": "csv", "chart": "json", "connect": "json", "properties": "json"}


_VECTOR_FLAGS = ("--start", "--dir", "--from", "--to")


def _glue_vector_flags(argv):
    """Turn ``--from -0.9,0`` into ``--from=-0.9,0`` so negative vectors parse."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VECTOR_FLAGS and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ns = build_parser().parse_args(_glue_vector_flags(argv))
    try:
        cfg = RunConfig.from_args(ns)
        cfg.fmt = cfg.fmt or _DEFAULT_FORMAT[cfg.command]
        if cfg.fmt == "svg" and cfg.command != "chart":
            raise UnsupportedChart("SVG output is available for the chart command only")
        if cfg.fmt == "csv" and cfg.command != "trace":
            raise UnsupportedChart("CSV output is available for the trace command only")
        _write(cfg, _COMMANDS[cfg.command](cfg))
    except CliError as exc:
        _emit_error(exc.code, exc.kind, exc.message)
        return exc.code
    except _BAD_ARGS as exc:
        _emit_error(EXIT_BADARGS, type(exc).__name__, str(exc))
        return EXIT_BADARGS
    except _UNSUPPORTED as exc:
        _emit_error(EXIT_UNSUPPORTED, type(exc).__name__, str(exc))
        return EXIT_UNSUPPORTED
    except (NumericalFailure, GeodesicError, FloatingPointError, np.linalg.LinAlgError) as exc:
        _emit_error(EXIT_NUMERIC, type(exc).__name__, str(exc))
        return EXIT_NUMERIC
    except OSError as exc:
        _emit_error(EXIT_BADARGS, type(exc).__name__, str(exc))
        return EXIT_BADARGS
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
