"""Command-line entry point: ``hcdlab <command> [flags]``.

Exit codes: 0 on success (including a report with ``violated: true``),
2 on usage errors, 3 on numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .cd_harness import (
    BMConfig,
    MCPConfig,
    PROFILES,
    WitnessRegion,
    area_chord_check,
    ball_target,
    bm_report,
    default_target,
    homothety_volumes,
    mcp_report,
    mcp_singular_witness,
)
from .cd_harness.homothety import HOMOTHETY_GRID
from .cd_harness.lemma import TABLE_COLUMNS
from .convex_trig import NormSpec, correspond_many, pythagorean_residual, trig_xy
from .errors import HcdError, NumericFailure, UsageError
from .heisenberg import IDENTITY, Covector, Geometry, HPoint, cut_time, distance, exp_xyz, log_map
from .jacobian import DYADIC_GRID, SCAN_COLUMNS, exp_jacobian, scaling_exponent

DEFAULT_SEED = 0xC0FFEE
NORM_GRAMMAR = "euclidean | lp:<p> | lens:<c>,<R> | table:@<path>"

COMMANDS = (
    "trig-table",
    "geodesic",
    "distance",
    "jacobian-scan",
    "bm-falsify",
    "mcp-falsify",
    "contraction",
    "lemma-check",
)

REPORT_COMMANDS = ("distance", "bm-falsify", "mcp-falsify")

CSV_COLUMNS = {
    "trig-table": ("theta", "cos", "sin", "psi", "residual"),
    "geodesic": ("t", "x", "y", "z"),
    "distance": ("distance", "phi", "omega", "r"),
    "jacobian-scan": SCAN_COLUMNS + ("slope_J",),
    "bm-falsify": ("K", "N", "rho", "lhs", "rhs", "margin", "violated"),
    "mcp-falsify": ("K", "N", "t", "lhs", "rhs", "margin", "violated"),
    "contraction": ("t", "volume", "stderr", "voxel"),
    "lemma-check": TABLE_COLUMNS,
}


@dataclass
class RunConfig:
    command: str
    norm: str = "euclidean"
    seed: int = DEFAULT_SEED
    output: str | None = None
    format: str = "json"
    samples: int | None = None
    voxel: float | None = None
    K: float = 0.0
    N: float | None = None
    t: float | None = None
    rho: float = 2.0**-6
    phi: float = 0.7
    omega: float = 1.3
    r: float = 1.0
    point: tuple[float, float, float] | None = None
    profile: str = "parabola"
    control: bool = False


# -- serialization ------------------------------------------------------------


def _fmt(x: float) -> str:
    # shortest string that round-trips; never more than 17 significant digits
    return repr(float(x))


def _plain(obj):
    """Recursively turn numpy scalars/arrays and tuples into JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, round-trip floats, nan/inf as null."""

    def enc(v, indent):
        pad = "  " * (indent + 1)
        if isinstance(v, dict):
            if not v:
                return "{}"
            items = [f"{pad}{json.dumps(k)}: {enc(v[k], indent + 1)}" for k in sorted(v)]
            return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
        if isinstance(v, list):
            if not v:
                return "[]"
            if all(not isinstance(x, (dict, list)) for x in v):
                return "[" + ", ".join(enc(x, indent) for x in v) + "]"
            return "[\n" + ",\n".join(pad + enc(x, indent + 1) for x in v) + "\n" + "  " * indent + "]"
        if isinstance(v, bool) or v is None:
            return json.dumps(v)
        if isinstance(v, int):
            return str(v)
        if isinstance(v, float):
            return _fmt(v) if math.isfinite(v) else "null"
        return json.dumps(v)

    return enc(_plain(obj), 0) + "\n"


def csv_text(columns: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        out = []
        for v in row:
            if isinstance(v, (bool, np.bool_)):
                out.append("true" if v else "false")
            elif isinstance(v, (float, np.floating)):
                out.append(_fmt(float(v)) if math.isfinite(v) else "nan")
            else:
                out.append(v)
        w.writerow(out)
    return buf.getvalue()


# -- commands -----------------------------------------------------------------
# Each returns (payload for JSON, rows for CSV).


def _trig_table(cfg: RunConfig):
    n = cfg.samples or 360
    if n < 1:
        raise UsageError("--samples must be positive")
    body = Geometry(cfg.norm).primal
    theta = body.period * np.arange(n) / n
    c, s = trig_xy(body, theta)
    psi, corner, _, _ = correspond_many(body, theta)
    res = np.abs(np.asarray(pythagorean_residual(body, theta, psi), float))
    rows = list(zip(theta, c, s, psi, res))
    payload = {
        "columns": list(CSV_COLUMNS["trig-table"]),
        "rows": rows,
        "max_residual": float(res.max()),
        "corners": int(np.count_nonzero(corner)),
        "period": body.period,
    }
    return payload, rows


def _covector(cfg: RunConfig) -> Covector:
    if cfg.r < 0:
        raise UsageError("--r must be non-negative")
    return Covector(cfg.phi, cfg.omega, cfg.r)


def _geodesic(cfg: RunConfig):
    g = Geometry(cfg.norm)
    cov = _covector(cfg)
    T = 1.0 if cfg.t is None else cfg.t
    n = cfg.samples or 101
    if n < 2:
        raise UsageError("--samples must be at least 2")
    ts = np.linspace(0.0, T, n)
    x, y, z = (np.broadcast_to(v, ts.shape) for v in exp_xyz(g, cov.phi, cov.omega, cov.r, ts))
    rows = list(zip(ts, x, y, z))
    tstar = cut_time(g, cov) if cov.r > 0 else math.inf
    payload = {"columns": list(CSV_COLUMNS["geodesic"]), "rows": rows, "cut_time": tstar,
               "minimal": bool(abs(T) < tstar)}
    return payload, rows


def _distance(cfg: RunConfig):
    if cfg.point is None:
        raise UsageError("distance needs --point x,y,z")
    g = Geometry(cfg.norm)
    q = HPoint(*cfg.point)
    d = distance(g, IDENTITY, q)
    if q.x == 0 and q.y == 0:
        cov = (math.nan, math.nan, math.nan)
    else:
        cov = log_map(g, q).as_tuple()
    row = (d, *cov)
    payload = {"distance": d, "covector": list(cov), "point": list(cfg.point)}
    return payload, [row]


def _jacobian_scan(cfg: RunConfig):
    g = Geometry(cfg.norm)
    cov = _covector(cfg)
    samples = [exp_jacobian(g, cov, t) for t in DYADIC_GRID]
    fit = scaling_exponent([(s.t, s.J) for s in samples])
    m1 = scaling_exponent([(s.t, abs(s.detM1)) for s in samples])
    zw = scaling_exponent([(s.t, abs(s.dz_domega)) for s in samples])
    rows = [s.row() + (fit.slope,) for s in samples]
    payload = {
        "columns": list(SCAN_COLUMNS),
        "rows": [s.row() for s in samples],
        "slope": fit.slope,
        "r2": fit.r2,
        "slope_detM1": m1.slope,
        "slope_dz_domega": zw.slope,
    }
    return payload, rows


def _bm(cfg: RunConfig):
    N = 4.0 if cfg.N is None else cfg.N
    bcfg = BMConfig(n_samples=cfg.samples or BMConfig.n_samples,
                    voxel=cfg.voxel or BMConfig.voxel, degenerate=cfg.control)
    rec = bm_report(cfg.norm, cfg.K, N, cfg.rho, cfg.seed, bcfg).as_dict()
    return rec, [(cfg.K, N, cfg.rho, rec["lhs"], rec["rhs"], rec["margin"], rec["violated"])]


def _mcp(cfg: RunConfig):
    g = Geometry(cfg.norm)
    N = 5.0 if cfg.N is None else cfg.N
    mcfg = MCPConfig(n_samples=cfg.samples or MCPConfig.n_samples,
                     voxel=cfg.voxel or MCPConfig.voxel)
    if g.primal.regularity.c1:
        region = ball_target(g, cfg.seed)
        t = 0.5 if cfg.t is None else cfg.t
        wit = None
    else:
        wit = mcp_singular_witness(g, cfg.seed)
        region = WitnessRegion(g, wit)
        t = 0.5 * wit.t0 if cfg.t is None else cfg.t
    rec = mcp_report(g, IDENTITY, region, t, cfg.K, N, cfg.seed, mcfg).as_dict()
    if wit is not None:
        rec["details"]["witness"] = {
            "box": [list(b) for b in wit.box],
            "t0": wit.t0,
            "A_volume": wit.A_volume.as_dict(),
            "confinement_max_abs_y": wit.max_abs_y,
            "confinement_max_abs_z": wit.max_abs_z,
            "jz_min_length": wit.jz_min_length,
            "branching": wit.branching,
        }
    return rec, [(cfg.K, N, t, rec["lhs"], rec["rhs"], rec["margin"], rec["violated"])]


def _contraction(cfg: RunConfig):
    g = Geometry(cfg.norm)
    n = cfg.samples or 20_000
    vols = homothety_volumes(g, IDENTITY, default_target(g), HOMOTHETY_GRID, cfg.seed, n,
                             cfg.voxel or 0.25)
    fit = scaling_exponent([(t, v.value) for t, v in zip(HOMOTHETY_GRID, vols)])
    rows = [(t, v.value, v.stderr, v.voxel) for t, v in zip(HOMOTHETY_GRID, vols)]
    payload = {"columns": list(CSV_COLUMNS["contraction"]), "rows": rows,
               "slope": fit.slope, "r2": fit.r2}
    return payload, rows


def _lemma(cfg: RunConfig):
    if cfg.profile not in PROFILES:
        raise UsageError(f"unknown profile {cfg.profile!r}; choose from {sorted(PROFILES)}")
    chk = area_chord_check(PROFILES[cfg.profile], (-1.0, 1.0), n=cfg.samples or 64)
    rows = [tuple(r) for r in chk.table]
    payload = {"columns": list(TABLE_COLUMNS), "rows": rows, "strict": chk.strict,
               "monotone": chk.monotone, "orientation": chk.orientation}
    return payload, rows


HANDLERS = {
    "trig-table": _trig_table,
    "geodesic": _geodesic,
    "distance": _distance,
    "jacobian-scan": _jacobian_scan,
    "bm-falsify": _bm,
    "mcp-falsify": _mcp,
    "contraction": _contraction,
    "lemma-check": _lemma,
}


# -- argument parsing ---------------------------------------------------------


def _point(text: str) -> tuple[float, float, float]:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}") from None
    if len(vals) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}")
    return vals


def _norm(text: str) -> str:
    try:
        spec = NormSpec.parse(text)
        spec.validate()
    except HcdError as exc:
        raise argparse.ArgumentTypeError(f"{exc} (grammar: {NORM_GRAMMAR})") from None
    return text


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


_EPILOG = (
    "CSV columns:\n"
    + "\n".join(f"  {cmd:<14} {', '.join(cols)}" for cmd, cols in CSV_COLUMNS.items())
    + "\n\nOutput defaults to CSV, except JSON for " + ", ".join(REPORT_COMMANDS) + "."
    + "\nHCDLAB_THREADS sets the worker count; results do not depend on it."
)


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="hcdlab",
        description="Sub-Finsler Heisenberg group experiments.",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = top.add_subparsers(dest="command", required=True, metavar="command")
    top.commands = {}

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--norm", type=_norm, default="euclidean", help=NORM_GRAMMAR)
    common.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
    common.add_argument("--output", help="file to write (stdout when omitted)")
    common.add_argument("--format", choices=("json", "csv"),
                        help="default: csv for tables, json for reports")

    def add(name, help_, *flags):
        p = sub.add_parser(name, parents=[common], help=help_, epilog=_EPILOG,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        for f in flags:
            f(p)
        top.commands[name] = p
        return p

    samples = lambda p: p.add_argument("--samples", type=int)  # noqa: E731
    voxel = lambda p: p.add_argument("--voxel", type=float)  # noqa: E731
    t = lambda p: p.add_argument("--t", type=float)  # noqa: E731

    def kn(p):
        p.add_argument("--K", type=float, default=0.0)
        p.add_argument("--N", type=float)

    def cov(p):
        p.add_argument("--phi", type=float, default=0.7)
        p.add_argument("--omega", type=float, default=1.3)
        p.add_argument("--r", type=float, default=1.0)

    add("trig-table", "sample cos/sin and the dual correspondence", samples)
    add("geodesic", "sample a geodesic from the identity", samples, t, cov)
    add("distance", "distance from the identity",
        lambda p: p.add_argument("--point", type=_point, required=True))
    add("jacobian-scan", "Jacobian of the exponential map on a dyadic grid", cov)
    add("bm-falsify", "Brunn-Minkowski test on reflected balls", samples, voxel, kn,
        lambda p: p.add_argument("--rho", type=float, default=2.0**-6),
        lambda p: p.add_argument("--control", action="store_true",
                                 help="degenerate control with A = B"))
    add("mcp-falsify", "measure contraction test (witness region for corner norms)",
        samples, voxel, kn, t)
    add("contraction", "volume exponent of geodesic homotheties", samples, voxel)
    add("lemma-check", "area-to-chord ratio monotonicity", samples,
        lambda p: p.add_argument("--profile", choices=sorted(PROFILES), default="parabola"))
    return top


def parse(argv: Sequence[str]) -> RunConfig:
    parser = build_parser()
    ns, extra = parser.parse_known_args(list(argv))
    if extra:
        parser.commands[ns.command].error(f"unrecognized arguments: {' '.join(extra)}")
    ns = vars(ns)
    if ns["format"] is None:
        ns["format"] = "json" if ns["command"] in REPORT_COMMANDS else "csv"
    names = {f.name for f in fields(RunConfig)}
    return RunConfig(**{k: v for k, v in ns.items() if k in names})


def execute(cfg: RunConfig) -> str:
    """Run one command and return the serialized report."""
    payload, rows = HANDLERS[cfg.command](cfg)
    if cfg.format == "csv":
        return csv_text(CSV_COLUMNS[cfg.command], rows)
    return dumps({"command": cfg.command, "config": asdict(cfg), "result": payload})


def run(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse(argv)
    except SystemExit as exc:  # argparse already printed the message
        return 0 if exc.code == 0 else 2
    try:
        text = execute(cfg)
    except NumericFailure as exc:
        print(f"hcdlab: numerical failure: {exc}", file=sys.stderr)
        return 3
    except UsageError as exc:
        print(f"hcdlab: {exc}", file=sys.stderr)
        return 2
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
