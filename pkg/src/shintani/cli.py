"""Command-line interface.

Subcommands: ``field``, ``invariant``, ``dilog``, ``verify``, ``scan``.
Defaults can be overridden with ``SHINTANI_*`` environment variables
(``PRECISION``, ``N_MIN``, ``N_MAX``, ``TOL``, ``CAP``, ``JOBS``,
``FORMAT``, ``CACHE``). Exit codes: 0 success or pass, 1 verification
failure, 2 usage or calibration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import gmpy2

from . import records as rec
from .errors import CalibrationError, DegenerateArgumentError, DomainError, ShintaniError
from .exact_core import ReducedFraction
from .invariants import (
    DEFAULT_CAP,
    RouteEstimate,
    RouteId,
    VerificationReport,
    calibrate_convention,
    route_estimate,
    verify,
)
from .precision import PrecisionContext, format_real
from .quadratic_field import FieldData, PrincipalConductor, cone_pair, conductor, enumerate_conductors, solve_field
from .special_functions import (
    HalfPlanePoint,
    cyclic_dilog_abs,
    cyclic_dilog_complex,
    log_double_sine,
    qpoch_log_abs,
    tau,
)

log = logging.getLogger("shintani")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _env(name: str, default):
    raw = os.environ.get(f"SHINTANI_{name}")
    if raw is None:
        return default
    return type(default)(raw) if default is not None else raw


@dataclass(frozen=True)
class RunConfig:
    d: int
    u: int
    v: int
    routes: tuple[RouteId, ...]
    n_min: int = 4
    n_max: int = 12
    precision_bits: int = 256
    tolerance: float = 1e-3
    output_format: str = "table"
    cache_path: Path | None = None
    feasibility_cap: int = DEFAULT_CAP
    jobs: int = 1
    aitken: bool = False

    @property
    def n_range(self) -> range:
        return range(self.n_min, self.n_max + 1)

    @property
    def ctx(self) -> PrecisionContext:
        return PrecisionContext(self.precision_bits)


def _parse_routes(text: str) -> tuple[RouteId, ...]:
    parts = [p for p in text.split(",") if p.strip()]
    return tuple(RouteId.parse(p) for p in parts)


def _add_run_options(p: argparse.ArgumentParser, default_routes: str, conductor_required: bool = True) -> None:
    p.add_argument("--d", type=int, required=True)
    if conductor_required:
        p.add_argument("--u", type=int, required=True)
        p.add_argument("--v", type=int, default=0)
    p.add_argument("--routes", default=default_routes, help="comma-separated subset of r1,r2,r3,r4")
    p.add_argument("--n-min", type=int, default=_env("N_MIN", 4))
    p.add_argument("--n-max", type=int, default=_env("N_MAX", 12))
    p.add_argument("--precision", type=int, default=_env("PRECISION", 256), help="bits")
    p.add_argument("--tol", type=float, default=_env("TOL", 1e-3))
    p.add_argument("--format", choices=("table", "json", "csv"), default=_env("FORMAT", "table"))
    p.add_argument("--cache", type=Path, default=_env("CACHE", None))
    p.add_argument("--cap", type=int, default=_env("CAP", DEFAULT_CAP), help="feasibility cap on T_n(a)")
    p.add_argument("--jobs", type=int, default=_env("JOBS", 1))
    p.add_argument("--aitken", action="store_true", help="Aitken-accelerate limit estimates")


def _config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        d=args.d,
        u=getattr(args, "u", 0),
        v=getattr(args, "v", 0),
        routes=_parse_routes(args.routes),
        n_min=args.n_min,
        n_max=args.n_max,
        precision_bits=args.precision,
        tolerance=args.tol,
        output_format=args.format,
        cache_path=Path(args.cache) if args.cache else None,
        feasibility_cap=args.cap,
        jobs=args.jobs,
        aitken=args.aitken,
    )


# --- records -------------------------------------------------------------------


def _base(fld: FieldData, cond: PrincipalConductor, cfg: RunConfig) -> dict:
    try:
        g = cond.g
        pair = cone_pair(fld, cond)
        x, y = str(pair.x), str(pair.y)
    except ShintaniError:
        g, x, y = None, None, None
    return dict(d=fld.d, a=fld.a, b=fld.b, u=cond.u, v=cond.v, norm=cond.norm, g=g, x=x, y=y,
                precision_bits=cfg.precision_bits)


def _fmt(value, cfg: RunConfig) -> str:
    return format_real(value, cfg.precision_bits)


def _route_records(est: RouteEstimate, base: dict, cfg: RunConfig, stamp: str) -> list[rec.ResultRecord]:
    route = est.route.value
    out = []
    slack = cfg.ctx.slack()
    for seq in est.sequences:
        label = f"{route}:{seq.component}"
        for s in seq.samples:
            err = _fmt(s.delta, cfg) if s.delta is not None else None
            out.append(rec.ResultRecord(**base, route=label, n=s.n, value=_fmt(s.value, cfg),
                                        error_indicator=err, timestamp=stamp))
        for n in seq.degenerate:
            out.append(rec.ResultRecord(**base, route=label, n=n, value=None, error_indicator=None,
                                        timestamp=stamp, status="degenerate"))
    parts = [("x1", est.x1.estimate, est.x1.error_indicator), ("x2", est.x2.estimate, est.x2.error_indicator)]
    with cfg.ctx.mpfr_context():
        x_err = est.x1.error_indicator * est.x2.estimate + est.x2.error_indicator * est.x1.estimate
    parts.append(("x", est.x, x_err))
    for comp, value, err in parts:
        err = max(err, slack)
        out.append(rec.ResultRecord(**base, route=f"{route}:{comp}", n="estimate", value=_fmt(value, cfg),
                                    error_indicator=_fmt(err, cfg), timestamp=stamp))
    return out


def _error_record(route: RouteId, base: dict, message: str, stamp: str) -> rec.ResultRecord:
    return rec.ResultRecord(**base, route=route.value, n="estimate", value=None, error_indicator=None,
                            timestamp=stamp, status=f"error: {message}")


def compute_records(fld: FieldData, cond: PrincipalConductor, cfg: RunConfig) -> list[rec.ResultRecord]:
    """Per-n samples and limit estimates for every configured route."""
    ctx = cfg.ctx
    base = _base(fld, cond, cfg)
    stamp = rec.now()
    out: list[rec.ResultRecord] = []
    for route in cfg.routes:
        try:
            conv = None
            if route is RouteId.R1:
                conv = calibrate_convention(fld, cond, ctx, cfg.tolerance, cfg.n_range, cfg.feasibility_cap, cfg.jobs)
            est = route_estimate(route, fld, cond, cfg.n_range, ctx, conv, cfg.feasibility_cap, cfg.jobs, cfg.aitken)
        except ShintaniError as exc:
            log.warning("route %s unavailable for %s: %s", route.value, cond, exc)
            out.append(_error_record(route, base, str(exc), stamp))
            continue
        out.extend(_route_records(est, base, cfg, stamp))
    return rec.sort_records(out)


def _render_records(records: list[rec.ResultRecord], fmt: str) -> str:
    if fmt == "json":
        return rec.to_json(records)
    if fmt == "csv":
        return rec.to_csv(records)
    lines = [f"{'route':<8} {'n':>8}  {'value':<24} {'error':<10} status"]
    for r in records:
        value = f"{float(r.value):.17g}" if r.value else "-"
        err = f"{float(r.error_indicator):.3g}" if r.error_indicator else "-"
        lines.append(f"{r.route:<8} {str(r.n):>8}  {value:<24} {err:<10} {r.status}")
    return "\n".join(lines) + "\n"


# --- commands ------------------------------------------------------------------


def cmd_field(args: argparse.Namespace) -> int:
    fld = solve_field(args.d)
    print(fld.describe())
    return EXIT_OK


def cmd_invariant(args: argparse.Namespace) -> int:
    cfg = _config(args)
    fld = solve_field(cfg.d)
    cond = conductor(fld, cfg.u, cfg.v)
    records = compute_records(fld, cond, cfg)
    sys.stdout.write(_render_records(records, cfg.output_format))
    if cfg.cache_path:
        rec.append_jsonl(cfg.cache_path, records)
    return EXIT_OK


def report_to_dict(rep: VerificationReport) -> dict:
    p = rep.p_bits

    def f(v):
        return format_real(v, p)

    routes = {}
    for rid, est in rep.routes.items():
        routes[rid.value] = {
            "x1": f(est.x1.estimate), "x1_error": f(est.x1.error_indicator), "x1_method": est.x1.method,
            "x2": f(est.x2.estimate), "x2_error": f(est.x2.error_indicator), "x2_method": est.x2.method,
            "x": f(est.x),
            "degenerate_n": sorted({n for s in est.sequences for n in s.degenerate}),
        }
    return {
        "d": rep.field.d, "a": rep.field.a, "b": rep.field.b,
        "u": rep.conductor.u, "v": rep.conductor.v, "norm": rep.conductor.norm,
        "g": rep.g, "x": str(rep.pair.x), "y": str(rep.pair.y),
        "convention": rep.convention.value if rep.convention else None,
        "precision": p,
        "tolerance": rep.tolerance,
        "routes": routes,
        "errors": {k.value: v for k, v in rep.errors.items()},
        "deviations": [
            {"routes": f"{dv.first.value}-{dv.second.value}", "component": dv.component, "value": f(dv.value)}
            for dv in rep.deviations
        ],
        "calibration_error": rep.calibration_error,
        "passed": rep.passed,
    }


def _render_report(rep: VerificationReport) -> str:
    def short(v) -> str:
        return f"{float(v):.15g}"

    lines = [
        f"field      d={rep.field.d} {rep.field.describe()}",
        f"conductor  {rep.conductor}  norm={rep.conductor.norm}  g={rep.g}",
        f"cone pair  {rep.pair}",
        f"orbit      {rep.convention.value if rep.convention else '-'}",
        "",
        f"{'route':<6} {'X1':<20} {'X2':<20} {'X':<20} indicator",
    ]
    for rid, est in sorted(rep.routes.items(), key=lambda kv: kv[0].value):
        ind = max(est.x1.error_indicator, est.x2.error_indicator)
        lines.append(f"{rid.value:<6} {short(est.x1.estimate):<20} {short(est.x2.estimate):<20} "
                     f"{short(est.x):<20} {short(ind)}")
    for rid, msg in sorted(rep.errors.items(), key=lambda kv: kv[0].value):
        lines.append(f"{rid.value:<6} unavailable: {msg}")
    worst = rep.max_deviation()
    lines.append("")
    lines.append(f"max deviation {short(worst) if worst is not None else '-'}  tolerance {rep.tolerance:g}")
    lines.append("PASS" if rep.passed else "FAIL")
    return "\n".join(lines) + "\n"


def cmd_verify(args: argparse.Namespace) -> int:
    cfg = _config(args)
    fld = solve_field(cfg.d)
    cond = conductor(fld, cfg.u, cfg.v)
    rep = verify(fld, cond, cfg.n_range, cfg.ctx, cfg.tolerance, cfg.routes, cfg.feasibility_cap, cfg.jobs, cfg.aitken)
    if cfg.output_format == "json":
        sys.stdout.write(json.dumps(report_to_dict(rep), indent=2, ensure_ascii=False) + "\n")
    else:
        sys.stdout.write(_render_report(rep))
    if rep.calibration_error:
        print(f"error: {rep.calibration_error}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_scan(args: argparse.Namespace) -> int:
    cfg = _config(args)
    if args.norm_max < 2:
        raise DomainError("--norm-max must be at least 2")
    fld = solve_field(cfg.d)
    done = set()
    if cfg.cache_path:
        done = {r.conductor_key for r in rec.read_jsonl(cfg.cache_path)}
    for cond in enumerate_conductors(fld, args.norm_max):
        todo = [r for r in cfg.routes if (fld.d, cond.u, cond.v, r.value, cfg.precision_bits) not in done]
        if not todo:
            continue
        sub = RunConfig(**{**cfg.__dict__, "u": cond.u, "v": cond.v, "routes": tuple(todo)})
        records = compute_records(fld, cond, sub)
        for r in records:
            sys.stdout.write(rec.to_jsonl_line(r))
        if cfg.cache_path:
            rec.append_jsonl(cfg.cache_path, records)
    return EXIT_OK


def _fraction(text: str) -> Fraction:
    return Fraction(text)


def cmd_dilog(args: argparse.Namespace) -> int:
    ctx = PrecisionContext(args.precision)
    x, y = _fraction(args.x), _fraction(args.y)
    if args.function in ("cyclic", "cyclic-complex"):
        f = ReducedFraction.from_fraction(Fraction(args.m, args.n))
        if args.function == "cyclic":
            res = cyclic_dilog_abs(f, x, y, ctx)
            print("0" if res.is_zero else format_real(res.value, ctx.p_bits))
        else:
            try:
                z = cyclic_dilog_complex(f, x, y, ctx)
            except DegenerateArgumentError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_USAGE
            print(f"{z.real} {z.imag}")
        return EXIT_OK
    if args.function == "qpoch":
        if args.index is not None:
            if args.d is None:
                raise DomainError("--index needs --d")
            point = tau(solve_field(args.d), args.index, ctx)
        else:
            with ctx.mpfr_context():
                point = HalfPlanePoint(_fraction(args.tau_re), gmpy2.mpfr(args.tau_im))
        log_abs = qpoch_log_abs(x, y, point, ctx)
        with ctx.mpfr_context():
            print(format_real(gmpy2.exp(log_abs), ctx.p_bits))
        return EXIT_OK
    omega = args.omega
    if omega in ("eps", "eps'"):
        if args.d is None:
            raise DomainError("--omega eps needs --d")
        fld = solve_field(args.d)
        with ctx.mpfr_context(16):
            s = fld.a + fld.b * gmpy2.sqrt(gmpy2.mpfr(fld.d))
            omega = s / 2 if args.omega == "eps" else 2 / s
    log_s, err = log_double_sine(omega, args.z, ctx)
    with ctx.mpfr_context():
        print(format_real(gmpy2.exp(log_s), ctx.p_bits))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shintani", description="Shintani invariants of real quadratic fields")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("field", help="fundamental unit data (a, b) for Q(sqrt d)")
    p.add_argument("--d", type=int, required=True)
    p.set_defaults(func=cmd_field)

    p = sub.add_parser("invariant", help="per-n samples and limit estimates")
    _add_run_options(p, "r1,r2,r3,r4")
    p.set_defaults(func=cmd_invariant)

    p = sub.add_parser("verify", help="cross-route verification")
    _add_run_options(p, "r1,r2,r3,r4")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("scan", help="enumerate conductors and append results to a JSONL cache")
    _add_run_options(p, "r1", conductor_required=False)
    p.add_argument("--norm-max", type=int, required=True)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("dilog", help="evaluate a single special function")
    p.add_argument("function", choices=("cyclic", "cyclic-complex", "qpoch", "double-sine"))
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--x", default="0")
    p.add_argument("--y", default="0")
    p.add_argument("--d", type=int)
    p.add_argument("--index", type=int, help="geodesic index for qpoch")
    p.add_argument("--tau-re", default="0")
    p.add_argument("--tau-im", default="1")
    p.add_argument("--omega", default="1", help="a number, or eps / eps' with --d")
    p.add_argument("--z", default="1")
    p.add_argument("--precision", type=int, default=_env("PRECISION", 256))
    p.set_defaults(func=cmd_dilog)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except CalibrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ShintaniError, ValueError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
