"""Command line: ``finslerlab {tensors,classify,geodesic,verify} ...``.

Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
3 the chart failed validation at a sample.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .catalog import NAMES, catalog
from .dsl import ChartError, ChartValidationError, ExprSyntaxError, load_chart
from .report import trace_csv
from .suites import DEFAULT_TOLERANCES, RunConfig, run_classify, run_geodesic, run_tensors, run_verify

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CHART = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="finslerlab", description="Randers-Finsler curvature laboratory")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [("tensors", "tensor magnitudes and identity residuals at sampled points"),
                        ("classify", "Riemannian/Berwald/Landsberg/R-flat/rfrak-flat/scalar-flag flags"),
                        ("geodesic", "geodesic, parallel transport and I/J traces"),
                        ("verify", "the full check suite")]:
        s = sub.add_parser(name, help=help_)
        src = s.add_mutually_exclusive_group(required=True)
        src.add_argument("--catalog", choices=NAMES, help="built-in chart")
        src.add_argument("--chart", type=Path, help="chart JSON file")
        s.add_argument("--dim", type=int, help="dimension of a catalog chart")
        s.add_argument("--b", type=_floats, help="b parameter of a catalog chart (comma separated)")
        s.add_argument("--samples", type=int, default=50)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--tol-override", action="append", default=[], metavar="NAME=VAL")
        s.add_argument("--out", type=Path, help="write the report here instead of stdout")
        if name in ("geodesic", "verify"):
            s.add_argument("--t-span", type=_floats, default=[0.0, 3.0], metavar="T0,T1")
            s.add_argument("--x0", type=_floats)
            s.add_argument("--y0", type=_floats)
            s.add_argument("--trace-csv", type=Path, help="trace sidecar (default: next to --out)")
    return p


def _chart(args):
    if args.chart is not None:
        if args.dim is not None or args.b is not None:
            raise ConfigError("--dim and --b apply to catalog charts only")
        chart = load_chart(args.chart)
        return chart, {"file": str(args.chart), "name": chart.name}
    params = {}
    if args.dim is not None:
        params["n"] = args.dim
    if args.b is not None:
        if args.catalog == "euclidean_randers":
            params["b"] = args.b
        elif args.catalog == "parallel_beta_product":
            if len(args.b) != 1:
                raise ConfigError("parallel_beta_product takes a single b value")
            params["b"] = args.b[0]
        else:
            raise ConfigError(f"{args.catalog} has no b parameter")
    chart = catalog(args.catalog, **params)
    return chart, {"catalog": args.catalog, "params": chart.params}


def config_from_args(args) -> RunConfig:
    chart, source = _chart(args)
    if args.samples < 1:
        raise ConfigError("--samples must be positive")
    tols = {}
    for item in args.tol_override:
        name, sep, val = item.partition("=")
        if not sep or name not in DEFAULT_TOLERANCES:
            raise ConfigError(f"bad --tol-override {item!r}; names: {', '.join(sorted(DEFAULT_TOLERANCES))}")
        try:
            tols[name] = float(val)
        except ValueError:
            raise ConfigError(f"bad tolerance value in {item!r}")
    cfg = RunConfig(chart, source, samples=args.samples, seed=args.seed, tolerances=tols)
    if hasattr(args, "t_span"):
        if len(args.t_span) != 2 or not args.t_span[1] > args.t_span[0]:
            raise ConfigError("--t-span needs T0,T1 with T1 > T0")
        cfg.t_span = tuple(args.t_span)
        if (args.x0 is None) != (args.y0 is None):
            raise ConfigError("--x0 and --y0 go together")
        if args.x0 is not None:
            if len(args.x0) != chart.n or len(args.y0) != chart.n:
                raise ConfigError(f"--x0/--y0 need {chart.n} components")
            cfg.x0, cfg.y0 = np.array(args.x0), np.array(args.y0)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (ConfigError, ChartError, ExprSyntaxError, OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    trace = None
    try:
        if args.command == "tensors":
            rep = run_tensors(cfg)
        elif args.command == "classify":
            rep = run_classify(cfg)
        elif args.command == "geodesic":
            rep, trace = run_geodesic(cfg)
        else:
            rep, trace = run_verify(cfg)
    except ChartValidationError as exc:
        print(f"chart validation failed: {exc} (offending sample: {exc.point})", file=sys.stderr)
        return EXIT_CHART
    text = rep.to_json()
    if args.out is not None:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    if trace is not None:
        csv_path = getattr(args, "trace_csv", None)
        if csv_path is None and args.out is not None:
            csv_path = args.out.with_suffix(".trace.csv")
        if csv_path is not None:
            csv_path.write_text(trace_csv(trace))
    for r in rep.records:
        if r.status == "fail":
            print(f"FAIL {r.name}: residual {r.residual:.3g} > tolerance {r.tolerance:.3g}", file=sys.stderr)
    return EXIT_FAIL if rep.failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
