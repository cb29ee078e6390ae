"""``trajopt`` command-line entry point.

Exit codes: 0 when every solve converged, 2 when a solve did not converge
or failed, 1 for usage and configuration errors. ``TRAJOPT_LOG`` selects
iteration logging (``quiet``, ``info`` or ``debug``).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import bench
from .plants import PLANTS

EXIT_OK, EXIT_USAGE, EXIT_NOT_CONVERGED = 0, 1, 2

_LOG_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def _configure_logging():
    mode = os.environ.get("TRAJOPT_LOG", "quiet").strip().lower()
    if mode not in _LOG_LEVELS:
        raise bench.ConfigError(f"TRAJOPT_LOG must be one of {sorted(_LOG_LEVELS)}, got {mode!r}")
    logger = logging.getLogger("trajopt")
    logger.setLevel(_LOG_LEVELS[mode])
    if not logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(name)s %(levelname)s %(message)s"))
        logger.addHandler(handler)


def _parser():
    p = argparse.ArgumentParser(prog="trajopt", description="Trajectory optimization benchmarks.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run one solver on one benchmark")
    s.add_argument("--config", help="JSON run config (see 'trajopt init')")
    s.add_argument("--method", choices=bench.METHODS)
    s.add_argument("--problem", choices=sorted(PLANTS))
    s.add_argument("--out", help="output directory (overrides the config)")

    c = sub.add_parser("compare", help="run two configs and compare them")
    c.add_argument("--a", required=True, help="first config file")
    c.add_argument("--b", required=True, help="second config file")
    c.add_argument("--out", help="write the comparison JSON here")

    d = sub.add_parser("plotdata", help="split a run directory into series files")
    d.add_argument("run_dir")

    i = sub.add_parser("init", help="print the default config for a problem")
    i.add_argument("--problem", required=True, choices=sorted(PLANTS))
    i.add_argument("--method", choices=bench.METHODS, default="ddp")
    i.add_argument("--out", help="write the config here instead of stdout")
    return p


def _solve(args) -> int:
    if args.config:
        cfg = bench.RunConfig.load(args.config)
        data = cfg.to_dict()
        if args.problem and args.problem != cfg.problem:
            # switching problems resets the problem-specific sections
            fresh = bench.RunConfig.default(args.problem, args.method or cfg.method).to_dict()
            for key in ("weights", "plant", "bounds", "warm_start"):
                data[key] = fresh[key]
            data["gpm"]["K"] = fresh["gpm"]["K"]
            data["ddp"]["dt"] = fresh["ddp"]["dt"]
            data["problem"] = args.problem
        if args.method:
            data["method"] = args.method
        cfg = bench.RunConfig.from_dict(data)
    elif args.problem:
        cfg = bench.RunConfig.default(args.problem, args.method or "ddp")
    else:
        raise bench.ConfigError("solve needs --config or --problem")
    report = bench.cmd_solve(cfg, args.out)
    summary = {k: report.get(k) for k in ("problem", "method", "status", "final_cost",
                                          "runtime", "iterations")}
    summary["report"] = report["files"]["report"]
    print(json.dumps(summary))
    return EXIT_OK if report.get("converged") else EXIT_NOT_CONVERGED


def _compare(args) -> int:
    comp = bench.cmd_compare(bench.RunConfig.load(args.a), bench.RunConfig.load(args.b))
    text = json.dumps(bench._json_safe(comp), indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    print(bench.comparison_table(comp))
    ok = all(s in ("converged", "optimal") for s in comp["metrics"]["status"])
    return EXIT_OK if ok else EXIT_NOT_CONVERGED


def _plotdata(args) -> int:
    for path in bench.cmd_plotdata(args.run_dir):
        print(path)
    return EXIT_OK


def _init(args) -> int:
    text = bench.RunConfig.default(args.problem, args.method).to_json() + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


_COMMANDS = {"solve": _solve, "compare": _compare, "plotdata": _plotdata, "init": _init}


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        _configure_logging()
        return _COMMANDS[args.command](args)
    except (bench.ConfigError, FileNotFoundError) as err:
        print(f"trajopt: error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
