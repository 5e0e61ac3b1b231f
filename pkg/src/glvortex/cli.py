"""Command-line entry point: ``glvortex <subcommand> [--config FILE] [--out DIR]``.

Exit codes: 0 ok, 1 check failure, 2 usage or configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

SUBCOMMANDS = ("mesh", "solve-gl", "renorm", "frame-flow", "run", "verify")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="glvortex", description="Ginzburg-Landau vortices and conformal maps")
    parser.add_argument("--threads", type=int, default=None, help="cap BLAS/OpenMP worker threads")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS[:-1]:
        p = sub.add_parser(name)
        p.add_argument("config_file", nargs="?", help="experiment config (JSON)")
        p.add_argument("--config", dest="config_opt", help="experiment config (JSON)")
        p.add_argument("--out", help="artifact directory (default: config 'output' or ./out/<name>)")
        p.add_argument("--threads", type=int, default=None, help=argparse.SUPPRESS)
    p = sub.add_parser("verify")
    p.add_argument("--suite", default="fast", help="fast | full")
    p.add_argument("--out", help="optional JSON report path")
    p.add_argument("--threads", type=int, default=None, help=argparse.SUPPRESS)
    return parser


def _limit_threads(n: int | None):
    if n:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(n)


def _error_report(out: Path | None, exc: Exception):
    report = {"error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(report), file=sys.stderr)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "error.json").write_text(json.dumps(report, indent=1) + "\n")


def _verify(args) -> int:
    from . import acceptance
    from .pipeline import write_json

    if args.suite not in acceptance.SUITES:
        print(f"unknown suite {args.suite!r}; choose from {sorted(acceptance.SUITES)}", file=sys.stderr)
        return 2
    results = acceptance.run_suite(args.suite, echo=print)
    failed = [r.id for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    if args.out:
        write_json(args.out, [{"id": r.id, "name": r.name, "measured": r.measured, "expected": r.expected,
                               "tol": r.tol, "passed": r.passed, "runtime": r.runtime, "details": r.details}
                              for r in results])
    return 1 if failed else 0


def _experiment(args) -> int:
    from . import config as cfgmod
    from . import pipeline
    from .errors import GLVortexError

    path = args.config_opt or args.config_file
    if not path:
        print("a config file is required (positional or --config)", file=sys.stderr)
        return 2
    out = None
    try:
        cfg = cfgmod.load(path)
        out = Path(args.out or cfg.output or Path("out") / cfg.name)
        exp = pipeline.Experiment(cfg, out)
        if args.command == "mesh":
            exp.build_mesh()
        elif args.command == "solve-gl":
            exp.build_mesh()
            exp.solve_gl()
        elif args.command == "renorm":
            exp.renormalized_energy()
        elif args.command == "frame-flow":
            if cfg.flow.get("source") == "gl":
                exp.build_mesh()
                exp.solve_gl()
            exp.frame_flow()
        else:
            pipeline.run(cfg, out)
            print(out / "manifest.json")
            return 0
        exp.write_manifest()
        print(out / "manifest.json")
        return 0
    except GLVortexError as exc:
        _error_report(out, exc)
        return exc.exit_code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _limit_threads(args.threads)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "verify":
        return _verify(args)
    return _experiment(args)


if __name__ == "__main__":
    sys.exit(main())
