"""Command line entry point: ``kernelquant {check,geometry,quantize,example,all}``."""
from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load_config
from .kernel_core import KernelError
from . import runners


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kernelquant", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML or JSON experiment file")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--tol-scale", type=float, default=None, dest="tol_scale")
    common.add_argument("--report", help="write the JSON report here")
    common.add_argument("--csv", help="write a flat residual table here")
    common.add_argument("-q", "--quiet", action="store_true", help="only print the verdict")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("check", "geometry", "quantize", "all"):
        sub.add_parser(name, parents=[common])
    ex = sub.add_parser("example", parents=[common])
    ex.add_argument("name", choices=["bidisc", "moment"])
    return parser


def run(args: argparse.Namespace):
    cfg = load_config(args.config, seed=args.seed, tol_scale=args.tol_scale,
                      report=args.report, csv=args.csv)
    if args.command == "check":
        return runners.run_check(cfg), cfg
    if args.command == "geometry":
        return runners.run_geometry(cfg), cfg
    if args.command == "quantize":
        return runners.run_quantize(cfg), cfg
    if args.command == "example":
        return runners.run_example(args.name, cfg), cfg
    return runners.run_all(cfg), cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report, cfg = run(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except KernelError as exc:
        # e.g. geometry requested on a tabulated kernel
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    if cfg.report:
        report.write(cfg.report, cfg.csv)
    elif cfg.csv:
        with open(cfg.csv, "w") as fh:
            fh.write(report.to_csv())
    if not args.quiet:
        print("\n".join(report.summary_lines()))
    n_fail = sum(not r.passed for r in report.checks)
    n_flag = sum(r.kind == "discrepancy" for r in report.records)
    verdict = "PASS" if report.passed else "FAIL"
    print(f"{verdict}: {len(report.checks)} checks, {n_fail} failed, {n_flag} discrepancies flagged")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
