"""Command line front end.

Subcommands::

    spectral-pivot dist (pdf|cdf|quantile|sample) --alpha A --beta B ...
    spectral-pivot simulate --config run.json [--out report.json]
    spectral-pivot verify --config run.json

``simulate`` writes the verification report as JSON plus a per-trial CSV
next to it; ``verify`` does the same and gates the exit code on the checks.

Exit codes: 0 success (all checks pass for ``verify``), 1 check failure,
2 configuration error, 3 I/O failure.  ``SPECTRAL_PIVOT_WORKERS`` overrides
the configured worker count.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from typing import Optional

import numpy as np

from .config import ConfigError, RunConfig, load_run_config
from .limits import CauchyMixture
from .simulation import MonteCarloReport, verify

__all__ = ["main"]

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 3

_CSV_FIELDS = [
    "trial_index",
    "b_hat",
    "b_tilde",
    "denom",
    "proj_error_sq",
    "op_norm_error",
    "pivot_bias",
    "pivot_proj",
    "normalized_proj_stat",
    "degenerate",
    "separated",
]


def _fmt(value: float) -> str:
    return "%.17g" % value


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectral-pivot",
        description="PCA spectral-projector inference and Monte Carlo verification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    dist = sub.add_parser("dist", help="query the Cauchy-mixture pivot limit law")
    dist.add_argument("query", choices=["pdf", "cdf", "quantile", "sample"])
    dist.add_argument("--alpha", type=float, required=True)
    dist.add_argument("--beta", type=float, required=True)
    dist.add_argument("--x", type=float, action="append", help="evaluation point (repeatable)")
    dist.add_argument("--p", type=float, action="append", help="probability in (0,1) (repeatable)")
    dist.add_argument("--count", type=int, default=1, help="number of draws for sample")
    dist.add_argument("--seed", type=int, default=0, help="sampler seed")
    dist.add_argument(
        "--method",
        choices=["direct", "ratio"],
        default="direct",
        help="sampler construction (mixture draw or ratio of normals)",
    )

    sim = sub.add_parser("simulate", help="run the harness and write a report")
    sim.add_argument("--config", required=True)
    sim.add_argument("--out", help="report path (overrides output_path in the config)")

    ver = sub.add_parser("verify", help="run the harness and gate on the checks")
    ver.add_argument("--config", required=True)
    return parser


def _report_json(report: MonteCarloReport) -> str:
    return json.dumps(report.to_dict(), indent=2, allow_nan=False) + "\n"


def _trials_csv(outcomes) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_CSV_FIELDS)
    for o in outcomes:
        row = []
        for name in _CSV_FIELDS:
            value = getattr(o, name)
            if value is None:
                row.append("")
            elif isinstance(value, bool):
                row.append(str(int(value)))
            elif isinstance(value, float):
                row.append(_fmt(value))
            else:
                row.append(str(value))
        writer.writerow(row)
    return buf.getvalue()


def _workers(run_cfg: RunConfig) -> int:
    env = os.environ.get("SPECTRAL_PIVOT_WORKERS")
    if env is not None:
        try:
            value = int(env)
        except ValueError as exc:
            raise ConfigError(
                f"SPECTRAL_PIVOT_WORKERS must be an integer, got {env!r}"
            ) from exc
        if value < 1:
            raise ConfigError("SPECTRAL_PIVOT_WORKERS must be >= 1")
        return value
    return run_cfg.workers


def _run_and_write(config_path: str, out_override: Optional[str]) -> MonteCarloReport:
    run_cfg = load_run_config(config_path)
    workers = _workers(run_cfg)
    report, outcomes = verify(
        run_cfg.trial,
        thresholds=run_cfg.thresholds,
        workers=workers,
        return_outcomes=True,
    )
    out_path = out_override or run_cfg.output_path
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(_report_json(report))
        csv_path = os.path.splitext(out_path)[0] + ".trials.csv"
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(_trials_csv(outcomes))
    else:
        sys.stdout.write(_report_json(report))
    return report


def _cmd_dist(args: argparse.Namespace) -> int:
    dist = CauchyMixture(alpha=args.alpha, beta=args.beta)
    lines = []
    if args.query in ("pdf", "cdf"):
        if not args.x:
            raise ValueError(f"{args.query} requires at least one --x")
        fn = dist.pdf if args.query == "pdf" else dist.cdf
        lines = [_fmt(fn(x)) for x in args.x]
    elif args.query == "quantile":
        if not args.p:
            raise ValueError("quantile requires at least one --p")
        lines = [_fmt(dist.quantile(p)) for p in args.p]
    else:
        if args.count < 1:
            raise ValueError("--count must be >= 1")
        rng = np.random.default_rng(args.seed)
        draw = dist.sample_direct if args.method == "direct" else dist.sample_ratio
        lines = [_fmt(v) for v in draw(rng, size=args.count)]
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def main(argv: Optional[list] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "dist":
            return _cmd_dist(args)
        if args.command == "simulate":
            _run_and_write(args.config, args.out)
            return EXIT_OK
        report = _run_and_write(args.config, None)
        return EXIT_OK if report.all_pass else EXIT_CHECK_FAILED
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
