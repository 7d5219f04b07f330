"""Command-line entry point: synth, density, backtest, report, coeffs.

Exit codes: 0 success, 1 I/O or data problems, 2 validation problems.
Set ``CS_LOG`` (debug/info/warning/error) to control verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import market_data, sde, wavelets
from .backtest import run_backtest
from .config import load_config
from .errors import DataError, ValidationError
from .report import read_statement, render_report, stats_to_dict, summarize

log = logging.getLogger("wavefx")


def _setup_logging() -> None:
    level = os.environ.get("CS_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(message)s")


def _add_synth(sub) -> None:
    p = sub.add_parser("synth", help="generate a synthetic quote CSV")
    p.add_argument("--kind", required=True, choices=market_data.SYNTHETIC_KINDS)
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--symbol", default="synthetic")
    p.add_argument("--timeframe", type=int, default=5)
    p.add_argument("--start", type=int, default=0)
    p.add_argument(
        "--param",
        action="append",
        default=[],
        metavar="NAME=VALUE",
        help="process parameter (theta, sigma, mu, r, dt, y0, spread)",
    )


def _cmd_synth(args) -> int:
    params = {}
    for item in args.param:
        name, _, value = item.partition("=")
        if not _:
            raise ValidationError(f"--param needs NAME=VALUE, got {item!r}")
        params[name.strip()] = float(value)
    spec = market_data.SyntheticSpec(
        args.kind, params, args.length, args.seed,
        symbol=args.symbol, timeframe=args.timeframe, start_time=args.start,
    )
    series = market_data.generate(spec)
    market_data.write_csv(series, args.out)
    log.info("wrote %d bars to %s", len(series), args.out)
    return 0


def _add_density(sub) -> None:
    p = sub.add_parser("density", help="estimate drift/diffusion and stationary density")
    p.add_argument("--input", required=True, help="quote CSV")
    p.add_argument("--symbol", default="input")
    p.add_argument("--timeframe", type=int, default=5)
    p.add_argument("--scale", type=int, default=1)
    p.add_argument("--family", default="haar", choices=sorted(wavelets.FAMILIES))
    p.add_argument("--bins", type=int, default=sde.DEFAULT_BINS)
    p.add_argument("--order-f", type=int, default=sde.DEFAULT_ORDER_F)
    p.add_argument("--order-g2", type=int, default=sde.DEFAULT_ORDER_G2)
    p.add_argument("--dtau", type=float, default=1.0)
    p.add_argument("--grid-points", type=int, default=sde.DEFAULT_GRID_POINTS)
    p.add_argument("--raw", action="store_true", help="estimate on raw closes, not coefficients")
    p.add_argument("--out-dir", default=".")


def _cmd_density(args) -> int:
    series = market_data.load_history(args.input, args.symbol, args.timeframe)
    if args.raw:
        values = series.close
    else:
        values = wavelets.decompose(series, args.scale, wavelets.family(args.family))[-1].values
    pairs = wavelets.increments(values)
    fit = sde.estimate_fg(pairs, args.dtau, args.bins, args.order_f, args.order_g2)
    density = sde.stationary_density(fit, args.grid_points)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "fit.csv", "w", newline="\n") as fh:
        fh.write("bin_center,count,F_hat,G2_hat\n")
        for c, n, f, g2 in zip(fit.bin_centers, fit.bin_counts, fit.bin_f, fit.bin_g2):
            fh.write(f"{c:.9g},{n},{f:.9g},{g2:.9g}\n")
    with open(out / "density.csv", "w", newline="\n") as fh:
        fh.write("y,pdf,W\n")
        for y, p, w in zip(density.grid, density.pdf, density.log_weight):
            fh.write(f"{y:.9g},{p:.9g},{w:.9g}\n")
    print(f"P_s = {sde.prob_nonpositive(density):.6f}")
    return 0


def _add_coeffs(sub) -> None:
    p = sub.add_parser("coeffs", help="dump wavelet detail coefficients as CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--symbol", default="input")
    p.add_argument("--timeframe", type=int, default=5)
    p.add_argument("--levels", type=int, default=1)
    p.add_argument("--family", default="haar", choices=sorted(wavelets.FAMILIES))
    p.add_argument("--out", default="-")


def _cmd_coeffs(args) -> int:
    series = market_data.load_history(args.input, args.symbol, args.timeframe)
    all_coeffs = wavelets.decompose(series, args.levels, wavelets.family(args.family))
    lines = ["scale,tau,value"]
    for cs in all_coeffs:
        for tau, v in zip(cs.shifts, cs.values):
            lines.append(f"{cs.scale},{tau},{v:.9g}")
    text = "\n".join(lines) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
    return 0


def _add_backtest(sub) -> None:
    p = sub.add_parser("backtest", help="run a configured multi-symbol backtest")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out-dir", default=".")


def _cmd_backtest(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    result = run_backtest(cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "statement.txt").write_text(result.statement_text + "\n")
    (out / "report.txt").write_text(result.report_text + "\n")
    (out / "decisions.csv").write_text(result.decision_journal)
    (out / "allocations.csv").write_text(result.allocation_journal)
    (out / "summary.json").write_text(json.dumps(result.stats_dict, indent=2) + "\n")
    log.info("final equity %.2f", result.final_equity)
    return 0


def _add_report(sub) -> None:
    p = sub.add_parser("report", help="summarize an account statement")
    p.add_argument("statement")
    p.add_argument(
        "--pl-convention",
        default="profit_plus_swap",
        choices=("profit_only", "profit_plus_swap"),
    )
    p.add_argument("--out-dir", default=None)


def _cmd_report(args) -> int:
    st = read_statement(args.statement)
    stats = summarize(st.records, st.open_trades, st.deposit, args.pl_convention, margin=st.margin)
    text = render_report(stats, with_convention=True)
    sys.stdout.write(text + "\n")
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(text + "\n")
        (out / "summary.json").write_text(json.dumps(stats_to_dict(stats), indent=2) + "\n")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "density": _cmd_density,
    "coeffs": _cmd_coeffs,
    "backtest": _cmd_backtest,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    _setup_logging()
    parser = argparse.ArgumentParser(prog="wavefx", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    _add_synth(sub)
    _add_density(sub)
    _add_coeffs(sub)
    _add_backtest(sub)
    _add_report(sub)
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (FileNotFoundError, OSError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
