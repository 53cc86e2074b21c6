"""Command line: ``precheck-sim sweep ...`` and ``precheck-sim trial ...``.

Exit codes: 0 success, 1 configuration error, 2 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys

from ..errors import ConfigError
from .config import AXES, DETECTORS, parse_config, parse_overrides, resolved_banner
from .engine import run_sweep, run_trial, write_csv

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="key=value scenario file")
    p.add_argument("--detector", choices=DETECTORS)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="precheck-sim", description=__doc__.splitlines()[0])
    parser.add_argument("-q", "--quiet", action="store_true", help="suppress the resolved-config banner")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="SCR over one parameter axis, written as CSV")
    _common(sweep)
    sweep.add_argument("--axis", required=True, choices=sorted(AXES))
    sweep.add_argument("--values", required=True, help="comma-separated axis values")
    sweep.add_argument("--out", required=True, metavar="PATH")
    sweep.add_argument("--workers", type=int, default=1)

    trial = sub.add_parser("trial", help="run one trial and print its message trace")
    _common(trial)
    trial.add_argument("--index", type=int, default=0, help="trial index")
    return parser


def _resolve(args):
    overrides = parse_overrides(args.overrides)
    for key, value in (("detector", args.detector), ("trials", args.trials), ("base_seed", args.seed)):
        if value is not None:
            overrides[key] = str(value)
    return parse_config(args.config, overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _resolve(args)
        if not args.quiet:
            print(resolved_banner(cfg), file=sys.stderr)
        if args.command == "sweep":
            values = [v for v in args.values.split(",") if v.strip()]
            results = run_sweep(cfg, args.axis, values, workers=args.workers)
            if not results:
                raise ConfigError("every sweep value was rejected", key="values")
            write_csv(results, args.out)
            for r in results:
                lo, hi = r.ci95
                print(f"{r.scheme} T={r.table_len} L={r.seq_len} snr={r.snr_db:g} "
                      f"P_fbs={r.fbs_power_dbm:.4g} scr={r.scr:.5f} [{lo:.5f}, {hi:.5f}]")
        else:
            res = run_trial(cfg, args.index, trace=True)
            print("time,sender,receiver,kind")
            print("\n".join(res.trace))
            status = res.error or res.outcome.value
            print(f"# outcome={status} ber_legit={res.ber_legit:.4g} ber_fbs={res.ber_fbs:.4g} "
                  f"rss_target={res.rss_target_dbm:.2f} rss_fbs={res.rss_fbs_dbm:.2f} true_start={res.true_start}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
