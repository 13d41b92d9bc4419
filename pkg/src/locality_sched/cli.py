"""Command line entry point: ``locality-sched run|capacity <config.json>``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import parse_config
from .experiment import capacity_report, rows_to_csv, run_sweep


def _seeds(text: str) -> list[int]:
    return [int(s) for s in text.split(",") if s.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="locality-sched", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the configured load sweep and write CSV rows")
    run.add_argument("config", type=Path)
    run.add_argument("--horizon", type=int, help="override horizon (slots)")
    run.add_argument("--seeds", type=_seeds, help="comma-separated seeds, e.g. 1,2,3")
    run.add_argument("--out", type=Path, help="CSV output path (default: config output, else stdout)")
    run.add_argument("--jobs", type=int, default=1, help="parallel replications")

    cap = sub.add_parser("capacity", help="solve the capacity LP for the configured arrivals")
    cap.add_argument("config", type=Path)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        if args.command == "capacity":
            sys.stdout.write(capacity_report(cfg))
            return 0
        if args.horizon is not None:
            cfg.horizon = args.horizon
        if args.seeds is not None:
            cfg.seeds = args.seeds
        cfg.validate()
        text = rows_to_csv(run_sweep(cfg, jobs=args.jobs))
        out = args.out or (Path(cfg.output) if cfg.output else None)
        if out is None:
            sys.stdout.write(text)
        else:
            out.write_text(text)
    except (ValueError, RuntimeError, OSError) as exc:
        msg = " ".join(str(exc).split())
        print(f"locality-sched: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
