"""Mean completion time per policy as load approaches the capacity boundary.

    python scripts/heavy_traffic_sweep.py configs/hotspot_three_level.json \
        --rho 0.8 0.9 0.95 0.97 --horizon 200000 --seeds 1 2 3 --out sweep.csv
"""
import argparse
import statistics
from collections import defaultdict
from pathlib import Path

from locality_sched.config import parse_config
from locality_sched.experiment import rows_to_csv, run_sweep


def main():
    p = argparse.ArgumentParser()
    p.add_argument("config", type=Path)
    p.add_argument("--rho", type=float, nargs="+", default=[0.8, 0.9, 0.95, 0.97])
    p.add_argument("--horizon", type=int, default=200_000)
    p.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", type=Path)
    args = p.parse_args()

    cfg = parse_config(args.config)
    cfg.sweep, cfg.horizon, cfg.seeds, cfg.warmup = args.rho, args.horizon, args.seeds, None
    cfg.validate()
    rows = run_sweep(cfg, jobs=args.jobs)
    if args.out:
        args.out.write_text(rows_to_csv(rows))

    table = defaultdict(list)
    for r in rows:
        table[r["policy"], r["rho"]].append(r["mean_completion_time"])
    policies = sorted({k[0] for k in table})
    print("rho    " + "".join(f"{p:>28}" for p in policies))
    for rho in args.rho:
        cells = []
        for pol in policies:
            v = table[pol, rho]
            se = statistics.stdev(v) / len(v) ** 0.5 if len(v) > 1 else 0.0
            cells.append(f"{statistics.mean(v):>20.3f} ± {se:<5.3f}")
        print(f"{rho:<6} " + "".join(cells))


if __name__ == "__main__":
    main()
