"""Paired-by-seed delay comparison of two policies at one load.

Prints per-seed mean completion times and how often the first policy is at
least as fast as the second.

    python scripts/paired_delay_comparison.py configs/hotspot_three_level.json \
        weighted_workload_priority jsq_mw_3 --rho 0.97 --horizon 500000 --seeds 10
"""
import argparse
import statistics
from pathlib import Path

from locality_sched.capacity import solve_capacity_lp
from locality_sched.config import PolicyConfig, parse_config
from locality_sched.experiment import build_policy
from locality_sched.simulation import run_simulation


def main():
    p = argparse.ArgumentParser()
    p.add_argument("config", type=Path)
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--rho", type=float, default=0.97)
    p.add_argument("--horizon", type=int, default=500_000)
    p.add_argument("--seeds", type=int, default=10)
    args = p.parse_args()

    cfg = parse_config(args.config)
    z, dec = solve_capacity_lp(cfg.topology, cfg.service, cfg.arrivals)
    arr = cfg.arrivals.scaled(args.rho / z)
    results = {}
    for kind in (args.first, args.second):
        results[kind] = [
            run_simulation(
                cfg.topology,
                cfg.service,
                arr,
                build_policy(PolicyConfig(kind, kind), dec),
                args.horizon,
                seed,
                arrival_kind=cfg.arrival_kind,
                batch_bound=cfg.batch_bound,
            ).mean_completion_time
            for seed in range(1, args.seeds + 1)
        ]
        print(kind, " ".join(f"{v:.3f}" for v in results[kind]), flush=True)
    a, b = results[args.first], results[args.second]
    wins = sum(x <= y for x, y in zip(a, b))
    print(f"{args.first} <= {args.second} on {wins}/{len(a)} seeds")
    print(f"means: {statistics.mean(a):.3f} vs {statistics.mean(b):.3f}")


if __name__ == "__main__":
    main()
