"""Load sweeps relative to the capacity boundary, and CSV reporting."""
from __future__ import annotations

import io
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Iterable, TextIO

from .capacity import Decomposition, solve_capacity_lp
from .config import ConfigError, ExperimentConfig, PolicyConfig
from .policies import Policy, make_policy
from .simulation import run_simulation

COLUMNS = (
    "policy",
    "rho",
    "seed",
    "mean_completion_time",
    "stability_slope",
    "verdict",
    "local_share",
    "rack_share",
    "remote_share",
    "final_total_queue",
)


def build_policy(pc: PolicyConfig, decomposition: Decomposition) -> Policy:
    if pc.kind == "gcmu":
        return make_policy("gcmu", theta=pc.theta, coefficients=pc.coefficients)
    if pc.kind == "static_lp_split":
        return make_policy("static_lp_split", decomposition=decomposition)
    return make_policy(pc.kind)


def _fmt(v) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def _run_one(job) -> dict:
    cfg, pc, rho, scale, seed, decomposition = job
    bundle = run_simulation(
        cfg.topology,
        cfg.service,
        cfg.arrivals.scaled(scale),
        build_policy(pc, decomposition),
        cfg.horizon,
        seed,
        warmup=cfg.effective_warmup,
        trace_stride=cfg.trace_stride,
        arrival_kind=cfg.arrival_kind,
        batch_bound=cfg.batch_bound,
        schedule_order=cfg.schedule_order,
    )
    local, rack, remote = bundle.shares()
    return {
        "policy": pc.name,
        "rho": rho,
        "seed": seed,
        "mean_completion_time": bundle.mean_completion_time,
        "stability_slope": bundle.stability_slope,
        "verdict": bundle.verdict,
        "local_share": local,
        "rack_share": rack,
        "remote_share": remote,
        "final_total_queue": bundle.final_total_queue,
    }


def sweep_jobs(cfg: ExperimentConfig) -> list[tuple]:
    if not cfg.policies:
        raise ConfigError("policy: at least one policy is required to run")
    z, decomposition = solve_capacity_lp(cfg.topology, cfg.service, cfg.arrivals)
    if cfg.sweep is None:
        points = [(z, 1.0)]  # unscaled: report the load fraction of the given rates
    else:
        if z == 0:
            raise ConfigError("sweep: cannot scale an all-zero arrival vector")
        rho_star = 1.0 / z
        points = [(rho, rho * rho_star) for rho in cfg.sweep]
    return [
        (cfg, pc, rho, scale, seed, decomposition)
        for pc in cfg.policies
        for rho, scale in points
        for seed in cfg.seeds
    ]


def run_sweep(cfg: ExperimentConfig, jobs: int = 1) -> list[dict]:
    """One row per (policy, rho, seed), sorted by that key."""
    work = sweep_jobs(cfg)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_one, work))
    else:
        rows = [_run_one(j) for j in work]
    rows.sort(key=lambda r: (r["policy"], r["rho"], r["seed"]))
    return rows


def write_rows(rows: Iterable[dict], out: TextIO, columns=COLUMNS) -> None:
    out.write(",".join(columns) + "\n")
    for r in rows:
        out.write(",".join(_fmt(r[c]) for c in columns) + "\n")


def rows_to_csv(rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    write_rows(rows, buf)
    return buf.getvalue()


def capacity_report(cfg: ExperimentConfig) -> str:
    """Optimal max load, stable scaling, and the decomposition as CSV text."""
    if cfg.arrivals.is_zero():
        raise ConfigError("arrivals: capacity report needs at least one positive rate")
    z, dec = solve_capacity_lp(cfg.topology, cfg.service, cfg.arrivals)
    lines = [f"z_star,{z!r}", f"rho_star,{1.0 / z!r}", "", "task_type,server,rate"]
    for (t, m), v in sorted(dec.split.items()):
        lines.append(f"{t},{m},{v!r}")
    return "\n".join(lines) + "\n"
