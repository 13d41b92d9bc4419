"""Service model, arrival vectors and the capacity-region load decomposition LP.

For an arrival vector lam, ``solve_capacity_lp`` finds the split of every
type's rate over the servers that minimizes the largest per-server load

    load_m = sum_local lam_Lm / alpha + sum_rack lam_Lm / beta + sum_remote lam_Lm / gamma.

The vector lies in the capacity region iff that optimum is strictly below 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

import numpy as np

from .simplex import LPError, solve_lp
from .topology import (
    ClusterTopology,
    LocalityClass,
    TaskType,
    TopologyError,
    check_task_type,
    classify_locality,
)

EPS_STRICT = 1e-9


class ServiceModelError(ValueError):
    pass


@dataclass(frozen=True)
class ServiceModel:
    """Per-slot completion probabilities for local, rack-local and remote service.

    ``beta=None`` is the two-level model; it may only be used on topologies
    where every rack holds one server.
    """

    alpha: float
    gamma: float
    beta: Optional[float] = None

    def __post_init__(self):
        a, b, g = self.alpha, self.beta, self.gamma
        if not 0 < g <= 1 or not 0 < a <= 1:
            raise ServiceModelError(f"rates must lie in (0, 1]: alpha={a}, gamma={g}")
        if b is None:
            if not a > g:
                raise ServiceModelError(f"need alpha > gamma, got alpha={a}, gamma={g}")
        elif not (a > b > g):
            raise ServiceModelError(
                f"need 1 >= alpha > beta > gamma > 0, got alpha={a}, beta={b}, gamma={g}"
            )

    @property
    def two_level(self) -> bool:
        return self.beta is None

    def rate(self, cls: LocalityClass) -> float:
        if cls == LocalityClass.LOCAL:
            return self.alpha
        if cls == LocalityClass.REMOTE:
            return self.gamma
        if self.beta is None:
            raise ServiceModelError("rack-local service requested from a two-level service model")
        return self.beta

    def rates(self) -> tuple[float, float, float]:
        """(alpha, beta, gamma); beta is reported as nan for two-level models."""
        return (self.alpha, float("nan") if self.beta is None else self.beta, self.gamma)

    def check_topology(self, topo: ClusterTopology) -> None:
        if self.two_level and not topo.is_two_level:
            raise ServiceModelError("two-level service model (no beta) needs singleton racks")

    @property
    def steal_threshold(self) -> Fraction:
        """alpha / gamma as an exact rational (from the decimal repr of each rate)."""
        return Fraction(repr(self.alpha)) / Fraction(repr(self.gamma))


@dataclass(frozen=True)
class ArrivalVector:
    rates: Mapping[TaskType, float]

    def __post_init__(self):
        clean = {}
        for t, r in self.rates.items():
            r = float(r)
            if not r >= 0:
                raise ValueError(f"arrival rate for type {t} must be >= 0, got {r}")
            clean[t] = r
        object.__setattr__(self, "rates", dict(sorted(clean.items())))

    @property
    def types(self) -> list[TaskType]:
        return list(self.rates)

    @property
    def total(self) -> float:
        return sum(self.rates.values())

    def scaled(self, c: float) -> "ArrivalVector":
        return ArrivalVector({t: c * r for t, r in self.rates.items()})

    def is_zero(self) -> bool:
        return all(r == 0 for r in self.rates.values())


@dataclass
class Decomposition:
    split: dict[tuple[TaskType, int], float]
    per_server_load: dict[int, float] = field(default_factory=dict)

    def type_total(self, t: TaskType) -> float:
        return sum(v for (u, _), v in self.split.items() if u == t)

    def server_share(self, t: TaskType) -> dict[int, float]:
        return {m: v for (u, m), v in self.split.items() if u == t}


def server_loads(
    topo: ClusterTopology, svc: ServiceModel, split: Mapping[tuple[TaskType, int], float]
) -> dict[int, float]:
    loads = {m: 0.0 for m in topo.servers}
    for (t, m), v in split.items():
        loads[m] += v / svc.rate(classify_locality(topo, t, m))
    return loads


def _check_inputs(topo: ClusterTopology, svc: ServiceModel, arr: ArrivalVector) -> None:
    svc.check_topology(topo)
    for t in arr.types:
        try:
            check_task_type(topo, t)
        except TopologyError as exc:
            raise TopologyError(f"unknown task type {t}: {exc}") from None


def solve_capacity_lp(
    topo: ClusterTopology, svc: ServiceModel, arr: ArrivalVector
) -> tuple[float, Decomposition]:
    """Minimize the maximum per-server load over all splits of ``arr``.

    Returns the optimum and one optimal decomposition (not unique in general).
    """
    _check_inputs(topo, svc, arr)
    M = topo.num_servers
    active = [t for t, r in arr.rates.items() if r > 0]
    split = {(t, m): 0.0 for t in arr.types for m in topo.servers}
    if not active:
        return 0.0, Decomposition(split, {m: 0.0 for m in topo.servers})

    nvar = len(active) * M + 1
    z = nvar - 1
    c = np.zeros(nvar)
    c[z] = 1.0
    A_eq = np.zeros((len(active), nvar))
    b_eq = np.array([arr.rates[t] for t in active])
    A_ub = np.zeros((M, nvar))
    for i, t in enumerate(active):
        for m in topo.servers:
            j = i * M + m - 1
            A_eq[i, j] = 1.0
            A_ub[m - 1, j] = 1.0 / svc.rate(classify_locality(topo, t, m))
    A_ub[:, z] = -1.0
    try:
        res = solve_lp(c, A_ub, np.zeros(M), A_eq, b_eq)
    except LPError as exc:  # the program is always feasible and bounded
        raise RuntimeError(f"capacity LP solver failure: {exc}") from exc

    for i, t in enumerate(active):
        for m in topo.servers:
            split[(t, m)] = float(res.x[i * M + m - 1])
    loads = server_loads(topo, svc, split)
    return max(loads.values()), Decomposition(split, loads)


def max_stable_scaling(topo: ClusterTopology, svc: ServiceModel, arr: ArrivalVector) -> float:
    """Largest rho such that rho * arr sits on the capacity boundary."""
    if arr.is_zero():
        raise ValueError("max_stable_scaling needs at least one positive arrival rate")
    z, _ = solve_capacity_lp(topo, svc, arr)
    return 1.0 / z


def is_in_capacity_region(topo: ClusterTopology, svc: ServiceModel, arr: ArrivalVector) -> bool:
    z, _ = solve_capacity_lp(topo, svc, arr)
    return z < 1.0 - EPS_STRICT
