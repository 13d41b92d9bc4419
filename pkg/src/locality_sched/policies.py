"""Routing and scheduling policies.

Each policy is described twice: as small decision functions over plain
queue lengths (easy to check by hand) and as a ``Policy`` class the
simulator drives. A policy class owns no mutable state; it only holds
tables precomputed from the topology in ``bind``.

Queue layouts, and how queue indices map to storage:

    SERVER    one FIFO per server            index m - 1
    SUBQUEUE  local/rack/remote per server   index 3 * (m - 1) + class
    TYPE      one FIFO per task type         index of the type
    GLOBAL    a single FIFO                  index 0
"""
from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .capacity import Decomposition, ServiceModel
from .topology import ClusterTopology, LocalityClass, TaskType, classify_locality

REL_TIE = 1e-12


class Layout(enum.Enum):
    SERVER = "server"
    SUBQUEUE = "subqueue"
    TYPE = "type"
    GLOBAL = "global"


class PolicyError(ValueError):
    pass


def _pick(candidates: list, rng: random.Random):
    if len(candidates) == 1:
        return candidates[0]
    return candidates[rng.randrange(len(candidates))]


def best_set(scores: Mapping, maximize: bool = True) -> list:
    """Keys whose score ties the best one (relative tolerance 1e-12)."""
    if not scores:
        return []
    best = max(scores.values()) if maximize else min(scores.values())
    tol = REL_TIE * max(1.0, abs(best))
    return [k for k, v in scores.items() if abs(v - best) <= tol]


# -- JSQ-MaxWeight and Pandas ------------------------------------------------


def jsqmw_route(replicas: Sequence[int], lengths: Sequence[int], rng: random.Random) -> int:
    """Shortest queue among the task's replica servers (1-based ids)."""
    shortest = min(lengths[m - 1] for m in replicas)
    return _pick([m for m in replicas if lengths[m - 1] == shortest], rng)


pandas_route = jsqmw_route


def jsqmw_scores_2(m: int, lengths: Sequence[int], svc: ServiceModel) -> dict[int, float]:
    return {
        n: (svc.alpha if n == m else svc.gamma) * q for n, q in enumerate(lengths, start=1)
    }


def jsqmw_schedule_2(
    m: int, lengths: Sequence[int], svc: ServiceModel, rng: random.Random
) -> Optional[int]:
    """Queue (server id) an idle server m serves under two-level MaxWeight, or None."""
    if not any(lengths):
        return None
    return _pick(best_set(jsqmw_scores_2(m, lengths, svc)), rng)


def jsqmw_scores_3(
    m: int, lengths: Sequence[int], topo: ClusterTopology, svc: ServiceModel
) -> dict[int, float]:
    # n == m is scored by alpha alone; alpha > beta so the rack term cannot win there.
    k = topo.rack_of[m - 1]
    scores = {}
    for n, q in enumerate(lengths, start=1):
        if n == m:
            w = svc.alpha
        elif topo.rack_of[n - 1] == k:
            w = svc.beta
        else:
            w = svc.gamma
        scores[n] = w * q
    return scores


def jsqmw_schedule_3(
    m: int, lengths: Sequence[int], topo: ClusterTopology, svc: ServiceModel, rng: random.Random
) -> Optional[int]:
    if not any(lengths):
        return None
    return _pick(best_set(jsqmw_scores_3(m, lengths, topo, svc)), rng)


def pandas_schedule(
    m: int,
    lengths: Sequence[int],
    svc: ServiceModel,
    rng: random.Random,
    threshold: Optional[Fraction] = None,
) -> Optional[int]:
    """Own queue first; otherwise steal from the longest queue if it holds >= alpha/gamma tasks."""
    if lengths[m - 1] > 0:
        return m
    if threshold is None:
        threshold = svc.steal_threshold
    qmax = max(lengths)
    if qmax == 0 or qmax < threshold:
        return None
    return _pick([n for n, q in enumerate(lengths, start=1) if q == qmax], rng)


# -- weighted workload routing + priority scheduling -------------------------


def workload(qtriple: Sequence[int], svc: ServiceModel) -> float:
    ql, qk, qr = qtriple
    w = ql / svc.alpha + qr / svc.gamma
    if qk:
        w += qk / svc.beta
    return w


def ww_scores(
    loc_row: Sequence[LocalityClass], workloads: Sequence[float], svc: ServiceModel
) -> dict[int, float]:
    return {m: w / svc.rate(cls) for m, (cls, w) in enumerate(zip(loc_row, workloads), start=1)}


def ww_route(
    loc_row: Sequence[LocalityClass],
    workloads: Sequence[float],
    svc: ServiceModel,
    rng: random.Random,
) -> tuple[int, LocalityClass]:
    """Server with the least workload scaled by 1/rate, and the sub-queue to join.

    ``loc_row[m - 1]`` is the locality class of server m for the task's type.
    """
    m = _pick(best_set(ww_scores(loc_row, workloads, svc), maximize=False), rng)
    return m, loc_row[m - 1]


def priority_schedule(qtriple: Sequence[int]) -> Optional[LocalityClass]:
    for cls in LocalityClass:
        if qtriple[cls] > 0:
            return cls
    return None


# -- generalized c-mu rule ---------------------------------------------------


def gcmu_scores(
    m: int,
    type_lengths: Sequence[int],
    types: Sequence[TaskType],
    topo: ClusterTopology,
    svc: ServiceModel,
    theta: float = 1.0,
    coefficients: Optional[Sequence[float]] = None,
) -> dict[int, float]:
    """Marginal holding cost c (theta+1) Q^theta times the service rate at m, per nonempty type."""
    scores = {}
    for i, (t, q) in enumerate(zip(types, type_lengths)):
        if q > 0:
            c = 1.0 if coefficients is None else coefficients[i]
            mu = svc.rate(classify_locality(topo, t, m))
            scores[i] = c * (theta + 1.0) * q**theta * mu
    return scores


def gcmu_schedule(
    m: int,
    type_lengths: Sequence[int],
    types: Sequence[TaskType],
    topo: ClusterTopology,
    svc: ServiceModel,
    rng: random.Random,
    theta: float = 1.0,
    coefficients: Optional[Sequence[float]] = None,
) -> Optional[int]:
    if theta <= 0:
        raise PolicyError(f"c-mu exponent theta must be > 0, got {theta}")
    scores = gcmu_scores(m, type_lengths, types, topo, svc, theta, coefficients)
    if not scores:
        return None
    return _pick(best_set(scores), rng)


# -- static LP split ---------------------------------------------------------


def split_table(decomp: Decomposition, t: TaskType) -> tuple[list[int], list[float]]:
    """Servers and cumulative probabilities for routing type t by the LP split."""
    shares = {m: v for m, v in sorted(decomp.server_share(t).items()) if v > 0}
    total = sum(shares.values())
    if not shares or total <= 0:
        raise PolicyError(f"type {t} has no positive mass in the decomposition")
    servers, cum, acc = [], [], 0.0
    for m, v in shares.items():
        acc += v / total
        servers.append(m)
        cum.append(acc)
    cum[-1] = 1.0
    return servers, cum


def static_lp_route(t: TaskType, decomp: Decomposition, rng: random.Random) -> int:
    """Server m with probability split[t, m] / rate[t]."""
    servers, cum = split_table(decomp, t)
    u = rng.random()
    for m, c in zip(servers, cum):
        if u < c:
            return m
    return servers[-1]


# -- policy classes ----------------------------------------------------------


@dataclass
class SimContext:
    topo: ClusterTopology
    svc: ServiceModel
    types: list[TaskType]
    loc: list[list[LocalityClass]]  # loc[i][m - 1]


class Policy:
    kind: str = ""
    layout: Layout = Layout.SERVER

    def bind(self, ctx: SimContext) -> None:
        self.ctx = ctx

    def num_queues(self, ctx: SimContext) -> int:
        M = ctx.topo.num_servers
        return {
            Layout.SERVER: M,
            Layout.SUBQUEUE: 3 * M,
            Layout.TYPE: len(ctx.types),
            Layout.GLOBAL: 1,
        }[self.layout]

    def route(self, type_idx: int, queues: Sequence, rng: random.Random) -> int:
        raise NotImplementedError

    def schedule(self, m: int, queues: Sequence, rng: random.Random) -> Optional[int]:
        raise NotImplementedError


class _LocalJSQRouting(Policy):
    layout = Layout.SERVER

    def route(self, type_idx, queues, rng):
        reps = self.ctx.types[type_idx].replicas
        shortest = min(len(queues[m - 1]) for m in reps)
        return _pick([m for m in reps if len(queues[m - 1]) == shortest], rng) - 1


class JSQMaxWeight2(_LocalJSQRouting):
    kind = "jsq_mw_2"

    def schedule(self, m, queues, rng):
        n = jsqmw_schedule_2(m, [len(q) for q in queues], self.ctx.svc, rng)
        return None if n is None else n - 1


class JSQMaxWeight3(_LocalJSQRouting):
    kind = "jsq_mw_3"

    def bind(self, ctx):
        super().bind(ctx)
        if ctx.svc.two_level:
            raise PolicyError("jsq_mw_3 needs a three-level service model (beta set)")
        svc, rack = ctx.svc, ctx.topo.rack_of
        M = ctx.topo.num_servers
        # weight[m-1][n-1]: service-rate weight of queue n for idle server m
        self._weights = [
            [
                svc.alpha if n == m else svc.beta if rack[n] == rack[m] else svc.gamma
                for n in range(M)
            ]
            for m in range(M)
        ]

    def schedule(self, m, queues, rng):
        scores = {}
        for n, (w, q) in enumerate(zip(self._weights[m - 1], queues)):
            if q:
                scores[n] = w * len(q)
        if not scores:
            return None
        return _pick(best_set(scores), rng)


class Pandas(_LocalJSQRouting):
    kind = "pandas"

    def bind(self, ctx):
        super().bind(ctx)
        self._threshold = ctx.svc.steal_threshold

    def schedule(self, m, queues, rng):
        n = pandas_schedule(m, [len(q) for q in queues], self.ctx.svc, rng, self._threshold)
        return None if n is None else n - 1


class WeightedWorkloadPriority(Policy):
    kind = "weighted_workload_priority"
    layout = Layout.SUBQUEUE

    def bind(self, ctx):
        super().bind(ctx)
        svc = ctx.svc
        self._inv = (1.0 / svc.alpha, 0.0 if svc.beta is None else 1.0 / svc.beta, 1.0 / svc.gamma)

    def workloads(self, queues) -> list[float]:
        ia, ib, ig = self._inv
        return [
            len(queues[j]) * ia + len(queues[j + 1]) * ib + len(queues[j + 2]) * ig
            for j in range(0, len(queues), 3)
        ]

    def route(self, type_idx, queues, rng):
        m, cls = ww_route(self.ctx.loc[type_idx], self.workloads(queues), self.ctx.svc, rng)
        return 3 * (m - 1) + int(cls)

    def schedule(self, m, queues, rng):
        j = 3 * (m - 1)
        for cls in range(3):
            if queues[j + cls]:
                return j + cls
        return None


@dataclass
class GeneralizedCMu(Policy):
    theta: float = 1.0
    coefficients: Optional[dict[TaskType, float]] = None
    kind: str = field(default="gcmu", init=False)
    layout: Layout = field(default=Layout.TYPE, init=False)

    def __post_init__(self):
        if not self.theta > 0:
            raise PolicyError(f"c-mu exponent theta must be > 0, got {self.theta}")
        if self.coefficients and any(c <= 0 for c in self.coefficients.values()):
            raise PolicyError("c-mu coefficients must be > 0")

    def bind(self, ctx):
        super().bind(ctx)
        coef = self.coefficients or {}
        self._coef = [coef.get(t, 1.0) for t in ctx.types]
        self._mu = [[ctx.svc.rate(c) for c in row] for row in ctx.loc]

    def route(self, type_idx, queues, rng):
        return type_idx

    def schedule(self, m, queues, rng):
        th = self.theta
        scores = {}
        for i, q in enumerate(queues):
            if q:
                scores[i] = self._coef[i] * (th + 1.0) * len(q) ** th * self._mu[i][m - 1]
        if not scores:
            return None
        return _pick(best_set(scores), rng)


@dataclass
class StaticLPSplit(Policy):
    """LP-split baseline: route by the optimal decomposition, serve own queue FIFO."""

    decomposition: Optional[Decomposition] = None
    kind: str = field(default="static_lp_split", init=False)
    layout: Layout = field(default=Layout.SERVER, init=False)

    def bind(self, ctx):
        super().bind(ctx)
        if self.decomposition is None:
            raise PolicyError("static_lp_split needs a decomposition")
        self._tables = {}
        for i, t in enumerate(ctx.types):
            try:
                self._tables[i] = split_table(self.decomposition, t)
            except PolicyError:
                pass  # zero-rate type; routing one is an error

    def route(self, type_idx, queues, rng):
        if type_idx not in self._tables:
            raise PolicyError(f"type {self.ctx.types[type_idx]} absent from the decomposition")
        servers, cum = self._tables[type_idx]
        u = rng.random()
        for m, c in zip(servers, cum):
            if u < c:
                return m - 1
        return servers[-1] - 1

    def schedule(self, m, queues, rng):
        return m - 1 if queues[m - 1] else None


class FifoRandom(Policy):
    kind = "fifo_random"
    layout = Layout.GLOBAL

    def route(self, type_idx, queues, rng):
        return 0

    def schedule(self, m, queues, rng):
        return 0 if queues[0] else None


POLICY_KINDS = {
    "jsq_mw_2": JSQMaxWeight2,
    "jsq_mw_3": JSQMaxWeight3,
    "pandas": Pandas,
    "weighted_workload_priority": WeightedWorkloadPriority,
    "gcmu": GeneralizedCMu,
    "static_lp_split": StaticLPSplit,
    "fifo_random": FifoRandom,
}


def make_policy(kind: str, **params) -> Policy:
    try:
        cls = POLICY_KINDS[kind]
    except KeyError:
        raise PolicyError(f"unknown policy kind {kind!r}") from None
    if kind == "gcmu":
        return cls(**params)
    if kind == "static_lp_split":
        if set(params) - {"decomposition"}:
            raise PolicyError(f"unexpected parameters for {kind}: {sorted(params)}")
        return cls(**params)
    if params:
        raise PolicyError(f"policy {kind} takes no parameters, got {sorted(params)}")
    return cls()
