"""Discrete-time slot simulator.

Within slot t: arrivals are drawn per type, routed against the queue
lengths at the start of the slot and enqueued in task-id order; each busy
server then completes its task with probability alpha/beta/gamma; finally
every idle server (ascending id, or shuffled) asks the policy for work.
A task that enters service in slot t gets its first completion chance in
slot t + 1, so its service time is Geometric with support {1, 2, ...}.
"""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence

from .capacity import ArrivalVector, ServiceModel
from .metrics import (
    MetricsBundle,
    MetricsCollector,
    MetricsError,
    lyapunov_from_queues,
    stability_estimate,
)
from .policies import Layout, Policy, SimContext
from .topology import ClusterTopology, LocalityClass, check_task_type, classify_locality, locality_table


class SimulationFault(RuntimeError):
    """A policy produced an impossible decision."""


class Task:
    __slots__ = ("id", "type_idx", "arrival_slot", "locality", "start_slot", "server", "departure_slot")

    def __init__(self, id: int, type_idx: int, arrival_slot: int):
        self.id = id
        self.type_idx = type_idx
        self.arrival_slot = arrival_slot
        self.locality: Optional[LocalityClass] = None
        self.start_slot: Optional[int] = None
        self.server: Optional[int] = None
        self.departure_slot: Optional[int] = None

    def __repr__(self):
        return f"Task(id={self.id}, type={self.type_idx}, arrival={self.arrival_slot})"


def sample_service_completion(rng: random.Random, cls: LocalityClass, svc: ServiceModel) -> bool:
    """One Bernoulli draw with the class's per-slot completion probability."""
    return rng.random() < svc.rate(cls)


@dataclass(frozen=True)
class ArrivalProcess:
    """Per-type arrivals each slot: Bernoulli(rate), or Binomial(B, rate / B)."""

    rates: tuple[float, ...]
    kind: str = "bernoulli"
    batch_bound: int = 1

    def __post_init__(self):
        if self.kind not in ("bernoulli", "batch_binomial"):
            raise ValueError(f"unknown arrival kind {self.kind!r}")
        bound = 1 if self.kind == "bernoulli" else self.batch_bound
        if bound < 1:
            raise ValueError("batch bound must be >= 1")
        for r in self.rates:
            if not 0 <= r <= bound:
                raise ValueError(f"arrival rate {r} outside [0, {bound}] for {self.kind} arrivals")

    def sample(self, rng: random.Random) -> list[int]:
        if self.kind == "bernoulli":
            return [1 if rng.random() < r else 0 for r in self.rates]
        B = self.batch_bound
        rand = rng.random
        out = []
        for r in self.rates:
            p = r / B
            out.append(sum(1 for _ in range(B) if rand() < p))
        return out


class SimState:
    def __init__(self, layout: Layout, num_queues: int, num_servers: int):
        self.layout = layout
        self.slot = 0
        self.queues: list[deque] = [deque() for _ in range(num_queues)]
        self.in_service: list[Optional[Task]] = [None] * num_servers

    def queue_lengths(self) -> list[int]:
        return [len(q) for q in self.queues]

    def total_queued(self) -> int:
        return sum(len(q) for q in self.queues)

    def busy(self) -> int:
        return sum(1 for t in self.in_service if t is not None)


class Simulation:
    def __init__(
        self,
        topo: ClusterTopology,
        svc: ServiceModel,
        arrivals: ArrivalVector,
        policy: Policy,
        seed: int,
        arrival_kind: str = "bernoulli",
        batch_bound: int = 1,
        schedule_order: str = "ascending",
        warmup: int = 0,
        trace_stride: int = 1,
        record_schedules: bool = False,
    ):
        svc.check_topology(topo)
        for t in arrivals.types:
            check_task_type(topo, t)
        if schedule_order not in ("ascending", "random"):
            raise ValueError(f"schedule_order must be 'ascending' or 'random', got {schedule_order!r}")
        if trace_stride < 1:
            raise ValueError("trace_stride must be >= 1")
        self.topo, self.svc, self.policy = topo, svc, policy
        self.types = arrivals.types
        self.ctx = SimContext(topo, svc, self.types, locality_table(topo, self.types))
        for row in self.ctx.loc:
            for cls in row:
                svc.rate(cls)  # two-level models must never see RACK_LOCAL
        policy.bind(self.ctx)
        self.process = ArrivalProcess(tuple(arrivals.rates.values()), arrival_kind, batch_bound)
        self.rng = random.Random(seed)
        self.state = SimState(policy.layout, policy.num_queues(self.ctx), topo.num_servers)
        self.schedule_order = schedule_order
        self.trace_stride = trace_stride
        self.metrics = MetricsCollector(warmup)
        self.next_id = 0
        self.arrived = 0
        self.queue_trace: list[tuple[int, int]] = []
        self.lyapunov_trace: list[tuple[int, float]] = []
        self.schedule_log: Optional[list[tuple]] = [] if record_schedules else None
        self._rates = [svc.alpha, svc.beta or 0.0, svc.gamma]  # indexed by LocalityClass

    def step(self) -> None:
        st, rng, policy = self.state, self.rng, self.policy
        t = st.slot
        queues = st.queues
        nq = len(queues)

        # (1)-(2) arrivals, routed against start-of-slot lengths
        counts = self.process.sample(rng)
        if any(counts):
            routed = []
            for i, c in enumerate(counts):
                for _ in range(c):
                    task = Task(self.next_id, i, t)
                    self.next_id += 1
                    q = policy.route(i, queues, rng)
                    if not 0 <= q < nq:
                        raise SimulationFault(f"{policy.kind} routed to invalid queue {q}")
                    routed.append((task, q))
            for task, q in routed:
                queues[q].append(task)
            self.arrived += len(routed)

        # (3) completions
        rates = self._rates
        in_service = st.in_service
        for j, task in enumerate(in_service):
            if task is not None and rng.random() < rates[task.locality]:
                task.departure_slot = t
                in_service[j] = None
                self.metrics.record_departure(task, t)

        # (4) idle servers pull work
        servers = range(1, self.topo.num_servers + 1)
        if self.schedule_order == "random":
            servers = list(servers)
            rng.shuffle(servers)
        loc = self.ctx.loc
        log = self.schedule_log
        for m in servers:
            if in_service[m - 1] is not None:
                continue
            q = policy.schedule(m, queues, rng)
            if q is None:
                continue
            if not 0 <= q < nq or not queues[q]:
                raise SimulationFault(f"{policy.kind} scheduled server {m} to empty/invalid queue {q}")
            if log is not None:
                own = len(queues[m - 1]) if st.layout is Layout.SERVER else None
                log.append((t, m, q, len(queues[q]), own, max(len(x) for x in queues)))
            task = queues[q].popleft()
            task.locality = loc[task.type_idx][m - 1]
            task.start_slot = t
            task.server = m
            in_service[m - 1] = task

        # (5) sample traces, advance
        if t % self.trace_stride == 0:
            self.queue_trace.append((t, st.total_queued()))
            if st.layout is Layout.SUBQUEUE:
                self.lyapunov_trace.append((t, lyapunov_from_queues(queues, self.svc)))
        st.slot = t + 1

    def run(self, horizon: int) -> None:
        step = self.step
        for _ in range(horizon):
            step()

    def bundle(self) -> MetricsBundle:
        try:
            slope, verdict = stability_estimate(self.queue_trace)
        except MetricsError:
            slope, verdict = float("nan"), "unknown"
        m = self.metrics
        return MetricsBundle(
            mean_completion_time=m.mean_completion_time,
            completions_by_class=m.class_dict(),
            total_queue_trace=list(self.queue_trace),
            lyapunov_trace=list(self.lyapunov_trace),
            stability_slope=slope,
            verdict=verdict,
            arrivals=self.arrived,
            departures=m.departures,
            final_total_queue=self.state.total_queued(),
            in_service=self.state.busy(),
            mean_service_time=m.service_means(),
            service_counts={cls.name.lower(): m.service_count[cls] for cls in LocalityClass},
        )


def default_stride(horizon: int) -> int:
    return max(1, horizon // 2000)


def run_simulation(
    topo: ClusterTopology,
    svc: ServiceModel,
    arrivals: ArrivalVector,
    policy: Policy,
    horizon: int,
    seed: int,
    warmup: Optional[int] = None,
    trace_stride: Optional[int] = None,
    **kwargs,
) -> MetricsBundle:
    """Run ``horizon`` slots from an empty system and return the metrics."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    sim = Simulation(
        topo,
        svc,
        arrivals,
        policy,
        seed,
        warmup=horizon // 5 if warmup is None else warmup,
        trace_stride=default_stride(horizon) if trace_stride is None else trace_stride,
        **kwargs,
    )
    sim.run(horizon)
    return sim.bundle()
