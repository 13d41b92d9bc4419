"""Per-run statistics: completion times, locality mix, queue traces, stability."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .capacity import ServiceModel
from .topology import LocalityClass

EPS_SLOPE = 1e-4
MIN_TRACE = 100


class MetricsError(ValueError):
    pass


@dataclass
class MetricsBundle:
    mean_completion_time: float
    completions_by_class: dict[str, int]
    total_queue_trace: list[tuple[int, int]]
    lyapunov_trace: list[tuple[int, float]]
    stability_slope: float
    verdict: str
    arrivals: int = 0
    departures: int = 0
    final_total_queue: int = 0
    in_service: int = 0
    mean_service_time: dict[str, float] = field(default_factory=dict)
    service_counts: dict[str, int] = field(default_factory=dict)

    @property
    def counted_departures(self) -> int:
        return sum(self.completions_by_class.values())

    def shares(self) -> tuple[float, float, float]:
        n = self.counted_departures
        if n == 0:
            return (0.0, 0.0, 0.0)
        c = self.completions_by_class
        return tuple(c[cls.name.lower()] / n for cls in LocalityClass)


class MetricsCollector:
    """Accumulates departures; tasks that arrived before ``warmup`` are not counted."""

    def __init__(self, warmup: int = 0):
        self.warmup = warmup
        self.completion_sum = 0
        self.class_counts = [0, 0, 0]
        self.service_sum = [0, 0, 0]
        self.service_count = [0, 0, 0]
        self.departures = 0

    def record_departure(self, task, slot: int) -> None:
        if slot < task.arrival_slot:
            raise MetricsError(f"task {task.id} departs at {slot} before arriving at {task.arrival_slot}")
        self.departures += 1
        cls = task.locality
        self.service_sum[cls] += slot - task.start_slot
        self.service_count[cls] += 1
        if task.arrival_slot >= self.warmup:
            self.completion_sum += slot - task.arrival_slot + 1
            self.class_counts[cls] += 1

    @property
    def mean_completion_time(self) -> float:
        n = sum(self.class_counts)
        return self.completion_sum / n if n else math.nan

    def class_dict(self) -> dict[str, int]:
        return {cls.name.lower(): self.class_counts[cls] for cls in LocalityClass}

    def service_means(self) -> dict[str, float]:
        return {
            cls.name.lower(): (self.service_sum[cls] / self.service_count[cls])
            if self.service_count[cls]
            else math.nan
            for cls in LocalityClass
        }


def stability_estimate(
    trace: Sequence[tuple[int, float]], eps: float = EPS_SLOPE
) -> tuple[float, str]:
    """Least-squares slope of total queue length over the final half of the trace.

    Verdict is ``stable`` below eps, ``unstable`` above 10 * eps, else ``suspect``.
    These thresholds are a finite-horizon heuristic, not a drift proof.
    """
    if len(trace) < MIN_TRACE:
        raise MetricsError(f"trace has {len(trace)} samples, need at least {MIN_TRACE}")
    slots = np.array([s for s, _ in trace], dtype=float)
    values = np.array([v for _, v in trace], dtype=float)
    mid = slots[0] + (slots[-1] - slots[0]) / 2
    keep = slots >= mid
    x, y = slots[keep], values[keep]
    xc = x - x.mean()
    denom = float(xc @ xc)
    slope = float(xc @ (y - y.mean()) / denom) if denom > 0 else 0.0
    if slope < eps:
        verdict = "stable"
    elif slope > 10 * eps:
        verdict = "unstable"
    else:
        verdict = "suspect"
    return slope, verdict


def lyapunov_from_queues(queues: Sequence, svc: ServiceModel) -> float:
    if len(queues) % 3:
        raise MetricsError("Lyapunov value needs the three-sub-queue layout")
    inv_b = 0.0 if svc.beta is None else 1.0 / svc.beta
    total = 0.0
    for j in range(0, len(queues), 3):
        w = len(queues[j]) / svc.alpha + len(queues[j + 1]) * inv_b + len(queues[j + 2]) / svc.gamma
        total += w * w
    return total


def lyapunov_value(state, svc: ServiceModel) -> float:
    """Sum over servers of the squared weighted workload."""
    from .policies import Layout

    if state.layout is not Layout.SUBQUEUE:
        raise MetricsError(f"Lyapunov value needs the sub-queue layout, state uses {state.layout.value}")
    return lyapunov_from_queues(state.queues, svc)
