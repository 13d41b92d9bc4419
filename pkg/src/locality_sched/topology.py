"""Cluster topology, task types and locality classification.

Servers and racks are 1-based. Servers inside a rack must be numbered
contiguously, so a rack assignment like (1, 1, 2, 2) is valid while
(1, 2, 1, 2) is rejected.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence


class TopologyError(ValueError):
    pass


class LocalityClass(enum.IntEnum):
    LOCAL = 0
    RACK_LOCAL = 1
    REMOTE = 2


@dataclass(frozen=True)
class ClusterTopology:
    num_servers: int
    rack_of: tuple[int, ...]  # rack_of[m - 1] is the rack of server m

    @property
    def num_racks(self) -> int:
        return max(self.rack_of)

    @property
    def servers(self) -> range:
        return range(1, self.num_servers + 1)

    def rack(self, m: int) -> int:
        self.check_server(m)
        return self.rack_of[m - 1]

    def rack_members(self, k: int) -> list[int]:
        return [m for m in self.servers if self.rack_of[m - 1] == k]

    def check_server(self, m: int) -> None:
        if not 1 <= m <= self.num_servers:
            raise TopologyError(f"server {m} out of range 1..{self.num_servers}")

    @property
    def is_two_level(self) -> bool:
        """True when every rack holds a single server (no rack-local service)."""
        return self.num_racks == self.num_servers


@dataclass(frozen=True, order=True)
class TaskType:
    replicas: tuple[int, ...]

    def __post_init__(self):
        reps = tuple(self.replicas)
        object.__setattr__(self, "replicas", reps)
        if not reps:
            raise TopologyError("task type needs at least one replica")
        if any(b <= a for a, b in zip(reps, reps[1:])):
            raise TopologyError(f"replicas {reps} must be strictly increasing")

    def __contains__(self, m: int) -> bool:
        return m in self.replicas

    def __len__(self) -> int:
        return len(self.replicas)

    def __str__(self) -> str:
        return "-".join(str(m) for m in self.replicas)

    @classmethod
    def parse(cls, text: str) -> "TaskType":
        return cls(tuple(int(s) for s in text.split("-")))


def validate_topology(num_servers: int, rack_of: Sequence[int]) -> ClusterTopology:
    """Check a raw server-to-rack assignment and build a topology.

    A two-level cluster (local/remote only) is expressed by giving every
    server its own rack.
    """
    if num_servers <= 0:
        raise TopologyError("topology needs at least one server (M = 0 given)")
    racks = tuple(int(k) for k in rack_of)
    if len(racks) != num_servers:
        raise TopologyError(f"rack_of has {len(racks)} entries, expected {num_servers}")
    for m, k in enumerate(racks, start=1):
        if k < 1:
            raise TopologyError(f"server {m} has invalid rack id {k}")
    num_racks = max(racks)
    seen: set[int] = set()
    prev = None
    for m, k in enumerate(racks, start=1):
        if k != prev:
            if k in seen:
                raise TopologyError(f"rack {k} not contiguous (server {m} reopens it)")
            seen.add(k)
            prev = k
    for k in range(1, num_racks + 1):
        if k not in seen:
            raise TopologyError(f"rack {k} is empty")
    return ClusterTopology(num_servers, racks)


def single_rack(num_servers: int) -> ClusterTopology:
    return validate_topology(num_servers, [1] * num_servers)


def singleton_racks(num_servers: int) -> ClusterTopology:
    return validate_topology(num_servers, range(1, num_servers + 1))


def equal_racks(num_racks: int, rack_size: int) -> ClusterTopology:
    return validate_topology(
        num_racks * rack_size, [k for k in range(1, num_racks + 1) for _ in range(rack_size)]
    )


def check_task_type(topo: ClusterTopology, t: TaskType) -> None:
    if len(t) > topo.num_servers:
        raise TopologyError(f"type {t} has more replicas than servers")
    for m in t.replicas:
        if not 1 <= m <= topo.num_servers:
            raise TopologyError(f"type {t} references server {m} outside 1..{topo.num_servers}")


def classify_locality(topo: ClusterTopology, t: TaskType, m: int) -> LocalityClass:
    topo.check_server(m)
    if m in t.replicas:
        return LocalityClass.LOCAL
    k = topo.rack_of[m - 1]
    if any(topo.rack_of[n - 1] == k for n in t.replicas):
        return LocalityClass.RACK_LOCAL
    return LocalityClass.REMOTE


def locality_table(topo: ClusterTopology, types: Iterable[TaskType]) -> list[list[LocalityClass]]:
    """table[i][m - 1] is the class of server m for the i-th type."""
    return [[classify_locality(topo, t, m) for m in topo.servers] for t in types]


def enumerate_task_types(topo: ClusterTopology, replicas: int = 3) -> list[TaskType]:
    if not 1 <= replicas <= topo.num_servers:
        raise TopologyError(f"replica count {replicas} must lie in 1..{topo.num_servers}")
    return [TaskType(c) for c in itertools.combinations(topo.servers, replicas)]
