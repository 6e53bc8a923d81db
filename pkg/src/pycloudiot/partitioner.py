"""Duty-cycle-aware clustering of workers into groups of 3..7.

The five-step heuristic:
  1. sort nodes by duty-cycle period, then predicted next connection, then id;
  2. pick the cluster count whose balanced split is closest to 5 nodes each;
  3. seed the k fastest nodes as leaders of clusters 1..k;
  4. fill round-robin, alternately drawing the fastest and slowest remaining;
  5. sizes end up balanced within one member.

All functions are pure over registry snapshots.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

from .dutycycle import DutyCycleSchedule, awake_windows
from .registry import NodeDescriptor, next_connection

MIN_CLUSTER_SIZE = 3
MAX_CLUSTER_SIZE = 7
TARGET_CLUSTER_SIZE = 5


@dataclass(frozen=True)
class Cluster:
    cluster_id: int
    leader: str
    members: tuple[str, ...]  # leader included

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class ClusterPlan:
    clusters: tuple[Cluster, ...]
    generation: int = 0

    @property
    def node_ids(self) -> frozenset[str]:
        return frozenset(m for c in self.clusters for m in c.members)

    def cluster_of(self, node_id: str) -> Cluster | None:
        for c in self.clusters:
            if node_id in c.members:
                return c
        return None


def election_key(desc: NodeDescriptor, now: float) -> tuple[float, float, str]:
    """Ordering used everywhere a "fastest node" is needed: shortest period,
    then earliest predicted reconnection, then id for a deterministic result."""
    return (desc.period_s, next_connection(desc, now), desc.node_id)


def sort_nodes(nodes: list[NodeDescriptor], now: float) -> list[NodeDescriptor]:
    return sorted(nodes, key=lambda d: election_key(d, now))


def choose_cluster_count(n: int) -> int:
    """Cluster count whose balanced split lands sizes in [3, 7] closest to the
    target mean of 5; ties go to fewer clusters. Below 3 nodes the plan
    degenerates to a single undersized cluster."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n < MIN_CLUSTER_SIZE:
        return 1
    feasible = [
        k for k in range(1, n + 1)
        if n // k >= MIN_CLUSTER_SIZE and -(-n // k) <= MAX_CLUSTER_SIZE
    ]
    if not feasible:  # unreachable for n >= 3, kept as a guard
        return 1

    def beats(k1: int, k2: int) -> bool:
        # |n/k1 - 5| < |n/k2 - 5| via exact integer cross-multiplication
        a = abs(n - TARGET_CLUSTER_SIZE * k1) * k2
        b = abs(n - TARGET_CLUSTER_SIZE * k2) * k1
        return a < b or (a == b and k1 < k2)

    best = feasible[0]
    for k in feasible[1:]:
        if beats(k, best):
            best = k
    return best


def partition(nodes: list[NodeDescriptor], now: float,
              generation: int = 0, cluster_count: int | None = None) -> ClusterPlan:
    """Partition active nodes into a leader-designated cluster plan.

    `cluster_count` overrides step 2 for experiments that need a forced
    cluster size; membership and leader rules are unchanged.
    """
    if not nodes:
        return ClusterPlan(clusters=(), generation=generation)
    ordered = sort_nodes(nodes, now)
    k = cluster_count if cluster_count is not None else choose_cluster_count(len(ordered))
    k = max(1, min(k, len(ordered)))
    members: list[list[str]] = [[ordered[i].node_id] for i in range(k)]
    pool = [d.node_id for d in ordered[k:]]
    # round-robin over clusters, alternately drawing fastest / slowest
    for i in range(len(pool)):
        node = pool.pop(0) if i % 2 == 0 else pool.pop()
        members[i % k].append(node)
    clusters = tuple(
        Cluster(cluster_id=i + 1, leader=m[0], members=tuple(m))
        for i, m in enumerate(members)
    )
    return ClusterPlan(clusters=clusters, generation=generation)


def count_plan_cycles(plan: ClusterPlan,
                      schedules: dict[str, DutyCycleSchedule],
                      horizon_s: float) -> int:
    """Usable compute cycles: member wake windows that overlap a wake window of
    their cluster's leader, summed over all non-leader members."""
    total = 0
    for cluster in plan.clusters:
        leader_windows = awake_windows(schedules[cluster.leader], horizon_s)
        if not leader_windows:
            continue
        starts = [lo for lo, _ in leader_windows]
        ends = [hi for _, hi in leader_windows]
        for member in cluster.members:
            if member == cluster.leader:
                continue
            for lo, hi in awake_windows(schedules[member], horizon_s):
                # leader window overlapping [lo, hi): the last window starting
                # before hi is the only candidate ending after lo
                i = bisect.bisect_left(starts, hi) - 1
                if i >= 0 and ends[i] > lo:
                    total += 1
    return total


def compute_cycle_gain(before: ClusterPlan, after: ClusterPlan,
                       schedules: dict[str, DutyCycleSchedule],
                       horizon_s: float) -> float | None:
    """Relative change in usable compute cycles, as a percentage.

    Returns None (not applicable) when the before-plan yields zero cycles.
    """
    if before.node_ids != after.node_ids:
        raise ValueError("plans must cover the same node set")
    cycles_before = count_plan_cycles(before, schedules, horizon_s)
    cycles_after = count_plan_cycles(after, schedules, horizon_s)
    if cycles_before == 0:
        return None
    return 100.0 * (cycles_after - cycles_before) / cycles_before
