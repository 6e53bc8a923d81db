"""Dispatcher-side leader election and majority voting over replicated results.

Unlike stock Raft there are no terms, candidate states, or votes among
workers: the dispatcher computes elections centrally from the registry, and
the elected node simply subscribes to its cluster's fixed leader channel. A
result is accepted the moment some digest reaches floor(N/2)+1 identical
responses, which makes a cluster of N tolerant to floor((N-1)/2) arbitrary
faults.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .partitioner import Cluster, election_key
from .registry import NodeStatus, Registry


class ElectionError(RuntimeError):
    """No electable member: the cluster is degraded."""


@dataclass(frozen=True)
class LeaderLease:
    cluster_id: int
    leader: str
    elected_at: float
    leader_channel: str


def leader_channel(cluster_id: int) -> str:
    # a pure function of the cluster: leadership changes never re-address
    return f"pcio/cluster/{cluster_id}/leader"


def elect_leader(cluster: Cluster, registry: Registry, now: float) -> str:
    """Pick the active member with the shortest duty-cycle period; ties go to
    the earliest predicted reconnection, then lowest id."""
    candidates = [
        registry.get(m) for m in cluster.members
        if registry.get(m) is not None and registry.get(m).status is NodeStatus.ACTIVE
    ]
    if not candidates:
        raise ElectionError(f"cluster {cluster.cluster_id} has no active members")
    winner = min(candidates, key=lambda d: election_key(d, now))
    return winner.node_id


class MembershipEvent(Enum):
    LEADER_LOST = "leader_lost"
    FASTER_NODE_JOINED = "faster_node_joined"


def on_membership_change(lease: LeaderLease, cluster: Cluster,
                         event: MembershipEvent, registry: Registry, now: float,
                         joiner: str | None = None) -> LeaderLease:
    """Re-evaluate leadership. Leader loss always re-elects; a joiner takes
    over only if it strictly beats the current leader under the election
    ordering. Returns the (possibly unchanged) lease."""
    if event is MembershipEvent.LEADER_LOST:
        new_leader = elect_leader(cluster, registry, now)
        return LeaderLease(cluster.cluster_id, new_leader, now,
                           leader_channel(cluster.cluster_id))
    if event is MembershipEvent.FASTER_NODE_JOINED:
        if joiner is None:
            raise ValueError("joiner required for FASTER_NODE_JOINED")
        current = registry.get(lease.leader)
        incoming = registry.get(joiner)
        if current is None:
            return on_membership_change(lease, cluster, MembershipEvent.LEADER_LOST,
                                        registry, now)
        if incoming is not None and election_key(incoming, now) < election_key(current, now):
            return LeaderLease(cluster.cluster_id, joiner, now,
                               leader_channel(cluster.cluster_id))
        return lease
    raise ValueError(f"unknown membership event {event}")


def majority_threshold(n: int) -> int:
    if n < 1:
        raise ValueError("cluster size must be >= 1")
    return n // 2 + 1


class Decision(Enum):
    PENDING = "pending"
    ACCEPTED = "accepted"
    FAILED = "failed"


@dataclass
class VoteTally:
    """Single-owner tally of one replicated task's responses.

    Quorum is computed against the membership captured at dispatch time, not
    current liveness, so a shrinking cluster cannot accept with too few votes.
    """

    task_id: str
    members: frozenset[str]
    responses: dict[str, str] = field(default_factory=dict)  # node -> digest
    failed_nodes: set[str] = field(default_factory=set)  # crashed / timed out / errored
    decision: Decision = Decision.PENDING
    accepted_digest: str | None = None

    @property
    def cluster_size(self) -> int:
        return len(self.members)

    @property
    def threshold(self) -> int:
        return majority_threshold(self.cluster_size)

    def dissent_count(self) -> int:
        """Counted responses disagreeing with the accepted digest."""
        if self.accepted_digest is None:
            return len(self.responses)
        return sum(1 for d in self.responses.values() if d != self.accepted_digest)

    def _outstanding(self) -> int:
        return self.cluster_size - len(self.responses) - len(self.failed_nodes)

    def _evaluate(self) -> None:
        counts: dict[str, int] = {}
        for d in self.responses.values():
            counts[d] = counts.get(d, 0) + 1
        threshold = self.threshold
        for d, c in counts.items():
            if c >= threshold:
                self.decision = Decision.ACCEPTED
                self.accepted_digest = d
                return
        best = max(counts.values(), default=0)
        if best + self._outstanding() < threshold:
            self.decision = Decision.FAILED

    def record_response(self, node_id: str, result_digest: str) -> Decision:
        """Count one member's digest. Accepted fires the moment a digest
        reaches quorum; later responses, duplicates, and non-members are
        ignored."""
        if self.decision is not Decision.PENDING:
            return self.decision
        if node_id not in self.members or node_id in self.responses or node_id in self.failed_nodes:
            return self.decision
        self.responses[node_id] = result_digest
        self._evaluate()
        return self.decision

    def record_failure(self, node_id: str) -> Decision:
        """Mark a member as never answering (crash, error result, timeout)."""
        if self.decision is not Decision.PENDING:
            return self.decision
        if node_id not in self.members or node_id in self.responses or node_id in self.failed_nodes:
            return self.decision
        self.failed_nodes.add(node_id)
        self._evaluate()
        return self.decision

    def finalize_timeout(self) -> Decision:
        """Deadline reached: everyone still silent counts as failed."""
        if self.decision is Decision.PENDING:
            for node in self.members - set(self.responses) - self.failed_nodes:
                self.failed_nodes.add(node)
            self._evaluate()
            if self.decision is Decision.PENDING:
                self.decision = Decision.FAILED
        return self.decision


def tally_vote(tally: VoteTally, node_id: str, result_digest: str) -> VoteTally:
    """Functional wrapper over VoteTally.record_response."""
    tally.record_response(node_id, result_digest)
    return tally
