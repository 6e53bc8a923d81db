"""Central orchestrator: registry upkeep, repartitioning, elections, task
offloading with least-outstanding load balancing, vote collection, timeouts,
and bounded cross-cluster retries.

The dispatcher is a single logical event loop: every mutation happens in
event order on one scheduler, which is what makes runs reproducible.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

from . import wire
from .consensus import (Decision, LeaderLease, VoteTally, elect_leader,
                        leader_channel)
from .partitioner import Cluster, ClusterPlan, partition
from .registry import (DEFAULT_KEEPALIVE_TIMEOUT_S, NodeDescriptor, Registry,
                       next_connection)
from .worker import SPEED_CLASSES, TaskSpec

logger = logging.getLogger(__name__)


class TaskState(Enum):
    PENDING = "pending"
    DISPATCHED = "dispatched"
    ACCEPTED = "accepted"
    FAILED = "failed"


@dataclass
class TaskRecord:
    spec: TaskSpec
    client_id: str
    state: TaskState = TaskState.PENDING
    attempts: int = 0  # failure-driven dispatches, capped at max_retries + 1
    submitted_at: float = 0.0
    decided_at: float | None = None
    cluster_id: int | None = None
    generation: int | None = None
    digest: str | None = None
    dissent_count: int = 0
    dispatch_seq: int = 0  # guards stale timeout events
    tried_clusters: set[int] = field(default_factory=set)


@dataclass(frozen=True)
class DispatcherConfig:
    keepalive_timeout_s: float = DEFAULT_KEEPALIVE_TIMEOUT_S
    purge_interval_s: float = 5.0
    max_retries: int = 2
    vote_mode: str = "dispatcher"  # or "leader"
    worker_op_cost_s: float = SPEED_CLASSES["worker"]
    dispatch_timeout_factor: float = 3.0
    cluster_count_override: int | None = None


def select_cluster(plan: ClusterPlan, outstanding: dict[int, int],
                   registry: Registry, now: float,
                   exclude: set[int] | None = None) -> Cluster:
    """Least outstanding dispatched tasks; ties go to the cluster whose leader
    reconnects soonest, then the lowest cluster id."""
    candidates = [c for c in plan.clusters
                  if exclude is None or c.cluster_id not in exclude]
    if not candidates:
        candidates = list(plan.clusters)
    if not candidates:
        raise RuntimeError("no clusters available")

    def key(cluster: Cluster):
        leader = registry.get(cluster.leader)
        next_conn = next_connection(leader, now) if leader else float("inf")
        return (outstanding.get(cluster.cluster_id, 0), next_conn, cluster.cluster_id)

    return min(candidates, key=key)


class Dispatcher:
    def __init__(self, bus, scheduler, config: DispatcherConfig = DispatcherConfig(),
                 client_notifier=None):
        self.bus = bus
        self.scheduler = scheduler
        self.config = config
        self.registry = Registry(keepalive_timeout_s=config.keepalive_timeout_s)
        self.plan = ClusterPlan(clusters=(), generation=0)
        self.leases: dict[int, LeaderLease] = {}
        self.records: dict[str, TaskRecord] = {}
        self.tallies: dict[str, VoteTally] = {}
        self.outstanding: dict[int, int] = {}
        self.pending: list[str] = []
        self.dispatch_counts: dict[int, int] = {}  # per-cluster, current plan
        self.notifications: list[dict] = []  # terminal client updates (metrics)
        self.running = True
        self._client_notifier = client_notifier
        self._id = "dispatcher"

    # -- lifecycle --------------------------------------------------------------

    def start(self) -> None:
        for topic in (wire.TASKS_TOPIC, wire.KEEPALIVE_TOPIC, wire.RESULTS_TOPIC):
            self.bus.subscribe(topic, self._id, self._on_message)
        self.scheduler.call_later(self.config.purge_interval_s, self._purge_tick)

    def pause(self) -> None:
        """Stop consuming; submissions keep accumulating on the bus."""
        self.running = False

    def resume(self) -> None:
        self.running = True
        self._drain_all()

    # -- event intake --------------------------------------------------------------

    def _on_message(self, _topic: str) -> None:
        if self.running:
            self._drain_all()

    def _drain_all(self) -> None:
        self._drain(wire.KEEPALIVE_TOPIC, self._handle_keepalive)
        self._drain(wire.TASKS_TOPIC, self._handle_submission)
        self._drain(wire.RESULTS_TOPIC, self._handle_result)

    def _drain(self, topic: str, handler) -> None:
        while self.running:
            envelope = self.bus.consume(topic, self._id)
            if envelope is None:
                return
            try:
                handler(wire.decode(envelope.payload))
            except Exception:
                logger.exception("dropping malformed event on %s", topic)
            self.bus.ack(envelope.message_id, self._id, envelope.delivery_tag)

    def _purge_tick(self) -> None:
        if self.running:
            purged = self.registry.purge_stale(self.scheduler.now)
            if purged:
                logger.info("purged %s at t=%.3f", purged, self.scheduler.now)
                self._repartition()
        self.scheduler.call_later(self.config.purge_interval_s, self._purge_tick)

    # -- membership --------------------------------------------------------------

    def _handle_keepalive(self, payload: dict) -> None:
        node_id = payload["node_id"]
        now = self.scheduler.now
        known = self.registry.get(node_id)
        was_active = known is not None and known.status.value == "active"
        if known is None:
            self.registry.register(NodeDescriptor(
                node_id=node_id,
                period_s=payload["period_s"],
                awake_fraction=payload["awake_fraction"],
                last_seen_s=now,
            ), now)
        else:
            self.registry.record_keepalive(node_id, now)
        if not was_active:  # join or rejoin reshapes the graph
            self._repartition()

    def _repartition(self) -> None:
        active = self.registry.active_nodes()
        now = self.scheduler.now
        generation = self.plan.generation + 1
        self.plan = partition(active, now, generation=generation,
                              cluster_count=self.config.cluster_count_override)
        self.leases = {}
        self.outstanding = {c.cluster_id: 0 for c in self.plan.clusters}
        self.dispatch_counts = {c.cluster_id: 0 for c in self.plan.clusters}
        for cluster in self.plan.clusters:
            leader = elect_leader(cluster, self.registry, now)
            self.leases[cluster.cluster_id] = LeaderLease(
                cluster.cluster_id, leader, now, leader_channel(cluster.cluster_id))
            for member in cluster.members:
                self.bus.publish(wire.node_topic(member), wire.encode(
                    wire.cluster_assignment(member, cluster.cluster_id, generation,
                                            leader, list(cluster.members),
                                            self.config.vote_mode)))
            self.bus.publish(wire.node_topic(leader), wire.encode(
                wire.leader_grant(leader, cluster.cluster_id, generation)))
        # in-flight work addressed to the dissolved plan gets re-queued
        for task_id, record in self.records.items():
            if record.state is TaskState.DISPATCHED and record.generation != generation:
                record.state = TaskState.PENDING
                record.dispatch_seq += 1
                record.tried_clusters.clear()
                self.tallies.pop(task_id, None)
                self.pending.append(task_id)
        self._dispatch_pending()

    # -- task flow --------------------------------------------------------------

    def submit_task(self, spec: TaskSpec, client_id: str) -> str:
        """Direct-submission entry point (gateway, tests). Bus submissions on
        the tasks topic funnel into the same path."""
        if spec.task_id in self.records:
            raise ValueError(f"duplicate task id {spec.task_id}")
        record = TaskRecord(spec=spec, client_id=client_id,
                            submitted_at=self.scheduler.now)
        self.records[spec.task_id] = record
        self.pending.append(spec.task_id)
        self._dispatch_pending()
        return spec.task_id

    def _handle_submission(self, payload: dict) -> None:
        spec = TaskSpec(task_id=payload["task_id"], kernel=payload["kernel"],
                        size=payload["size"], seed=payload["seed"])
        try:
            self.submit_task(spec, payload.get("client_id", "anonymous"))
        except ValueError:
            logger.warning("duplicate submission %s dropped", spec.task_id)

    def _dispatch_pending(self) -> None:
        if not self.plan.clusters:
            return  # retained: dispatched as soon as a cluster forms
        queue, self.pending = self.pending, []
        for task_id in queue:
            record = self.records[task_id]
            if record.state is not TaskState.PENDING:
                continue
            cluster = select_cluster(self.plan, self.outstanding, self.registry,
                                     self.scheduler.now,
                                     exclude=record.tried_clusters)
            self._dispatch(record, cluster)

    def _dispatch(self, record: TaskRecord, cluster: Cluster) -> None:
        now = self.scheduler.now
        record.state = TaskState.DISPATCHED
        record.cluster_id = cluster.cluster_id
        record.generation = self.plan.generation
        record.dispatch_seq += 1
        if record.attempts == 0:
            record.attempts = 1
        record.tried_clusters.add(cluster.cluster_id)
        self.outstanding[cluster.cluster_id] = self.outstanding.get(cluster.cluster_id, 0) + 1
        self.dispatch_counts[cluster.cluster_id] = self.dispatch_counts.get(cluster.cluster_id, 0) + 1
        if self.config.vote_mode == "dispatcher":
            self.tallies[record.spec.task_id] = VoteTally(
                task_id=record.spec.task_id, members=frozenset(cluster.members))
        self.bus.publish(wire.group_topic(cluster.cluster_id), wire.encode(
            wire.dispatch(record.spec.task_id, record.spec.kernel,
                          record.spec.size, record.spec.seed, record.generation)))
        timeout = self._dispatch_timeout(cluster, record.spec)
        seq = record.dispatch_seq
        self.scheduler.call_later(timeout, self._on_timeout, record.spec.task_id, seq)

    def _dispatch_timeout(self, cluster: Cluster, spec: TaskSpec) -> float:
        members = [self.registry.get(m) for m in cluster.members]
        members = [m for m in members if m is not None]
        slowest = max((m.period_s for m in members), default=1.0)
        min_dc = min((m.awake_fraction for m in members), default=1.0)
        # a duty-cycled cluster needs ~compute/dc of wall clock plus full
        # periods; the 1.25 covers window-edge quantization of the accrual
        expected_wall = 1.25 * spec.size * self.config.worker_op_cost_s / max(min_dc, 1e-9)
        return self.config.dispatch_timeout_factor * slowest + expected_wall

    def _on_timeout(self, task_id: str, seq: int) -> None:
        record = self.records.get(task_id)
        if record is None or record.state is not TaskState.DISPATCHED or record.dispatch_seq != seq:
            return
        tally = self.tallies.get(task_id)
        if tally is not None:
            decision = tally.finalize_timeout()
            if decision is Decision.ACCEPTED:
                self._finalize(record, Decision.ACCEPTED, tally.accepted_digest,
                               tally.dissent_count())
                return
        self._finalize(record, Decision.FAILED, None,
                       tally.dissent_count() if tally else 0)

    # -- results --------------------------------------------------------------

    def _handle_result(self, payload: dict) -> None:
        kind = payload.get("kind")
        if kind == "leader_decision":
            self._handle_leader_decision(payload)
            return
        task_id = payload["task_id"]
        record = self.records.get(task_id)
        tally = self.tallies.get(task_id)
        if record is None or tally is None or record.state is not TaskState.DISPATCHED:
            return
        if payload.get("generation") != record.generation:
            return
        if payload.get("status") == "error":
            decision = tally.record_failure(payload["node_id"])
        else:
            decision = tally.record_response(payload["node_id"], payload["digest"])
        if decision is not Decision.PENDING:
            self._finalize(record, decision, tally.accepted_digest, tally.dissent_count())

    def _handle_leader_decision(self, payload: dict) -> None:
        record = self.records.get(payload["task_id"])
        if record is None or record.state is not TaskState.DISPATCHED:
            return
        if payload.get("generation") != record.generation:
            return
        decision = Decision.ACCEPTED if payload["decision"] == "accepted" else Decision.FAILED
        self._finalize(record, decision, payload.get("digest"),
                       payload.get("dissent_count", 0))

    def _finalize(self, record: TaskRecord, decision: Decision,
                  digest: str | None, dissent: int) -> None:
        task_id = record.spec.task_id
        if record.cluster_id is not None:
            count = self.outstanding.get(record.cluster_id, 0)
            self.outstanding[record.cluster_id] = max(0, count - 1)
        self.tallies.pop(task_id, None)
        if decision is Decision.ACCEPTED:
            record.state = TaskState.ACCEPTED
            record.digest = digest
            record.dissent_count = dissent
            record.decided_at = self.scheduler.now
            self._notify(record, "accepted")
            return
        if record.attempts <= self.config.max_retries:
            record.attempts += 1
            record.state = TaskState.PENDING
            self.pending.append(task_id)
            self._dispatch_pending()
            return
        record.state = TaskState.FAILED
        record.dissent_count = dissent
        record.decided_at = self.scheduler.now
        self._notify(record, "failed")

    def _notify(self, record: TaskRecord, status: str) -> None:
        wall = (record.decided_at or self.scheduler.now) - record.submitted_at
        payload = wire.client_notification(record.spec.task_id, status,
                                           record.digest, record.dissent_count, wall)
        self.notifications.append(payload)
        self.bus.publish(wire.client_result_topic(record.client_id),
                         wire.encode(payload))
        if self._client_notifier is not None:
            self._client_notifier(payload)
