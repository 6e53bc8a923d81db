"""Duty-cycled worker runtime: wake/sleep schedule, keep-alives, deterministic
kernel execution with accrual across wake windows, and fault injection.

A worker only talks to the bus while awake. Task execution accrues compute
time only inside awake windows and resumes (never restarts) across windows.
Fault draws are derived from (profile seed, task id, node id), so a fault
pattern is reproducible and independent of the duty-cycle configuration.
"""

from __future__ import annotations

import logging
import math
import random
from collections import deque
from dataclasses import dataclass, replace
from enum import Enum

from . import wire
from .consensus import Decision, VoteTally
from .digest import DEFAULT_PRECISION, stable_seed
from .dutycycle import DutyCycleSchedule, next_window_start
from .kernels import UnknownKernelError, kernel_digest

logger = logging.getLogger(__name__)

# per-operation simulated cost; the reference node models the offloading
# client's own hardware and is ~10x faster than a constrained worker
SPEED_CLASSES = {
    "worker": 5e-5,
    "reference": 5e-6,
}


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    kernel: str
    size: int
    seed: int
    deadline_s: float | None = None

    def __post_init__(self):
        if self.size < 0:
            raise ValueError("size must be >= 0")


@dataclass(frozen=True)
class TaskResult:
    task_id: str
    digest: str
    compute_s: float
    executed_by: str


@dataclass(frozen=True)
class FaultProfile:
    crash_prob: float = 0.0
    byzantine_prob: float = 0.0
    drop_prob: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("crash_prob", "byzantine_prob", "drop_prob"):
            p = getattr(self, name)
            if not (0.0 <= p <= 1.0):
                raise ValueError(f"{name} must be in [0, 1]")


class FaultOutcome(Enum):
    HONEST = "honest"
    CORRUPTED = "corrupted"
    CRASHED = "crashed"


def execute_kernel(spec: TaskSpec, per_op_cost_s: float = SPEED_CLASSES["worker"],
                   node_id: str = "local",
                   precision: int = DEFAULT_PRECISION) -> TaskResult:
    """Deterministic execution: the digest depends only on (kernel, size, seed);
    the simulated compute time scales with the node's per-op cost."""
    digest = kernel_digest(spec.kernel, spec.size, spec.seed, precision)
    return TaskResult(
        task_id=spec.task_id,
        digest=digest,
        compute_s=spec.size * per_op_cost_s,
        executed_by=node_id,
    )


def perturb_digest(digest: str, rng: random.Random) -> str:
    """Deterministic corruption: flip one hex nibble, guaranteed different."""
    pos = rng.randrange(len(digest))
    nibble = int(digest[pos], 16) ^ (1 + rng.randrange(15))
    return digest[:pos] + format(nibble, "x") + digest[pos + 1:]


def fault_rng(profile: FaultProfile, task_id: str, node_id: str) -> random.Random:
    return random.Random(stable_seed(profile.rng_seed, "fault", task_id, node_id))


def apply_faults(profile: FaultProfile, result: TaskResult,
                 rng: random.Random) -> tuple[FaultOutcome, TaskResult | None]:
    """Crash wins over corruption; draws come in a fixed order so a seeded
    stream replays exactly."""
    crash_draw = rng.random()
    byz_draw = rng.random()
    if crash_draw < profile.crash_prob:
        return FaultOutcome.CRASHED, None
    if byz_draw < profile.byzantine_prob:
        return FaultOutcome.CORRUPTED, replace(result, digest=perturb_digest(result.digest, rng))
    return FaultOutcome.HONEST, result


@dataclass
class _Assignment:
    cluster_id: int
    generation: int
    leader: str
    members: tuple[str, ...]
    vote_mode: str


class WorkerActor:
    """Bus-driven worker; the same code runs under the simulated and the
    wall-clock scheduler."""

    def __init__(self, node_id: str, schedule: DutyCycleSchedule, bus, scheduler,
                 fault_profile: FaultProfile = FaultProfile(),
                 per_op_cost_s: float = SPEED_CLASSES["worker"],
                 precision: int = DEFAULT_PRECISION):
        self.node_id = node_id
        self.schedule = schedule
        self.bus = bus
        self.scheduler = scheduler
        self.fault_profile = fault_profile
        self.per_op_cost_s = per_op_cost_s
        self.precision = precision

        self.alive = True
        self.awake = False
        self.window_end = math.inf
        self.active_seconds = 0.0
        self._awake_since: float | None = None
        self.publish_log: list[tuple[float, str]] = []  # (time, topic), for invariants

        self.assignment: _Assignment | None = None
        self._queue: deque[dict] = deque()
        self._current: dict | None = None  # dispatch payload being executed
        self._remaining_s = 0.0
        self._exec_started: float | None = None  # accruing since (None = not running)
        self._finish_handle = None
        self._tallies: dict[str, VoteTally] = {}  # leader-side voting

    # -- lifecycle -----------------------------------------------------------

    def start(self) -> None:
        self.bus.subscribe(wire.node_topic(self.node_id), self.node_id, self._on_message)
        always_on = self.schedule.awake_fraction >= 1.0
        first_wake = 0.0 if always_on else self.schedule.phase_s
        if first_wake < self.scheduler.now:
            first_wake = next_window_start(self.schedule, self.scheduler.now)
        self.scheduler.call_at(max(first_wake, self.scheduler.now), self._on_wake)

    def kill(self, *_args) -> None:
        """Hard node failure: no more keep-alives, no more work."""
        self.alive = False
        self._note_sleep_accounting()
        self.awake = False
        if self._finish_handle is not None:
            self._finish_handle.cancel()
            self._finish_handle = None

    def finalize(self, horizon_s: float) -> None:
        """Close the awake-seconds accounting at the end of a run."""
        if self.awake and self._awake_since is not None:
            self.active_seconds += max(0.0, horizon_s - self._awake_since)
            self._awake_since = horizon_s

    # -- wake/sleep ------------------------------------------------------------

    def _on_wake(self) -> None:
        if not self.alive:
            return
        now = self.scheduler.now
        self.awake = True
        self._awake_since = now
        if self.schedule.awake_fraction >= 1.0:
            self.window_end = math.inf
            self.scheduler.call_later(self.schedule.period_s, self._emit_keepalive_tick)
        else:
            self.window_end = now + self.schedule.window_s
            self.scheduler.call_at(self.window_end, self._on_sleep)
        self._publish(wire.KEEPALIVE_TOPIC, wire.keepalive(
            self.node_id, self.schedule.period_s, self.schedule.awake_fraction, now))
        self._drain_messages()
        self._advance_execution()

    def _emit_keepalive_tick(self) -> None:
        # always-on nodes have no wake edges; keep-alives ride a plain timer
        if not self.alive:
            return
        self._publish(wire.KEEPALIVE_TOPIC, wire.keepalive(
            self.node_id, self.schedule.period_s, self.schedule.awake_fraction,
            self.scheduler.now))
        self.scheduler.call_later(self.schedule.period_s, self._emit_keepalive_tick)

    def _on_sleep(self) -> None:
        if not self.alive or not self.awake:
            return
        now = self.scheduler.now
        self._note_sleep_accounting()
        self.awake = False
        if self._current is not None and self._exec_started is not None:
            # pause: bank the compute done in this window, resume next wake
            if self._finish_handle is not None:
                self._finish_handle.cancel()
                self._finish_handle = None
            self._remaining_s = max(0.0, self._remaining_s - (now - self._exec_started))
            self._exec_started = None
        self.scheduler.call_at(next_window_start(self.schedule, now), self._on_wake)

    def _note_sleep_accounting(self) -> None:
        if self.awake and self._awake_since is not None:
            self.active_seconds += self.scheduler.now - self._awake_since
            self._awake_since = None

    # -- messaging -------------------------------------------------------------

    def _publish(self, topic: str, payload: dict) -> None:
        self.publish_log.append((self.scheduler.now, topic))
        self.bus.publish(topic, wire.encode(payload))

    def _on_message(self, _topic: str) -> None:
        if self.alive and self.awake:
            self._drain_messages()
            self._advance_execution()

    def _topics(self) -> list[str]:
        topics = [wire.node_topic(self.node_id)]
        a = self.assignment
        if a is not None:
            topics.append(wire.group_topic(a.cluster_id))
            if a.leader == self.node_id:
                topics.append(wire.leader_topic(a.cluster_id))
        return topics

    def _drain_messages(self) -> None:
        for topic in self._topics():
            while self.alive and self.awake:
                try:
                    envelope = self.bus.consume(topic, self.node_id)
                except Exception:
                    break  # transport error: retry next window
                if envelope is None:
                    break
                if self._dropped(envelope.message_id):
                    continue  # lost in transit; redelivered after the timeout
                self._handle(wire.decode(envelope.payload))
                self.bus.ack(envelope.message_id, self.node_id, envelope.delivery_tag)

    def _dropped(self, message_id: str) -> bool:
        if self.fault_profile.drop_prob <= 0.0:
            return False
        rng = random.Random(stable_seed(
            self.fault_profile.rng_seed, "drop", self.node_id, message_id))
        return rng.random() < self.fault_profile.drop_prob

    def _handle(self, payload: dict) -> None:
        kind = payload.get("kind")
        if kind == "cluster_assign":
            self._apply_assignment(payload)
        elif kind == "leader_grant":
            pass  # the grant accompanies an assignment carrying the same facts
        elif kind == "dispatch":
            a = self.assignment
            if a is None or payload["generation"] != a.generation:
                return  # stale plan generation
            self._queue.append(payload)
        elif kind == "result":
            self._leader_collect(payload)

    def _apply_assignment(self, payload: dict) -> None:
        new = _Assignment(
            cluster_id=payload["cluster_id"],
            generation=payload["generation"],
            leader=payload["leader"],
            members=tuple(payload["members"]),
            vote_mode=payload.get("vote_mode", "dispatcher"),
        )
        old = self.assignment
        if old is not None and old.generation >= new.generation:
            return
        if old is not None and old.cluster_id != new.cluster_id:
            self.bus.unsubscribe(wire.group_topic(old.cluster_id), self.node_id)
        if old is not None and old.leader == self.node_id and (
                new.leader != self.node_id or new.cluster_id != old.cluster_id):
            self.bus.unsubscribe(wire.leader_topic(old.cluster_id), self.node_id)
        self.assignment = new
        self._tallies.clear()
        self._queue = deque(d for d in self._queue if d["generation"] >= new.generation)
        self.bus.subscribe(wire.group_topic(new.cluster_id), self.node_id, self._on_message)
        if new.leader == self.node_id:
            # granted leadership: take over the cluster's fixed channel
            self.bus.subscribe(wire.leader_topic(new.cluster_id), self.node_id, self._on_message)

    # -- execution ---------------------------------------------------------------

    def _advance_execution(self) -> None:
        if not self.alive or not self.awake or self._exec_started is not None:
            return
        if self._current is None:
            if not self._queue:
                return
            self._current = self._queue.popleft()
            self._remaining_s = self._current["size"] * self.per_op_cost_s
        now = self.scheduler.now
        self._exec_started = now
        finish_at = now + self._remaining_s
        if finish_at < self.window_end:
            self._finish_handle = self.scheduler.call_at(finish_at, self._finish_current)
        # else: runs to the window edge; _on_sleep banks the progress

    def _finish_current(self) -> None:
        self._finish_handle = None
        self._exec_started = None
        if not self.alive or self._current is None:
            return
        dispatch = self._current
        self._current = None
        self._remaining_s = 0.0
        self._complete(dispatch)
        self._advance_execution()

    def _complete(self, dispatch: dict) -> None:
        a = self.assignment
        if a is None:
            return
        spec = TaskSpec(task_id=dispatch["task_id"], kernel=dispatch["kernel"],
                        size=dispatch["size"], seed=dispatch["seed"])
        try:
            result = execute_kernel(spec, self.per_op_cost_s, self.node_id, self.precision)
        except UnknownKernelError:
            self._publish_result(wire.task_result(
                spec.task_id, "", 0.0, self.node_id, a.cluster_id,
                dispatch["generation"], status="error"))
            return
        rng = fault_rng(self.fault_profile, spec.task_id, self.node_id)
        outcome, final = apply_faults(self.fault_profile, result, rng)
        if outcome is FaultOutcome.CRASHED:
            return  # blocked during execution: no response for this task
        self._publish_result(wire.task_result(
            spec.task_id, final.digest, final.compute_s, self.node_id,
            a.cluster_id, dispatch["generation"]))

    def _publish_result(self, payload: dict) -> None:
        a = self.assignment
        if a is not None and a.vote_mode == "leader":
            self._publish(wire.leader_topic(a.cluster_id), payload)
        else:
            self._publish(wire.RESULTS_TOPIC, payload)

    # -- leader-side voting --------------------------------------------------------

    def _leader_collect(self, payload: dict) -> None:
        a = self.assignment
        if a is None or a.leader != self.node_id or a.vote_mode != "leader":
            return
        if payload["generation"] != a.generation or payload["cluster_id"] != a.cluster_id:
            return
        task_id = payload["task_id"]
        tally = self._tallies.get(task_id)
        if tally is None:
            tally = self._tallies[task_id] = VoteTally(task_id=task_id,
                                                       members=frozenset(a.members))
        before = tally.decision
        if payload.get("status") == "error":
            tally.record_failure(payload["node_id"])
        else:
            tally.record_response(payload["node_id"], payload["digest"])
        if before is Decision.PENDING and tally.decision is not Decision.PENDING:
            digest = tally.accepted_digest
            if tally.decision is Decision.ACCEPTED and digest is not None:
                # a byzantine leader corrupts the decision it reports upstream
                rng = fault_rng(self.fault_profile, task_id, self.node_id)
                outcome, _ = apply_faults(
                    self.fault_profile,
                    TaskResult(task_id, digest, 0.0, self.node_id), rng)
                if outcome is FaultOutcome.CORRUPTED:
                    digest = perturb_digest(digest, rng)
                elif outcome is FaultOutcome.CRASHED:
                    return
            self._publish(wire.RESULTS_TOPIC, wire.leader_decision(
                task_id, tally.decision.value, digest, tally.dissent_count(),
                a.cluster_id, a.generation, self.node_id))
