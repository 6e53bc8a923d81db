"""Deterministic scenario runner reproducing the performance / energy /
fault-tolerance trade-off experiments.

A Scenario fully describes one run; identical (scenario, seed) pairs produce
byte-identical CSV output. The baseline for execution-time ratios is the
reference node: the same task's compute time at the reference speed class with
no duty cycle and no network.
"""

from __future__ import annotations

import csv
import io
import json
import random
from dataclasses import dataclass, replace
from pathlib import Path

from . import wire
from .digest import stable_seed
from .dispatcher import Dispatcher, DispatcherConfig
from .dutycycle import DutyCycleSchedule
from .energy import EnergyReport, build_report
from .kernels import backend_name, kernel_digest
from .partitioner import Cluster, ClusterPlan, count_plan_cycles
from .registry import DEFAULT_KEEPALIVE_TIMEOUT_S
from .worker import SPEED_CLASSES, FaultProfile, TaskSpec, WorkerActor
from .events import SimScheduler
from .bus import SimBus

CSV_HEADER = [
    "label", "seed", "task_id", "kernel", "size", "task_seed", "status",
    "correct", "submitted_s", "decided_s", "wall_s", "ref_s", "ratio",
    "dissent", "cluster_size",
]


@dataclass(frozen=True)
class Scenario:
    label: str = "default"
    seed: int = 0
    node_count: int = 15
    period_s: float = 25.0
    awake_fraction: float = 1.0
    horizon_s: float = 3600.0
    warmup_s: float = 60.0

    worker_op_cost_s: float = SPEED_CLASSES["worker"]
    reference_op_cost_s: float = SPEED_CLASSES["reference"]

    latency_base_s: float = 0.02
    latency_jitter_s: float = 0.005

    crash_prob: float = 0.0
    byzantine_prob: float = 0.0
    drop_prob: float = 0.0

    kernel: str = "arc_dist"
    base_size: int = 80_000
    size_multipliers: tuple[int, ...] = (1, 2, 4, 8)
    tasks_per_size: int = 25
    unique_task_seeds: bool = False

    client_count: int = 3
    keepalive_timeout_s: float = DEFAULT_KEEPALIVE_TIMEOUT_S
    purge_interval_s: float = 5.0
    max_retries: int = 2
    vote_mode: str = "dispatcher"
    cluster_count_override: int | None = None
    node_failures: tuple[tuple[str, float], ...] = ()  # (node_id, kill time)

    def validate(self) -> None:
        if self.node_count < 1:
            raise ValueError("node_count must be >= 1")
        if not (0.0 < self.awake_fraction <= 1.0):
            raise ValueError("awake_fraction must be in (0, 1]")
        if self.period_s <= 0 or self.horizon_s <= 0:
            raise ValueError("period_s and horizon_s must be > 0")
        if self.base_size < 0 or self.tasks_per_size < 0:
            raise ValueError("workload sizes must be >= 0")
        if self.vote_mode not in ("dispatcher", "leader"):
            raise ValueError("vote_mode must be 'dispatcher' or 'leader'")
        if self.client_count < 1:
            raise ValueError("client_count must be >= 1")

    @staticmethod
    def from_dict(data: dict) -> "Scenario":
        if "size_multipliers" in data:
            data = {**data, "size_multipliers": tuple(data["size_multipliers"])}
        if "node_failures" in data:
            data = {**data, "node_failures": tuple(
                (str(n), float(t)) for n, t in data["node_failures"])}
        scenario = Scenario(**data)
        scenario.validate()
        return scenario

    @staticmethod
    def from_file(path: str | Path) -> "Scenario":
        path = Path(path)
        if path.suffix == ".toml":
            try:
                import tomllib
            except ImportError:  # python < 3.11
                import tomli as tomllib
            data = tomllib.loads(path.read_text())
        else:
            data = json.loads(path.read_text())
        return Scenario.from_dict(data)


@dataclass
class TaskRow:
    task_id: str
    kernel: str
    size: int
    task_seed: int
    status: str
    correct: bool
    submitted_s: float | None
    decided_s: float | None
    wall_s: float | None
    ref_s: float
    ratio: float | None
    dissent: int
    cluster_size: int


@dataclass
class MetricsReport:
    label: str
    seed: int
    backend: str
    rows: list[TaskRow]
    mean_ratio_by_size: dict[int, float]
    error_rate: float
    energy: EnergyReport
    cycle_gain_pct: float | None
    observed_horizon_s: float
    active_seconds_by_node: dict[str, float]
    notifications_per_task: dict[str, int]

    def summary(self) -> dict:
        return {
            "label": self.label,
            "seed": self.seed,
            "backend": self.backend,
            "tasks": len(self.rows),
            "error_rate": self.error_rate,
            "mean_ratio_by_size": {str(k): v for k, v in sorted(self.mean_ratio_by_size.items())},
            "energy_total_j": self.energy.total_j,
            "energy_reduction_pct": self.energy.reduction_pct,
            "cycle_gain_pct": self.cycle_gain_pct,
            "observed_horizon_s": self.observed_horizon_s,
        }


class _ClientActor:
    """Closed-loop client: submits its next task once the previous resolved."""

    def __init__(self, client_id: str, bus, scheduler, tasks: list[TaskSpec],
                 start_at: float):
        self.client_id = client_id
        self.bus = bus
        self.scheduler = scheduler
        self.tasks = tasks
        self.start_at = start_at
        self.submitted_at: dict[str, float] = {}
        self.completed_at: dict[str, float] = {}
        self.outcomes: dict[str, dict] = {}
        self.notification_counts: dict[str, int] = {}
        self._next = 0

    def start(self) -> None:
        self.bus.subscribe(wire.client_result_topic(self.client_id),
                           self.client_id, self._on_message)
        self.scheduler.call_at(self.start_at, self._submit_next)

    @property
    def done(self) -> bool:
        return self._next >= len(self.tasks) and len(self.completed_at) >= len(self.tasks)

    def _submit_next(self) -> None:
        if self._next >= len(self.tasks):
            return
        spec = self.tasks[self._next]
        self._next += 1
        self.submitted_at[spec.task_id] = self.scheduler.now
        self.bus.publish(wire.TASKS_TOPIC, wire.encode(wire.task_submission(
            spec.task_id, spec.kernel, spec.size, spec.seed, self.client_id)))

    def _on_message(self, topic: str) -> None:
        while True:
            envelope = self.bus.consume(topic, self.client_id)
            if envelope is None:
                return
            payload = wire.decode(envelope.payload)
            task_id = payload["task_id"]
            self.notification_counts[task_id] = self.notification_counts.get(task_id, 0) + 1
            if task_id not in self.completed_at:
                self.completed_at[task_id] = self.scheduler.now
                self.outcomes[task_id] = payload
                self._submit_next()
            self.bus.ack(envelope.message_id, self.client_id, envelope.delivery_tag)


def _build_workload(scenario: Scenario) -> list[TaskSpec]:
    tasks: list[TaskSpec] = []
    sizes = [scenario.base_size * m for m in scenario.size_multipliers]
    idx = 0
    for round_i in range(scenario.tasks_per_size):
        for size_i, size in enumerate(sizes):
            if scenario.unique_task_seeds:
                seed = stable_seed(scenario.seed, "task-seed", size_i, round_i)
            else:
                seed = stable_seed(scenario.seed, "task-seed", size_i)
            tasks.append(TaskSpec(task_id=f"t{idx:05d}", kernel=scenario.kernel,
                                  size=size, seed=seed))
            idx += 1
    return tasks


def _naive_plan(plan: ClusterPlan, node_ids: list[str]) -> ClusterPlan:
    """Arrival-order grouping with the same cluster sizes: the pre-optimization
    baseline for the cycle-gain figure."""
    sizes = [c.size for c in plan.clusters]
    clusters = []
    pos = 0
    for i, size in enumerate(sizes):
        members = tuple(node_ids[pos:pos + size])
        pos += size
        clusters.append(Cluster(cluster_id=i + 1, leader=members[0], members=members))
    return ClusterPlan(clusters=tuple(clusters), generation=0)


def run_scenario(scenario: Scenario) -> MetricsReport:
    scenario.validate()
    scheduler = SimScheduler()
    bus = SimBus(scheduler,
                 latency_base_s=scenario.latency_base_s,
                 latency_jitter_s=scenario.latency_jitter_s,
                 seed=stable_seed(scenario.seed, "bus"),
                 visibility_timeout_s=2 * scenario.keepalive_timeout_s)
    config = DispatcherConfig(
        keepalive_timeout_s=scenario.keepalive_timeout_s,
        purge_interval_s=scenario.purge_interval_s,
        max_retries=scenario.max_retries,
        vote_mode=scenario.vote_mode,
        worker_op_cost_s=scenario.worker_op_cost_s,
        cluster_count_override=scenario.cluster_count_override,
    )
    dispatcher = Dispatcher(bus, scheduler, config)
    dispatcher.start()

    phase_rng = random.Random(stable_seed(scenario.seed, "phases"))
    profile = FaultProfile(crash_prob=scenario.crash_prob,
                           byzantine_prob=scenario.byzantine_prob,
                           drop_prob=scenario.drop_prob,
                           rng_seed=stable_seed(scenario.seed, "faults"))
    workers: list[WorkerActor] = []
    for i in range(scenario.node_count):
        schedule = DutyCycleSchedule(
            period_s=scenario.period_s,
            awake_fraction=scenario.awake_fraction,
            phase_s=phase_rng.uniform(0.0, scenario.period_s),
        )
        worker = WorkerActor(f"n{i:03d}", schedule, bus, scheduler,
                             fault_profile=profile,
                             per_op_cost_s=scenario.worker_op_cost_s)
        workers.append(worker)
        worker.start()
    by_id = {w.node_id: w for w in workers}
    for node_id, kill_at in scenario.node_failures:
        if node_id in by_id:
            scheduler.call_at(kill_at, by_id[node_id].kill)

    workload = _build_workload(scenario)
    clients = []
    for ci in range(scenario.client_count):
        tasks = [t for i, t in enumerate(workload) if i % scenario.client_count == ci]
        client = _ClientActor(f"c{ci}", bus, scheduler, tasks, scenario.warmup_s)
        clients.append(client)
        client.start()

    # chunked run with early exit once every client is done
    chunk = max(scenario.period_s * 2, 60.0)
    t = 0.0
    while t < scenario.horizon_s:
        t = min(t + chunk, scenario.horizon_s)
        scheduler.run(until=t)
        if all(c.done for c in clients):
            break
    observed_horizon = scheduler.now
    for worker in workers:
        worker.finalize(observed_horizon)

    # assemble per-task rows
    rows: list[TaskRow] = []
    submitted = {}
    completed = {}
    outcomes = {}
    notification_counts: dict[str, int] = {}
    for client in clients:
        submitted.update(client.submitted_at)
        completed.update(client.completed_at)
        outcomes.update(client.outcomes)
        notification_counts.update(client.notification_counts)
    errors = 0
    for spec in workload:
        record = dispatcher.records.get(spec.task_id)
        honest = kernel_digest(spec.kernel, spec.size, spec.seed)
        outcome = outcomes.get(spec.task_id)
        sub = submitted.get(spec.task_id)
        done = completed.get(spec.task_id)
        if outcome is None:
            status = "unresolved"
            correct = False
            dissent = 0
        else:
            status = outcome["status"]
            correct = status == "accepted" and outcome["digest"] == honest
            dissent = outcome["dissent_count"]
        if not correct:
            errors += 1
        wall = (done - sub) if (sub is not None and done is not None) else None
        ref_s = spec.size * scenario.reference_op_cost_s
        ratio = (wall / ref_s) if (wall is not None and ref_s > 0 and status == "accepted") else None
        cluster_size = 0
        if record is not None and record.cluster_id is not None:
            cluster = next((c for c in dispatcher.plan.clusters
                            if c.cluster_id == record.cluster_id), None)
            cluster_size = cluster.size if cluster else 0
        rows.append(TaskRow(spec.task_id, spec.kernel, spec.size, spec.seed,
                            status, correct, sub, done, wall, ref_s, ratio,
                            dissent, cluster_size))

    by_size: dict[int, list[float]] = {}
    for row in rows:
        if row.ratio is not None:
            by_size.setdefault(row.size, []).append(row.ratio)
    mean_ratio = {size: sum(v) / len(v) for size, v in by_size.items() if v}

    active = {w.node_id: w.active_seconds for w in workers}
    energy = build_report(active, observed_horizon)

    gain = None
    if dispatcher.plan.clusters:
        schedules = {w.node_id: w.schedule for w in workers}
        planned_ids = sorted(dispatcher.plan.node_ids)
        naive = _naive_plan(dispatcher.plan, planned_ids)
        horizon = min(observed_horizon, 40 * scenario.period_s)
        before = count_plan_cycles(naive, schedules, horizon)
        after = count_plan_cycles(dispatcher.plan, schedules, horizon)
        gain = 100.0 * (after - before) / before if before else None

    return MetricsReport(
        label=scenario.label,
        seed=scenario.seed,
        backend=backend_name(),
        rows=rows,
        mean_ratio_by_size=mean_ratio,
        error_rate=errors / len(workload) if workload else 0.0,
        energy=energy,
        cycle_gain_pct=gain,
        observed_horizon_s=observed_horizon,
        active_seconds_by_node=active,
        notifications_per_task=notification_counts,
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".6f")
    return str(value)


def report_to_csv(reports: list[MetricsReport]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for report in reports:
        for row in report.rows:
            writer.writerow([
                report.label, report.seed, row.task_id, row.kernel, row.size,
                row.task_seed, row.status, _fmt(row.correct),
                _fmt(row.submitted_s), _fmt(row.decided_s), _fmt(row.wall_s),
                _fmt(row.ref_s), _fmt(row.ratio), row.dissent, row.cluster_size,
            ])
    return out.getvalue()


SWEEP_AXES = ("duty_cycle", "cluster_size", "task_size")


def sweep(base: Scenario, axis: str, values: list) -> list[MetricsReport]:
    """One run per axis value, shared seed. cluster_size points pin node_count
    to the target size in a single forced cluster."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"axis must be one of {SWEEP_AXES}")
    reports = []
    for value in values:
        if axis == "duty_cycle":
            scenario = replace(base, awake_fraction=float(value),
                               label=f"{base.label}[dc={value}]")
        elif axis == "cluster_size":
            scenario = replace(base, node_count=int(value),
                               cluster_count_override=1,
                               label=f"{base.label}[n={value}]")
        else:
            scenario = replace(base, base_size=int(value), size_multipliers=(1,),
                               label=f"{base.label}[size={value}]")
        reports.append(run_scenario(scenario))
    return reports
