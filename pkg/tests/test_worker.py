"""Worker actor: wake-window accrual, keep-alives, fault behavior on the bus."""

import pytest

from pycloudiot import wire
from pycloudiot.bus import SimBus
from pycloudiot.dutycycle import DutyCycleSchedule, is_awake
from pycloudiot.events import SimScheduler
from pycloudiot.kernels import kernel_digest
from pycloudiot.worker import FaultProfile, WorkerActor


def harness(schedule, fault_profile=FaultProfile(), per_op_cost_s=1.0,
            latency=0.0):
    scheduler = SimScheduler()
    bus = SimBus(scheduler, latency_base_s=latency, latency_jitter_s=0.0, seed=5,
                 visibility_timeout_s=60.0)
    worker = WorkerActor("w1", schedule, bus, scheduler,
                         fault_profile=fault_profile, per_op_cost_s=per_op_cost_s)
    bus.subscribe(wire.RESULTS_TOPIC, "observer")
    bus.subscribe(wire.KEEPALIVE_TOPIC, "observer")
    worker.start()
    return scheduler, bus, worker


def assign(bus, worker, generation=1, members=("w1",), leader="w1",
           vote_mode="dispatcher"):
    bus.publish(wire.node_topic(worker.node_id), wire.encode(
        wire.cluster_assignment(worker.node_id, 1, generation, leader,
                                list(members), vote_mode)))


def dispatch(bus, task_id="t1", size=2, seed=9, generation=1, kernel="arc_dist"):
    bus.publish(wire.group_topic(1), wire.encode(
        wire.dispatch(task_id, kernel, size, seed, generation)))


def drain(bus, topic):
    out = []
    while True:
        envelope = bus.consume(topic, "observer")
        if envelope is None:
            return out
        out.append((envelope.enqueued_at, wire.decode(envelope.payload)))
        bus.ack(envelope.message_id, "observer", envelope.delivery_tag)


class TestExecutionTiming:
    def test_always_on_task_completes_after_compute_time(self):
        scheduler, bus, worker = harness(DutyCycleSchedule(10.0, 1.0),
                                         per_op_cost_s=1.0)
        assign(bus, worker)
        dispatch(bus, size=2)
        scheduler.run(until=30.0)
        results = drain(bus, wire.RESULTS_TOPIC)
        assert len(results) == 1
        published_at, payload = results[0]
        assert payload["task_id"] == "t1"
        assert published_at == pytest.approx(2.0, abs=0.01)  # compute + ~latency

    def test_task_spanning_windows_resumes_without_restart(self):
        # 10% duty cycle, period 100: [0,10), [100,110). A 15s task started at
        # t=0 banks 10s in the first window and finishes at t=105.
        scheduler, bus, worker = harness(DutyCycleSchedule(100.0, 0.10),
                                         per_op_cost_s=1.0)
        assign(bus, worker)
        dispatch(bus, size=15)
        scheduler.run(until=200.0)
        results = drain(bus, wire.RESULTS_TOPIC)
        assert len(results) == 1
        published_at, _ = results[0]
        assert published_at == pytest.approx(105.0, abs=0.01)

    def test_message_arriving_mid_execution_does_not_lose_progress(self):
        scheduler, bus, worker = harness(DutyCycleSchedule(100.0, 0.10),
                                         per_op_cost_s=1.0)
        assign(bus, worker)
        dispatch(bus, size=15)
        # noise on the group topic partway through the first window
        scheduler.call_at(5.0, lambda: dispatch(bus, task_id="t2", size=1))
        scheduler.run(until=400.0)
        results = {p["task_id"]: t for t, p in drain(bus, wire.RESULTS_TOPIC)}
        assert results["t1"] == pytest.approx(105.0, abs=0.01)
        assert results["t2"] == pytest.approx(106.0, abs=0.01)  # queued behind t1

    def test_stale_generation_dispatch_ignored(self):
        scheduler, bus, worker = harness(DutyCycleSchedule(10.0, 1.0))
        assign(bus, worker, generation=3)
        dispatch(bus, generation=2)
        scheduler.run(until=20.0)
        assert drain(bus, wire.RESULTS_TOPIC) == []


class TestKeepalives:
    def test_emitted_each_wake_window(self):
        scheduler, bus, worker = harness(DutyCycleSchedule(50.0, 0.2))
        scheduler.run(until=170.0)
        beats = drain(bus, wire.KEEPALIVE_TOPIC)
        assert [round(t) for t, _ in beats] == [0, 50, 100, 150]
        assert all(p["period_s"] == 50.0 for _, p in beats)

    def test_always_on_emits_every_period(self):
        scheduler, bus, worker = harness(DutyCycleSchedule(25.0, 1.0))
        scheduler.run(until=80.0)
        beats = drain(bus, wire.KEEPALIVE_TOPIC)
        assert [round(t) for t, _ in beats] == [0, 25, 50, 75]

    def test_killed_worker_goes_silent(self):
        scheduler, bus, worker = harness(DutyCycleSchedule(20.0, 0.5))
        scheduler.call_at(30.0, worker.kill)
        scheduler.run(until=200.0)
        beats = drain(bus, wire.KEEPALIVE_TOPIC)
        assert [round(t) for t, _ in beats] == [0, 20]


class TestTransmitWindowInvariant:
    def test_never_transmits_outside_awake_windows(self):
        schedule = DutyCycleSchedule(30.0, 0.15, phase_s=4.0)
        scheduler, bus, worker = harness(schedule, per_op_cost_s=1.0)
        assign(bus, worker)
        for i in range(6):
            dispatch(bus, task_id=f"t{i}", size=3 + i)
        scheduler.run(until=1000.0)
        assert worker.publish_log  # it did transmit
        for t, _topic in worker.publish_log:
            assert is_awake(schedule, t), f"transmission at {t} while asleep"

    def test_active_seconds_match_duty_fraction(self):
        schedule = DutyCycleSchedule(40.0, 0.25, phase_s=7.0)
        scheduler, bus, worker = harness(schedule)
        horizon = 2000.0
        scheduler.run(until=horizon)
        worker.finalize(horizon)
        assert abs(worker.active_seconds - 0.25 * horizon) <= schedule.window_s


class TestWorkerFaults:
    def test_crashed_task_produces_no_response(self):
        scheduler, bus, worker = harness(
            DutyCycleSchedule(10.0, 1.0), fault_profile=FaultProfile(crash_prob=1.0))
        assign(bus, worker)
        dispatch(bus)
        scheduler.run(until=50.0)
        assert drain(bus, wire.RESULTS_TOPIC) == []
        # keep-alives continue: the task blocked, the node did not die
        assert drain(bus, wire.KEEPALIVE_TOPIC) != []

    def test_byzantine_task_publishes_corrupted_digest(self):
        scheduler, bus, worker = harness(
            DutyCycleSchedule(10.0, 1.0),
            fault_profile=FaultProfile(byzantine_prob=1.0))
        assign(bus, worker)
        dispatch(bus, size=2, seed=9)
        scheduler.run(until=50.0)
        results = drain(bus, wire.RESULTS_TOPIC)
        honest = kernel_digest("arc_dist", 2, 9)
        assert len(results) == 1
        assert results[0][1]["digest"] != honest

    def test_unknown_kernel_reports_error_result(self):
        scheduler, bus, worker = harness(DutyCycleSchedule(10.0, 1.0))
        assign(bus, worker)
        dispatch(bus, kernel="not_a_kernel")
        scheduler.run(until=50.0)
        results = drain(bus, wire.RESULTS_TOPIC)
        assert len(results) == 1
        assert results[0][1]["status"] == "error"


class TestLeaderSideVoting:
    def test_leader_tallies_member_results(self):
        scheduler = SimScheduler()
        bus = SimBus(scheduler, latency_base_s=0.001, latency_jitter_s=0.0,
                     seed=5, visibility_timeout_s=60.0)
        bus.subscribe(wire.RESULTS_TOPIC, "observer")
        leader = WorkerActor("L", DutyCycleSchedule(10.0, 1.0), bus, scheduler,
                             per_op_cost_s=0.001)
        leader.start()
        members = ["L", "m1", "m2"]
        bus.publish(wire.node_topic("L"), wire.encode(wire.cluster_assignment(
            "L", 1, 1, "L", members, "leader")))
        bus.publish(wire.group_topic(1), wire.encode(
            wire.dispatch("t1", "arc_dist", 2, 9, 1)))
        digest = kernel_digest("arc_dist", 2, 9)
        for m in ("m1", "m2"):
            bus.publish(wire.leader_topic(1), wire.encode(wire.task_result(
                "t1", digest, 0.1, m, 1, 1)))
        scheduler.run(until=10.0)
        decisions = drain(bus, wire.RESULTS_TOPIC)
        kinds = [p["kind"] for _, p in decisions]
        assert "leader_decision" in kinds
        decision = next(p for _, p in decisions if p["kind"] == "leader_decision")
        assert decision["decision"] == "accepted"
        assert decision["digest"] == digest
