"""Plain HTTP gateway for environments without a broker.

Runs a live deployment (wall-clock scheduler, retained-message bus, dispatcher,
simulated workers) and exposes task submission/polling over HTTP. Submissions
are published to the task topic, so they survive a paused or restarting
dispatcher exactly like any other retained message.
"""

from __future__ import annotations

import threading
import uuid

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import wire
from .bus import SimBus
from .dispatcher import Dispatcher, DispatcherConfig
from .dutycycle import DutyCycleSchedule
from .events import RealTimeScheduler
from .kernels import kernel_names
from .worker import FaultProfile, WorkerActor

GATEWAY_CLIENT_ID = "gateway"


class LiveDeployment:
    """Dispatcher plus simulated workers on a wall-clock scheduler."""

    def __init__(self, node_count: int = 5, awake_fraction: float = 1.0,
                 period_s: float = 1.0, vote_mode: str = "dispatcher",
                 worker_op_cost_s: float = 1e-6, keepalive_timeout_s: float = 30.0,
                 bus=None):
        self.scheduler = RealTimeScheduler()
        if bus is None:
            bus = SimBus(self.scheduler, latency_base_s=0.002,
                         latency_jitter_s=0.001,
                         visibility_timeout_s=2 * keepalive_timeout_s)
        elif hasattr(bus, "attach_scheduler"):
            bus.attach_scheduler(self.scheduler)
        self.bus = bus
        self.dispatcher = Dispatcher(self.bus, self.scheduler, DispatcherConfig(
            keepalive_timeout_s=keepalive_timeout_s,
            purge_interval_s=max(1.0, period_s),
            vote_mode=vote_mode,
            worker_op_cost_s=worker_op_cost_s,
        ))
        self.workers = [
            WorkerActor(f"n{i:03d}",
                        DutyCycleSchedule(period_s=period_s,
                                          awake_fraction=awake_fraction,
                                          phase_s=(i * period_s / max(1, node_count))
                                          if awake_fraction < 1.0 else 0.0),
                        self.bus, self.scheduler,
                        fault_profile=FaultProfile(),
                        per_op_cost_s=worker_op_cost_s)
            for i in range(node_count)
        ]
        self._results: dict[str, dict] = {}
        self._submitted: set[str] = set()
        self._lock = threading.Lock()
        self._started = False

    def start(self) -> None:
        if self._started:
            return
        self._started = True
        self.scheduler.start()
        self.bus.subscribe(wire.client_result_topic(GATEWAY_CLIENT_ID),
                           GATEWAY_CLIENT_ID, self._on_result)
        self.dispatcher.start()
        for worker in self.workers:
            worker.start()

    def stop(self) -> None:
        if self._started:
            self.scheduler.stop()
            self._started = False

    def _on_result(self, topic: str) -> None:
        while True:
            envelope = self.bus.consume(topic, GATEWAY_CLIENT_ID)
            if envelope is None:
                return
            payload = wire.decode(envelope.payload)
            with self._lock:
                self._results[payload["task_id"]] = payload
            self.bus.ack(envelope.message_id, GATEWAY_CLIENT_ID, envelope.delivery_tag)

    # -- gateway operations --------------------------------------------------

    def submit(self, kernel: str, size: int, seed: int,
               task_id: str | None = None) -> str:
        task_id = task_id or f"g-{uuid.uuid4().hex[:12]}"
        with self._lock:
            if task_id in self._submitted:
                raise ValueError(f"duplicate task id {task_id}")
            self._submitted.add(task_id)
        self.bus.publish(wire.TASKS_TOPIC, wire.encode(wire.task_submission(
            task_id, kernel, size, seed, GATEWAY_CLIENT_ID)))
        return task_id

    def status(self, task_id: str) -> dict | None:
        with self._lock:
            if task_id not in self._submitted:
                return None
            result = self._results.get(task_id)
        if result is None:
            return {"task_id": task_id, "status": "pending", "digest": None,
                    "dissent_count": 0, "wall_time_s": None}
        return {"task_id": task_id, "status": result["status"],
                "digest": result["digest"],
                "dissent_count": result["dissent_count"],
                "wall_time_s": result["wall_time_s"]}

    def plan_snapshot(self) -> dict:
        plan = self.dispatcher.plan
        return {
            "generation": plan.generation,
            "clusters": [
                {"cluster_id": c.cluster_id, "leader": c.leader,
                 "members": list(c.members)}
                for c in plan.clusters
            ],
        }


class TaskRequest(BaseModel):
    kernel: str
    size: int = Field(ge=0)
    seed: int = 0
    task_id: str | None = None
    name: str | None = None


def create_app(deployment: LiveDeployment) -> FastAPI:
    app = FastAPI(title="pycloudiot gateway")

    @app.get("/health")
    def health():
        return {"status": "ok",
                "dispatcher_running": deployment.dispatcher.running,
                "kernels": kernel_names()}

    @app.post("/v1/tasks", status_code=202)
    def submit(req: TaskRequest):
        if req.kernel not in kernel_names():
            raise HTTPException(status_code=400, detail=f"unknown kernel {req.kernel}")
        try:
            task_id = deployment.submit(req.kernel, req.size, req.seed, req.task_id)
        except ValueError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return {"task_id": task_id, "status": "submitted"}

    @app.get("/v1/tasks/{task_id}")
    def status(task_id: str):
        found = deployment.status(task_id)
        if found is None:
            raise HTTPException(status_code=404, detail="unknown task")
        return found

    @app.get("/v1/plan")
    def plan():
        return deployment.plan_snapshot()

    @app.post("/v1/admin/dispatcher/stop")
    def stop_dispatcher():
        deployment.dispatcher.pause()
        return {"running": False}

    @app.post("/v1/admin/dispatcher/start")
    def start_dispatcher():
        deployment.dispatcher.resume()
        return {"running": True}

    return app


def serve(host: str = "127.0.0.1", port: int = 8099, node_count: int = 5,
          awake_fraction: float = 1.0, period_s: float = 1.0,
          vote_mode: str = "dispatcher", worker_op_cost_s: float = 1e-6,
          broker_url: str | None = None) -> None:
    import uvicorn

    bus = None
    if broker_url:
        from .mqtt_adapter import MqttBus
        bus = MqttBus(broker_url)
    deployment = LiveDeployment(node_count=node_count,
                                awake_fraction=awake_fraction,
                                period_s=period_s, vote_mode=vote_mode,
                                worker_op_cost_s=worker_op_cost_s, bus=bus)
    deployment.start()
    try:
        uvicorn.run(create_app(deployment), host=host, port=port, log_level="warning")
    finally:
        deployment.stop()
