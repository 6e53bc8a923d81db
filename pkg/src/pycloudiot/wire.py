"""Topic scheme and JSON payload schemas shared by all actors.

This module is the single source of truth for the wire protocol; the client
SDK and the HTTP gateway speak exactly these schemas.

Topics:
    pcio/tasks                  client -> dispatcher task submissions
    pcio/keepalive              workers -> dispatcher liveness
    pcio/cluster/<k>/group      dispatcher -> all members of cluster k
    pcio/cluster/<k>/leader     messages for whoever currently leads cluster k
    pcio/node/<id>              unicast control (assignments, leader grants)
    pcio/client/<id>/result     dispatcher -> client terminal notifications
    pcio/results                workers/leaders -> dispatcher result stream
"""

from __future__ import annotations

import json

TASKS_TOPIC = "pcio/tasks"
KEEPALIVE_TOPIC = "pcio/keepalive"
RESULTS_TOPIC = "pcio/results"


def group_topic(cluster_id: int) -> str:
    return f"pcio/cluster/{cluster_id}/group"


def leader_topic(cluster_id: int) -> str:
    return f"pcio/cluster/{cluster_id}/leader"


def node_topic(node_id: str) -> str:
    return f"pcio/node/{node_id}"


def client_result_topic(client_id: str) -> str:
    return f"pcio/client/{client_id}/result"


def encode(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


def decode(raw: bytes) -> dict:
    return json.loads(raw.decode("utf-8"))


def keepalive(node_id: str, period_s: float, awake_fraction: float, timestamp: float) -> dict:
    return {
        "kind": "keepalive",
        "node_id": node_id,
        "period_s": period_s,
        "awake_fraction": awake_fraction,
        "timestamp": timestamp,
    }


def task_submission(task_id: str, kernel: str, size: int, seed: int,
                    client_id: str) -> dict:
    return {
        "kind": "task",
        "task_id": task_id,
        "kernel": kernel,
        "size": size,
        "seed": seed,
        "client_id": client_id,
    }


def dispatch(task_id: str, kernel: str, size: int, seed: int, generation: int) -> dict:
    return {
        "kind": "dispatch",
        "task_id": task_id,
        "kernel": kernel,
        "size": size,
        "seed": seed,
        "generation": generation,
    }


def cluster_assignment(node_id: str, cluster_id: int, generation: int,
                       leader: str, members: list[str], vote_mode: str) -> dict:
    return {
        "kind": "cluster_assign",
        "node_id": node_id,
        "cluster_id": cluster_id,
        "generation": generation,
        "leader": leader,
        "members": members,
        "vote_mode": vote_mode,
    }


def leader_grant(node_id: str, cluster_id: int, generation: int) -> dict:
    return {
        "kind": "leader_grant",
        "node_id": node_id,
        "cluster_id": cluster_id,
        "generation": generation,
    }


def task_result(task_id: str, digest: str, compute_s: float, node_id: str,
                cluster_id: int, generation: int, status: str = "ok") -> dict:
    return {
        "kind": "result",
        "task_id": task_id,
        "digest": digest,
        "compute_s": compute_s,
        "node_id": node_id,
        "cluster_id": cluster_id,
        "generation": generation,
        "status": status,
    }


def leader_decision(task_id: str, decision: str, digest: str | None,
                    dissent_count: int, cluster_id: int, generation: int,
                    leader: str) -> dict:
    return {
        "kind": "leader_decision",
        "task_id": task_id,
        "decision": decision,
        "digest": digest,
        "dissent_count": dissent_count,
        "cluster_id": cluster_id,
        "generation": generation,
        "node_id": leader,
    }


def client_notification(task_id: str, status: str, digest: str | None,
                        dissent_count: int, wall_time_s: float) -> dict:
    return {
        "kind": "task_update",
        "task_id": task_id,
        "status": status,
        "digest": digest,
        "dissent_count": dissent_count,
        "wall_time_s": wall_time_s,
    }
