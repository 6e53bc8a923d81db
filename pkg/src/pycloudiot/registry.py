"""Worker membership registry: keep-alive freshness, wake prediction, purge.

The registry is owned by the dispatcher event loop (single writer). Nodes that
miss keep-alives for longer than the timeout are tombstoned as PURGED rather
than deleted: a duty-cycled device legitimately disappears for whole periods
and must be able to rejoin with its history intact.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum

logger = logging.getLogger(__name__)

DEFAULT_KEEPALIVE_TIMEOUT_S = 30.0


class NodeStatus(Enum):
    ACTIVE = "active"
    PURGED = "purged"


@dataclass
class NodeDescriptor:
    node_id: str
    period_s: float
    awake_fraction: float
    last_seen_s: float
    status: NodeStatus = NodeStatus.ACTIVE

    def validate(self) -> None:
        if self.period_s <= 0:
            raise ValueError(f"node {self.node_id}: period_s must be > 0")
        if not (0.0 < self.awake_fraction <= 1.0):
            raise ValueError(f"node {self.node_id}: awake_fraction must be in (0, 1]")


def next_connection(desc: NodeDescriptor, as_of: float) -> float:
    """Earliest predicted wake-up strictly after `as_of`.

    Smallest last_seen + k*period (integer k >= 1) greater than as_of, so the
    prediction stays meaningful for nodes that skipped whole cycles.
    """
    k = math.floor((as_of - desc.last_seen_s) / desc.period_s) + 1
    if k < 1:
        k = 1
    t = desc.last_seen_s + k * desc.period_s
    while t <= as_of:  # float-rounding guard at exact multiples
        k += 1
        t = desc.last_seen_s + k * desc.period_s
    return t


@dataclass
class Registry:
    """Mutable registry state; one instance per dispatcher."""

    keepalive_timeout_s: float = DEFAULT_KEEPALIVE_TIMEOUT_S
    nodes: dict[str, NodeDescriptor] = field(default_factory=dict)

    def __post_init__(self):
        if self.keepalive_timeout_s <= 0:
            raise ValueError("keepalive_timeout_s must be > 0")

    def register(self, desc: NodeDescriptor, now: float) -> NodeDescriptor:
        """Insert or refresh a node; returns the stored descriptor."""
        desc.validate()
        existing = self.nodes.get(desc.node_id)
        if existing is not None and now < existing.last_seen_s:
            raise ValueError(
                f"node {desc.node_id}: register at {now} before last_seen "
                f"{existing.last_seen_s}"
            )
        stored = replace(desc, last_seen_s=now, status=NodeStatus.ACTIVE)
        self.nodes[desc.node_id] = stored
        return stored

    def record_keepalive(self, node_id: str, now: float) -> bool:
        """Refresh liveness; re-admits a purged node. Returns False (and warns)
        for unknown nodes or a clock that would move last_seen backwards."""
        node = self.nodes.get(node_id)
        if node is None:
            logger.warning("keepalive from unknown node %s ignored", node_id)
            return False
        if now < node.last_seen_s:
            logger.warning(
                "keepalive from %s at %.3f predates last_seen %.3f; ignored",
                node_id, now, node.last_seen_s,
            )
            return False
        node.last_seen_s = now
        node.status = NodeStatus.ACTIVE
        return True

    def purge_stale(self, now: float) -> list[str]:
        """Tombstone nodes silent for strictly more than the timeout.

        Returns only the ids that transitioned in this pass, so the operation
        is idempotent at a fixed `now`.
        """
        purged = []
        for node in self.nodes.values():
            if node.status is NodeStatus.ACTIVE and (now - node.last_seen_s) > self.keepalive_timeout_s:
                node.status = NodeStatus.PURGED
                purged.append(node.node_id)
        return purged

    def active_nodes(self) -> list[NodeDescriptor]:
        return [n for n in self.nodes.values() if n.status is NodeStatus.ACTIVE]

    def get(self, node_id: str) -> NodeDescriptor | None:
        return self.nodes.get(node_id)
