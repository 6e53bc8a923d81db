"""Pub/sub messaging with MQTT-style consume-until-acknowledged delivery.

The simulated backend keeps a full per-topic log and a per-subscriber delivery
state, giving QoS-1-like at-least-once semantics: a consumed message stays
invisible for a visibility timeout and returns to the queue unless
acknowledged. Messages published to a topic nobody has subscribed to yet are
retained and served to late subscribers, which is what lets work survive a
sleeping worker or a restarting dispatcher.

Delivery timing is deterministic: each publish draws one latency sample from a
seeded stream, and all delivery notifications run through the scheduler.
"""

from __future__ import annotations

import logging
import random
import threading
from dataclasses import dataclass, field
from enum import Enum

logger = logging.getLogger(__name__)

DEFAULT_VISIBILITY_TIMEOUT_S = 60.0  # 2x the keep-alive timeout


class DeliveryState(Enum):
    QUEUED = "queued"
    DELIVERED = "delivered"
    ACKED = "acked"


@dataclass(frozen=True)
class Envelope:
    message_id: str
    topic: str
    payload: bytes
    enqueued_at: float
    delivery_state: DeliveryState
    delivery_tag: int


@dataclass
class _Message:
    message_id: str
    topic: str
    payload: bytes
    enqueued_at: float
    available_at: float


@dataclass
class _DeliveryRecord:
    state: DeliveryState = DeliveryState.QUEUED
    deadline: float = 0.0
    tag: int = 0


@dataclass
class _Subscription:
    active: bool = True
    callback: object | None = None
    records: dict[str, _DeliveryRecord] = field(default_factory=dict)
    scan_from: int = 0  # log index of the first message not yet acked


def validate_topic(topic: str) -> str:
    if not topic:
        raise ValueError("topic must be non-empty")
    if "+" in topic or "#" in topic:
        raise ValueError(f"wildcards not allowed in publish topics: {topic}")
    return topic


class TransportError(RuntimeError):
    """Retryable backend failure."""


class SimBus:
    """Deterministic in-process backend; also safe for the live runtime
    (all operations are serialized by one lock)."""

    def __init__(self, scheduler, latency_base_s: float = 0.02,
                 latency_jitter_s: float = 0.005, seed: int = 0,
                 visibility_timeout_s: float = DEFAULT_VISIBILITY_TIMEOUT_S):
        self._scheduler = scheduler
        self._latency_base = latency_base_s
        self._latency_jitter = latency_jitter_s
        self._rng = random.Random(seed)
        self.visibility_timeout_s = visibility_timeout_s
        self._logs: dict[str, list[_Message]] = {}
        self._subs: dict[str, dict[str, _Subscription]] = {}
        self._index: dict[str, _Message] = {}
        self._counter = 0
        self._lock = threading.RLock()

    # -- subscriptions -----------------------------------------------------

    def subscribe(self, topic: str, subscriber_id: str, callback=None) -> None:
        validate_topic(topic)
        with self._lock:
            subs = self._subs.setdefault(topic, {})
            sub = subs.get(subscriber_id)
            if sub is None:
                subs[subscriber_id] = _Subscription(callback=callback)
            else:
                sub.active = True
                if callback is not None:
                    sub.callback = callback
            if self._logs.get(topic):
                self._notify_at(topic, subscriber_id, self._scheduler.now)

    def unsubscribe(self, topic: str, subscriber_id: str) -> None:
        with self._lock:
            sub = self._subs.get(topic, {}).get(subscriber_id)
            if sub is not None:
                sub.active = False  # delivery state survives for resubscription

    # -- publish / consume / ack -------------------------------------------

    def publish(self, topic: str, payload: bytes, now: float | None = None) -> str:
        validate_topic(topic)
        with self._lock:
            t = self._scheduler.now if now is None else now
            latency = self._latency_base + self._rng.uniform(0.0, self._latency_jitter)
            self._counter += 1
            msg = _Message(
                message_id=f"m{self._counter:08d}",
                topic=topic,
                payload=payload,
                enqueued_at=t,
                available_at=t + latency,
            )
            self._logs.setdefault(topic, []).append(msg)
            self._index[msg.message_id] = msg
            for sub_id, sub in self._subs.get(topic, {}).items():
                if sub.active:
                    self._notify_at(topic, sub_id, msg.available_at)
            return msg.message_id

    def consume(self, topic: str, subscriber_id: str) -> Envelope | None:
        """Oldest available message for this subscriber, marked delivered with
        a visibility deadline. Returns None when nothing is consumable."""
        with self._lock:
            sub = self._subs.get(topic, {}).get(subscriber_id)
            if sub is None or not sub.active:
                raise TransportError(f"{subscriber_id} is not subscribed to {topic}")
            now = self._scheduler.now
            log = self._logs.get(topic, [])
            # advance the watermark past the contiguous acked prefix, so long
            # topics stay O(1) per consume
            while sub.scan_from < len(log):
                rec = sub.records.get(log[sub.scan_from].message_id)
                if rec is None or rec.state is not DeliveryState.ACKED:
                    break
                sub.scan_from += 1
            for i in range(sub.scan_from, len(log)):
                msg = log[i]
                if msg.available_at > now:
                    continue
                rec = sub.records.get(msg.message_id)
                if rec is None:
                    rec = sub.records[msg.message_id] = _DeliveryRecord()
                if rec.state is DeliveryState.ACKED:
                    continue
                if rec.state is DeliveryState.DELIVERED and rec.deadline > now:
                    continue
                rec.state = DeliveryState.DELIVERED
                rec.deadline = now + self.visibility_timeout_s
                rec.tag += 1
                self._notify_at(topic, subscriber_id, rec.deadline)
                return Envelope(msg.message_id, topic, msg.payload,
                                msg.enqueued_at, DeliveryState.DELIVERED, rec.tag)
            return None

    def ack(self, message_id: str, subscriber_id: str,
            delivery_tag: int | None = None) -> bool:
        """Acknowledge a delivery. Idempotent for unknown/acked messages; a
        stale tag (the message was already redelivered) is rejected."""
        with self._lock:
            msg = self._index.get(message_id)
            if msg is None:
                return True
            sub = self._subs.get(msg.topic, {}).get(subscriber_id)
            if sub is None:
                return True
            rec = sub.records.get(message_id)
            if rec is None:
                return True
            if rec.state is DeliveryState.ACKED:
                return True
            if delivery_tag is not None and delivery_tag != rec.tag:
                logger.debug("stale ack for %s by %s rejected", message_id, subscriber_id)
                return False
            rec.state = DeliveryState.ACKED
            return True

    # -- introspection (tests, metrics) -------------------------------------

    def delivery_state(self, topic: str, subscriber_id: str, message_id: str) -> DeliveryState:
        sub = self._subs.get(topic, {}).get(subscriber_id)
        if sub is None or message_id not in sub.records:
            return DeliveryState.QUEUED
        return sub.records[message_id].state

    def unacked_count(self, topic: str, subscriber_id: str) -> int:
        sub = self._subs.get(topic, {}).get(subscriber_id)
        log = self._logs.get(topic, [])
        if sub is None:
            return len(log)
        n = 0
        for msg in log:
            rec = sub.records.get(msg.message_id)
            if rec is None or rec.state is not DeliveryState.ACKED:
                n += 1
        return n

    def topic_size(self, topic: str) -> int:
        return len(self._logs.get(topic, []))

    # -- internals -----------------------------------------------------------

    def _notify_at(self, topic: str, subscriber_id: str, when: float) -> None:
        sub = self._subs.get(topic, {}).get(subscriber_id)
        if sub is not None and sub.callback is not None:
            self._scheduler.call_at(when, sub.callback, topic)
