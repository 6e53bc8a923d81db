"""External-broker backend: a minimal MQTT 3.1.1 client mapped onto the bus
interface.

Consume/ack semantics ride on persistent-session QoS 1: PUBACK for a delivered
message is withheld until the consumer acknowledges it, so anything unacked is
redelivered by the broker when the session reconnects. Unlike the simulated
backend there is no visibility timer; redelivery is reconnect-driven, which is
the standard broker behavior.
"""

from __future__ import annotations

import socket
import struct
import threading
import time
from collections import deque
from dataclasses import dataclass
from urllib.parse import urlparse

from .bus import DeliveryState, Envelope, TransportError, validate_topic

CONNECT, CONNACK = 0x10, 0x20
PUBLISH, PUBACK = 0x30, 0x40
SUBSCRIBE, SUBACK = 0x82, 0x90
UNSUBSCRIBE, UNSUBACK = 0xA2, 0xB0
PINGREQ, PINGRESP = 0xC0, 0xD0
DISCONNECT = 0xE0


def encode_length(n: int) -> bytes:
    out = bytearray()
    while True:
        byte = n % 128
        n //= 128
        out.append(byte | 0x80 if n > 0 else byte)
        if n == 0:
            return bytes(out)


def encode_string(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("!H", len(raw)) + raw


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ConnectionError("connection closed")
        buf += chunk
    return buf


def read_packet(sock: socket.socket) -> tuple[int, bytes]:
    header = _recv_exact(sock, 1)[0]
    length = 0
    shift = 0
    while True:
        byte = _recv_exact(sock, 1)[0]
        length |= (byte & 0x7F) << shift
        if not byte & 0x80:
            break
        shift += 7
    payload = _recv_exact(sock, length) if length else b""
    return header, payload


class MqttConnection:
    """One MQTT 3.1.1 session. `on_publish(topic, payload, packet_id, dup)` is
    invoked from the reader thread for every inbound QoS-1 PUBLISH; the owner
    decides when to send PUBACK."""

    def __init__(self, host: str, port: int, client_id: str,
                 clean_session: bool = False, keepalive_s: int = 60,
                 on_publish=None, username: str | None = None,
                 password: str | None = None):
        self.client_id = client_id
        self._on_publish = on_publish
        self._sock = socket.create_connection((host, port), timeout=10)
        self._write_lock = threading.Lock()
        self._acked: dict[int, threading.Event] = {}
        self._closed = False

        flags = 0x02 if clean_session else 0x00
        tail = encode_string(client_id)
        if username is not None:
            flags |= 0x80
            tail += encode_string(username)
            if password is not None:
                flags |= 0x40
                tail += encode_string(password)
        var = (encode_string("MQTT") + bytes([4, flags]) +
               struct.pack("!H", keepalive_s) + tail)
        self._send(CONNECT, var)
        header, body = read_packet(self._sock)
        if header & 0xF0 != CONNACK or body[1] != 0:
            raise TransportError(f"broker refused connection: {body!r}")
        self.session_present = bool(body[0] & 0x01)

        self._sock.settimeout(None)
        self._next_pid = 0
        self._pid_lock = threading.Lock()
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()
        self._pinger = threading.Thread(
            target=self._ping_loop, args=(max(5, keepalive_s // 2),), daemon=True)
        self._pinger.start()

    def _send(self, header: int, var: bytes) -> None:
        with self._write_lock:
            self._sock.sendall(bytes([header]) + encode_length(len(var)) + var)

    def _alloc_pid(self) -> int:
        with self._pid_lock:
            self._next_pid = self._next_pid % 65535 + 1
            return self._next_pid

    def subscribe(self, topic: str, qos: int = 1, timeout: float = 5.0) -> None:
        pid = self._alloc_pid()
        event = threading.Event()
        self._acked[pid] = event
        self._send(SUBSCRIBE, struct.pack("!H", pid) + encode_string(topic) + bytes([qos]))
        if not event.wait(timeout):
            raise TransportError(f"SUBACK timeout for {topic}")

    def unsubscribe(self, topic: str, timeout: float = 5.0) -> None:
        pid = self._alloc_pid()
        event = threading.Event()
        self._acked[pid] = event
        self._send(UNSUBSCRIBE, struct.pack("!H", pid) + encode_string(topic))
        event.wait(timeout)

    def publish(self, topic: str, payload: bytes, qos: int = 1) -> int:
        pid = self._alloc_pid() if qos else 0
        header = PUBLISH | (qos << 1)
        var = encode_string(topic)
        if qos:
            var += struct.pack("!H", pid)
        self._send(header, var + payload)
        return pid

    def puback(self, packet_id: int) -> None:
        self._send(PUBACK, struct.pack("!H", packet_id))

    def _read_loop(self) -> None:
        try:
            while not self._closed:
                header, body = self._read()
        except (ConnectionError, OSError):
            return

    def _read(self) -> tuple[int, bytes]:
        header, body = read_packet(self._sock)
        kind = header & 0xF0
        if kind == PUBLISH:
            qos = (header >> 1) & 0x03
            dup = bool(header & 0x08)
            topic_len = struct.unpack("!H", body[:2])[0]
            topic = body[2:2 + topic_len].decode("utf-8")
            pos = 2 + topic_len
            pid = 0
            if qos:
                pid = struct.unpack("!H", body[pos:pos + 2])[0]
                pos += 2
            if self._on_publish is not None:
                self._on_publish(topic, body[pos:], pid, dup)
        elif kind in (PUBACK, SUBACK, UNSUBACK):
            pid = struct.unpack("!H", body[:2])[0]
            event = self._acked.pop(pid, None)
            if event is not None:
                event.set()
        return header, body

    def _ping_loop(self, interval: int) -> None:
        while not self._closed:
            time.sleep(interval)
            if self._closed:
                return
            try:
                self._send(PINGREQ, b"")
            except OSError:
                return

    def close(self, send_disconnect: bool = True) -> None:
        if self._closed:
            return
        self._closed = True
        if send_disconnect:
            try:
                self._send(DISCONNECT, b"")
            except OSError:
                pass
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


@dataclass
class _Inbound:
    envelope_id: str
    topic: str
    payload: bytes
    packet_id: int
    received_at: float


class _Session:
    def __init__(self, connection: MqttConnection):
        self.connection = connection
        self.queues: dict[str, deque[_Inbound]] = {}
        self.callbacks: dict[str, object] = {}
        self.topics: set[str] = set()


class MqttBus:
    """Bus facade over per-subscriber MQTT sessions plus one publisher session.

    Every subscriber_id becomes its own persistent session (clean_session=0),
    which is what preserves queued work across that subscriber's downtime.
    """

    def __init__(self, broker_url: str, scheduler=None, client_prefix: str = "pcio"):
        parsed = urlparse(broker_url if "//" in broker_url else f"mqtt://{broker_url}")
        self._host = parsed.hostname or "127.0.0.1"
        self._port = parsed.port or 1883
        self._username = parsed.username
        self._password = parsed.password
        self._prefix = client_prefix
        self._scheduler = scheduler
        self._sessions: dict[str, _Session] = {}
        self._envelopes: dict[str, tuple[str, int]] = {}
        self._publisher: MqttConnection | None = None
        self._counter = 0
        self._lock = threading.RLock()

    def attach_scheduler(self, scheduler) -> None:
        self._scheduler = scheduler

    def _ensure_publisher(self) -> MqttConnection:
        with self._lock:
            if self._publisher is None:
                self._publisher = MqttConnection(
                    self._host, self._port, f"{self._prefix}-pub",
                    clean_session=True, username=self._username,
                    password=self._password)
            return self._publisher

    def _ensure_session(self, subscriber_id: str) -> _Session:
        with self._lock:
            session = self._sessions.get(subscriber_id)
            if session is None:
                def on_publish(topic, payload, pid, dup, _sid=subscriber_id):
                    self._inbound(_sid, topic, payload, pid)
                connection = MqttConnection(
                    self._host, self._port, f"{self._prefix}-{subscriber_id}",
                    clean_session=False, on_publish=on_publish,
                    username=self._username, password=self._password)
                session = self._sessions[subscriber_id] = _Session(connection)
            return session

    def _inbound(self, subscriber_id: str, topic: str, payload: bytes, pid: int) -> None:
        with self._lock:
            session = self._sessions.get(subscriber_id)
            if session is None:
                return
            self._counter += 1
            envelope_id = f"q{self._counter:08d}"
            session.queues.setdefault(topic, deque()).append(
                _Inbound(envelope_id, topic, payload, pid, time.time()))
            self._envelopes[envelope_id] = (subscriber_id, pid)
            callback = session.callbacks.get(topic)
        if callback is not None:
            if self._scheduler is not None:
                self._scheduler.call_later(0.0, callback, topic)
            else:
                callback(topic)

    # -- bus interface -------------------------------------------------------

    def subscribe(self, topic: str, subscriber_id: str, callback=None) -> None:
        validate_topic(topic)
        session = self._ensure_session(subscriber_id)
        with self._lock:
            if callback is not None:
                session.callbacks[topic] = callback
            already = topic in session.topics
            session.topics.add(topic)
        if not already:
            session.connection.subscribe(topic, qos=1)

    def unsubscribe(self, topic: str, subscriber_id: str) -> None:
        with self._lock:
            session = self._sessions.get(subscriber_id)
            if session is None or topic not in session.topics:
                return
            session.topics.discard(topic)
        session.connection.unsubscribe(topic)

    def publish(self, topic: str, payload: bytes, now: float | None = None) -> str:
        validate_topic(topic)
        pid = self._ensure_publisher().publish(topic, payload, qos=1)
        return f"p{pid:08d}"

    def consume(self, topic: str, subscriber_id: str) -> Envelope | None:
        with self._lock:
            session = self._sessions.get(subscriber_id)
            if session is None:
                raise TransportError(f"{subscriber_id} has no session")
            queue = session.queues.get(topic)
            if not queue:
                return None
            item = queue.popleft()
            return Envelope(item.envelope_id, topic, item.payload,
                            item.received_at, DeliveryState.DELIVERED, 1)

    def ack(self, message_id: str, subscriber_id: str,
            delivery_tag: int | None = None) -> bool:
        with self._lock:
            found = self._envelopes.pop(message_id, None)
            if found is None:
                return True
            sid, pid = found
            session = self._sessions.get(sid)
        if session is not None and pid:
            session.connection.puback(pid)
        return True

    # -- session control (tests, failover drills) ------------------------------

    def disconnect_subscriber(self, subscriber_id: str) -> None:
        """Drop the network session; the broker keeps queueing (persistent
        session), and unacked messages come back on reconnect."""
        with self._lock:
            session = self._sessions.pop(subscriber_id, None)
        if session is not None:
            session.connection.close(send_disconnect=False)

    def close(self) -> None:
        with self._lock:
            sessions = list(self._sessions.values())
            self._sessions.clear()
            publisher, self._publisher = self._publisher, None
        for session in sessions:
            session.connection.close()
        if publisher is not None:
            publisher.close()
