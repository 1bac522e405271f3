"""Topic pub/sub bus with an NDJSON TCP surface.

Wire format (byte-exact, pinned by golden tests):
    {"topic":"nav/pose","seq":17,"stamp":123.450,"payload":{...}}\n
seq is gapless per (publisher, topic); stamp always carries three decimals;
payload is compact JSON with sorted keys.
"""

from __future__ import annotations

import json
import re
import socket
import socketserver
import threading
from collections import deque
from dataclasses import dataclass
from typing import Any

TOPIC_RE = re.compile(r"^[a-z0-9_]+(/[a-z0-9_]+)*$")
DEFAULT_QUEUE = 1000


class TopicInvalid(Exception):
    pass


@dataclass(frozen=True)
class BusEnvelope:
    topic: str
    seq: int
    stamp: float
    payload: Any


def encode_envelope(env: BusEnvelope) -> bytes:
    payload = json.dumps(env.payload, separators=(",", ":"), sort_keys=True,
                         ensure_ascii=False)
    line = f'{{"topic":{json.dumps(env.topic)},"seq":{env.seq},' \
           f'"stamp":{env.stamp:.3f},"payload":{payload}}}\n'
    return line.encode("utf-8")


def decode_envelope(line: bytes | str) -> BusEnvelope:
    d = json.loads(line)
    return BusEnvelope(topic=d["topic"], seq=int(d["seq"]), stamp=float(d["stamp"]),
                       payload=d["payload"])


def topic_matches(pattern: str | None, topic: str) -> bool:
    """Segment-wise match: '*' matches exactly one segment, a trailing '**'
    matches any remainder; None matches everything."""
    if pattern is None or pattern == "**":
        return True
    p_parts = pattern.split("/")
    t_parts = topic.split("/")
    for i, p in enumerate(p_parts):
        if p == "**":
            return i == len(p_parts) - 1
        if i >= len(t_parts):
            return False
        if p != "*" and p != t_parts[i]:
            return False
    return len(p_parts) == len(t_parts)


class Subscription:
    """Bounded delivery queue; overflow drops the oldest and counts it, so a
    stuck subscriber never blocks publishers."""

    def __init__(self, pattern: str | None, max_queue: int = DEFAULT_QUEUE):
        self.pattern = pattern
        self.queue: deque[BusEnvelope] = deque()
        self.max_queue = max_queue
        self.dropped = 0
        self._cv = threading.Condition()
        self.closed = False

    def deliver(self, env: BusEnvelope) -> None:
        with self._cv:
            if len(self.queue) >= self.max_queue:
                self.queue.popleft()
                self.dropped += 1
            self.queue.append(env)
            self._cv.notify_all()

    def pull(self, max_n: int = 0) -> list[BusEnvelope]:
        with self._cv:
            n = len(self.queue) if max_n <= 0 else min(max_n, len(self.queue))
            return [self.queue.popleft() for _ in range(n)]

    def pull_wait(self, timeout: float) -> list[BusEnvelope]:
        with self._cv:
            if not self.queue:
                self._cv.wait(timeout)
            return [self.queue.popleft() for _ in range(len(self.queue))]

    def close(self) -> None:
        with self._cv:
            self.closed = True
            self._cv.notify_all()


class MessageBus:
    """In-process topic bus; safe for concurrent publishers and subscribers."""

    def __init__(self):
        self._lock = threading.Lock()
        self._subs: list[Subscription] = []
        self._seq: dict[tuple[str, str], int] = {}
        self.clock_fn = None         # optional sim-clock source for stamps

    def publish(self, topic: str, payload: Any, publisher: str = "core",
                stamp: float | None = None) -> BusEnvelope:
        if not TOPIC_RE.match(topic or ""):
            raise TopicInvalid(f"bad topic {topic!r}")
        with self._lock:
            key = (publisher, topic)
            seq = self._seq.get(key, 0) + 1
            self._seq[key] = seq
            if stamp is None:
                stamp = self.clock_fn() if self.clock_fn else 0.0
            env = BusEnvelope(topic=topic, seq=seq, stamp=round(stamp, 3),
                              payload=payload)
            subs = [s for s in self._subs if topic_matches(s.pattern, topic)]
        for s in subs:
            s.deliver(env)
        return env

    def subscribe(self, pattern: str | None = None,
                  max_queue: int = DEFAULT_QUEUE) -> Subscription:
        sub = Subscription(pattern, max_queue)
        with self._lock:
            self._subs.append(sub)
        return sub

    def unsubscribe(self, sub: Subscription) -> None:
        with self._lock:
            if sub in self._subs:
                self._subs.remove(sub)
        sub.close()


class _BusTCPHandler(socketserver.StreamRequestHandler):
    def handle(self):
        bus: MessageBus = self.server.bus            # type: ignore[attr-defined]
        try:
            hello = json.loads(self.rfile.readline())
        except (json.JSONDecodeError, ValueError):
            return
        mode = hello.get("mode")
        if mode == "subscribe":
            sub = bus.subscribe(hello.get("pattern"))
            try:
                while not self.server._shutdown:     # type: ignore[attr-defined]
                    for env in sub.pull_wait(0.2):
                        self.wfile.write(encode_envelope(env))
                    self.wfile.flush()
            except (BrokenPipeError, ConnectionResetError, OSError):
                pass
            finally:
                bus.unsubscribe(sub)
        elif mode == "publish":
            publisher = str(hello.get("publisher", "tcp"))
            for line in self.rfile:
                try:
                    d = json.loads(line)
                    bus.publish(d["topic"], d.get("payload"), publisher=publisher)
                except (json.JSONDecodeError, KeyError, TopicInvalid):
                    continue


class BusTCPServer:
    """NDJSON bus endpoint: clients send one handshake line
    {"mode":"subscribe","pattern":...} or {"mode":"publish","publisher":...}."""

    def __init__(self, bus: MessageBus, host: str = "127.0.0.1", port: int = 0):
        self._server = socketserver.ThreadingTCPServer((host, port), _BusTCPHandler,
                                                       bind_and_activate=True)
        self._server.daemon_threads = True
        self._server.bus = bus                       # type: ignore[attr-defined]
        self._server._shutdown = False               # type: ignore[attr-defined]
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    def start(self) -> None:
        self._thread.start()

    def stop(self) -> None:
        self._server._shutdown = True                # type: ignore[attr-defined]
        self._server.shutdown()
        self._server.server_close()


def tcp_subscribe(host: str, port: int, pattern: str | None = None) -> socket.socket:
    """Client helper: open a subscription socket (NDJSON envelopes follow)."""
    s = socket.create_connection((host, port))
    s.sendall((json.dumps({"mode": "subscribe", "pattern": pattern}) + "\n").encode())
    return s
