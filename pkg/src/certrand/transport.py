"""Framed messaging between verifier, prover, coin-flip parties and beacon.

Wire format of one frame (all integers big-endian)::

    offset  size  field
    0       4     magic  b"CRNF"
    4       1     version (1)
    5       1     msg_type (see MsgType)
    6       4     payload length L, at most 16 MiB
    10      L     payload
    10+L    4     checksum: first 4 bytes of SHA-256(bytes 0 .. 10+L)

Two channel kinds share one request/response interface:

* :class:`InProcessChannel` calls a handler directly but still pushes every
  frame through the codec, applies simulated latency, partitions and
  timeouts, and can capture the raw bytes for inspection.
* :class:`StreamChannel` speaks the same frames over TCP to a
  :class:`StreamServer`.

Latency is measured on a monotonic clock. :class:`SimClock` is a virtual
monotonic clock; with it a whole simulated run is deterministic.
"""

from __future__ import annotations

import hashlib
import socket
import socketserver
import struct
import threading
import time
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Callable, Protocol

import numpy as np

from .errors import CorruptFrame, Disconnected, NeedMoreBytes, Oversize, ProtocolError, Timeout

MAGIC = b"CRNF"
VERSION = 1
HEADER = struct.Struct(">4sBBI")
CHECKSUM_SIZE = 4
MAX_PAYLOAD = 16 * 1024 * 1024


class MsgType(IntEnum):
    CHALLENGE = 1
    SAMPLES = 2
    COMMIT = 3
    REVEAL = 4
    ABORT = 5
    GET_PULSE = 6
    PULSE = 7
    ERROR = 8
    GET_LATEST = 9
    GET_RANGE = 10
    PULSES = 11


@dataclass(frozen=True)
class Frame:
    msg_type: MsgType
    payload: bytes = b""
    version: int = VERSION


def _checksum(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()[:CHECKSUM_SIZE]


def encode_frame(frame: Frame) -> bytes:
    if len(frame.payload) > MAX_PAYLOAD:
        raise Oversize(f"payload of {len(frame.payload)} bytes exceeds {MAX_PAYLOAD}")
    body = HEADER.pack(MAGIC, frame.version, int(frame.msg_type), len(frame.payload)) + frame.payload
    return body + _checksum(body)


def decode_frame(data: bytes) -> tuple[Frame, int]:
    """Decode one frame from the front of ``data``; returns it and the bytes consumed."""
    data = bytes(data)
    if len(data) >= 4 and data[:4] != MAGIC:
        raise ProtocolError("bad magic")
    if len(data) >= 5 and data[4] != VERSION:
        raise ProtocolError(f"unsupported version {data[4]}")
    if len(data) < HEADER.size:
        raise NeedMoreBytes(f"header needs {HEADER.size} bytes, have {len(data)}")
    _, version, msg_type, length = HEADER.unpack_from(data)
    if length > MAX_PAYLOAD:
        raise Oversize(f"declared payload of {length} bytes exceeds {MAX_PAYLOAD}")
    total = HEADER.size + length + CHECKSUM_SIZE
    if len(data) < total:
        raise NeedMoreBytes(f"frame needs {total} bytes, have {len(data)}")
    body = data[: HEADER.size + length]
    if _checksum(body) != data[HEADER.size + length : total]:
        raise CorruptFrame("checksum mismatch")
    try:
        kind = MsgType(msg_type)
    except ValueError:
        raise ProtocolError(f"unknown message type {msg_type}") from None
    return Frame(kind, data[HEADER.size : HEADER.size + length], version), total


def error_frame(message: str) -> Frame:
    return Frame(MsgType.ERROR, message.encode("utf-8"))


# ---------------------------------------------------------------- clocks


class Clock(Protocol):
    def now(self) -> int: ...
    def sleep(self, ns: int) -> None: ...
    def wall(self) -> int: ...


class MonotonicClock:
    """Real time: ``time.monotonic_ns`` for latency, ``time.time_ns`` for wall."""

    def now(self) -> int:
        return time.monotonic_ns()

    def sleep(self, ns: int) -> None:
        if ns > 0:
            time.sleep(ns / 1e9)

    def wall(self) -> int:
        return time.time_ns()


class SimClock:
    """Virtual clock; ``sleep`` advances it instantly."""

    def __init__(self, start_ns: int = 0, epoch_ns: int = 1_700_000_000 * 10**9):
        self._now = start_ns
        self.epoch_ns = epoch_ns
        self._lock = threading.Lock()

    def now(self) -> int:
        return self._now

    def sleep(self, ns: int) -> None:
        if ns < 0:
            raise ValueError("cannot sleep a negative duration")
        with self._lock:
            self._now += ns

    def wall(self) -> int:
        return self.epoch_ns + self._now


# ---------------------------------------------------------------- latency models


@dataclass(frozen=True)
class FixedLatency:
    ns: int = 0

    def sample(self) -> int:
        return self.ns


@dataclass
class UniformJitter:
    low_ns: int
    high_ns: int
    seed: int = 0
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if not 0 <= self.low_ns <= self.high_ns:
            raise ValueError("need 0 <= low_ns <= high_ns")
        self._rng = np.random.default_rng(self.seed)

    def sample(self) -> int:
        return int(self._rng.integers(self.low_ns, self.high_ns + 1))


Handler = Callable[[Frame], Frame]


@dataclass(frozen=True)
class CapturedFrame:
    direction: str  # "out" (request) or "in" (response)
    data: bytes


class Channel(Protocol):
    clock: Clock

    def request(self, frame: Frame) -> Frame: ...
    def close(self) -> None: ...


class InProcessChannel:
    """Simulated network lane to an in-process handler.

    ``partitions`` is a list of ``(start_ns, end_ns)`` windows on the channel
    clock; a request dispatched inside one waits out the timeout and fails.
    """

    def __init__(
        self,
        handler: Handler,
        clock: Clock | None = None,
        latency=FixedLatency(0),
        timeout_ns: int | None = None,
        partitions: list[tuple[int, int]] | tuple = (),
        capture: list[CapturedFrame] | None = None,
    ):
        self.handler = handler
        self.clock = clock if clock is not None else MonotonicClock()
        self.latency = latency
        self.timeout_ns = timeout_ns
        self.partitions = list(partitions)
        self.capture = capture
        self.closed = False
        self._lock = threading.Lock()

    def _partitioned(self, t: int) -> bool:
        return any(start <= t < end for start, end in self.partitions)

    def request(self, frame: Frame) -> Frame:
        with self._lock:
            if self.closed:
                raise Disconnected("channel closed")
            start = self.clock.now()
            wire = encode_frame(frame)
            if self.capture is not None:
                self.capture.append(CapturedFrame("out", wire))
            if self._partitioned(start):
                self.clock.sleep(self.timeout_ns or 0)
                raise Timeout("network partition")
            self.clock.sleep(self.latency.sample())
            received, _ = decode_frame(wire)
            reply = encode_frame(self.handler(received))
            if self.capture is not None:
                self.capture.append(CapturedFrame("in", reply))
            if self.timeout_ns is not None and self.clock.now() - start > self.timeout_ns:
                raise Timeout(f"no response within {self.timeout_ns} ns")
            response, _ = decode_frame(reply)
            return response

    def close(self) -> None:
        self.closed = True


def timed_request(channel: Channel, frame: Frame) -> tuple[Frame, int, int]:
    """Send ``frame``; return the response with monotonic dispatch/arrival stamps."""
    dispatch = channel.clock.now()
    response = channel.request(frame)
    arrival = channel.clock.now()
    return response, dispatch, arrival


# ---------------------------------------------------------------- TCP streams


def _read_frame(sock: socket.socket) -> Frame | None:
    buf = b""
    while True:
        try:
            frame, used = decode_frame(buf)
            return frame
        except NeedMoreBytes:
            chunk = sock.recv(65536)
            if not chunk:
                if buf:
                    raise Disconnected("peer closed mid-frame")
                return None
            buf += chunk


class StreamChannel:
    def __init__(self, host: str, port: int, timeout_ns: int | None = 5 * 10**9,
                 capture: list[CapturedFrame] | None = None):
        self.clock = MonotonicClock()
        self.capture = capture
        try:
            self._sock = socket.create_connection((host, port), timeout=(timeout_ns or 0) / 1e9 or None)
        except OSError as exc:
            raise Disconnected(str(exc)) from exc
        self._sock.settimeout(timeout_ns / 1e9 if timeout_ns else None)
        self._lock = threading.Lock()

    def request(self, frame: Frame) -> Frame:
        wire = encode_frame(frame)
        with self._lock:
            if self.capture is not None:
                self.capture.append(CapturedFrame("out", wire))
            try:
                self._sock.sendall(wire)
                response = _read_frame(self._sock)
            except socket.timeout as exc:
                raise Timeout("stream read timed out") from exc
            except OSError as exc:
                raise Disconnected(str(exc)) from exc
            if response is None:
                raise Disconnected("peer closed the connection")
            if self.capture is not None:
                self.capture.append(CapturedFrame("in", encode_frame(response)))
            return response

    def close(self) -> None:
        self._sock.close()


class _FrameHandler(socketserver.BaseRequestHandler):
    def handle(self):
        while True:
            try:
                frame = _read_frame(self.request)
            except (Disconnected, ProtocolError, CorruptFrame, Oversize, OSError):
                return
            if frame is None:
                return
            try:
                reply = self.server.frame_handler(frame)
            except Exception as exc:  # peer gets an ERROR frame, server keeps running
                reply = error_frame(f"{type(exc).__name__}: {exc}")
            self.request.sendall(encode_frame(reply))


class _Server(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class StreamServer:
    """Serve a frame handler on TCP in a background thread."""

    def __init__(self, handler: Handler, host: str = "127.0.0.1", port: int = 0):
        self._server = _Server((host, port), _FrameHandler)
        self._server.frame_handler = handler
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address[:2]

    def start(self) -> "StreamServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()
