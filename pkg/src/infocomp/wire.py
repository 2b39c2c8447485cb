"""Two endpoints over a byte stream.

Frame format: a 16-bit big-endian bit count followed by the bits packed
MSB first into ceil(count / 8) bytes, unused low bits zero. A count of zero
is a protocol error. A party that has finished shuts down its sending side
and drains; the peer sees end-of-stream at a frame boundary, which is how
"the other side stopped" is signalled (a block-index overflow, a leaf
reached early, an abort).

Engine specs are JSON objects::

    {"engine": "sample",   "eps": 0.01, "t_max": 6}   inputs: P (A), Q (B)
    {"engine": "cpj",      "eps": 0.01}               inputs: own instance view
    {"engine": "compress", "eps": 0.01, "protocol": {...}, "mu": {...}}
                                                      inputs: x (A), y (B)

Each endpoint is built from the engine spec and its own input only.
"""

from __future__ import annotations

import json
import socket
import threading
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .cpj import CpjInstance, PathEndpoint, combine_paths
from .info import Dist
from .onesamp import ProtocolError, Receiver, SamplerConfig, Sender, combine_stats
from .sharedrand import SharedSeed

MAX_BITS = 0xFFFF


class FrameError(ConnectionError):
    """Malformed or truncated frame."""


def encode_frame(bits) -> bytes:
    n = len(bits)
    if n == 0:
        raise ProtocolError("empty frames are not allowed")
    if n > MAX_BITS:
        raise ProtocolError("frame longer than 65535 bits")
    payload = bytearray((n + 7) // 8)
    for i, b in enumerate(bits):
        if b not in (0, 1):
            raise ValueError("frame payload must be bits")
        if b:
            payload[i // 8] |= 0x80 >> (i % 8)
    return n.to_bytes(2, "big") + bytes(payload)


def decode_frame(data: bytes) -> tuple[tuple, int]:
    """Decode one frame from the front of ``data``; returns (bits, bytes used)."""
    if len(data) < 2:
        raise FrameError("truncated frame header")
    n = int.from_bytes(data[:2], "big")
    if n == 0:
        raise ProtocolError("frame with zero bit length")
    size = 2 + (n + 7) // 8
    if len(data) < size:
        raise FrameError("truncated frame payload")
    payload = data[2:size]
    bits = tuple((payload[i // 8] >> (7 - i % 8)) & 1 for i in range(n))
    if n % 8 and payload[-1] & (0xFF >> (n % 8)):
        raise FrameError("nonzero padding bits")
    return bits, size


class Channel:
    """Frames over a connected socket, counting payload bits each way."""

    def __init__(self, sock: socket.socket):
        self.sock = sock
        self.reader = sock.makefile("rb")
        self.bits_sent = 0
        self.bits_received = 0
        self.frames_sent = 0
        self.peer_gone = False

    def _read_exact(self, n: int) -> bytes:
        buf = b""
        while len(buf) < n:
            try:
                chunk = self.reader.read(n - len(buf))
            except (ConnectionResetError, BrokenPipeError):
                chunk = b""
            if not chunk:
                break
            buf += chunk
        return buf

    def send(self, bits) -> None:
        frame = encode_frame(bits)
        self.bits_sent += len(bits)
        self.frames_sent += 1
        if self.peer_gone:
            return
        try:
            self.sock.sendall(frame)
        except (BrokenPipeError, ConnectionResetError):
            self.peer_gone = True

    def recv(self):
        """Next frame's bits, or None on end-of-stream at a frame boundary."""
        head = self._read_exact(2)
        if not head:
            self.peer_gone = True
            return None
        if len(head) < 2:
            raise FrameError("stream ended inside a frame header")
        n = int.from_bytes(head, "big")
        if n == 0:
            raise ProtocolError("frame with zero bit length")
        body = self._read_exact((n + 7) // 8)
        bits, _ = decode_frame(head + body)
        self.bits_received += n
        return bits

    def finish(self) -> None:
        """Half-close, then drain whatever the peer still sends."""
        try:
            self.sock.shutdown(socket.SHUT_WR)
        except OSError:
            pass
        try:
            while self._read_exact(4096):
                pass
        except OSError:
            pass
        self.reader.close()
        self.sock.close()


# ---------------------------------------------------------------------------
# engines


def _sampler_cfg(spec: dict) -> SamplerConfig:
    eps = float(spec.get("eps", 0.01))
    t_max = spec.get("t_max")
    cfg = SamplerConfig(eps, None if t_max is None else int(t_max), spec.get("k_bits"),
                        int(spec.get("t_cap", 64)))
    return cfg if cfg.t_max is not None else SamplerConfig(eps, cfg.t_cap, cfg.k_bits, cfg.t_cap)


def make_engine(spec: dict, role: str, own_input, seed: SharedSeed):
    """Endpoint state machine for ``role`` built from the engine spec and its own input."""
    kind = spec["engine"]
    if kind == "sample":
        cfg = _sampler_cfg(spec)
        dist = Dist.from_json(own_input).probs
        return Sender(dist, seed, cfg) if role == "A" else Receiver(dist, seed, cfg)
    if kind == "cpj":
        F = own_input if isinstance(own_input, CpjInstance) else CpjInstance.from_json(own_input)
        return PathEndpoint(role, F, seed, float(spec.get("eps", 0.01)), _path_cfg(spec))
    if kind == "compress":
        from .prototree import ProtocolTree, build_cpj, public_inputs
        pi = ProtocolTree.from_json(spec["protocol"])
        mu = np.asarray(spec["mu"]["probs"] if isinstance(spec["mu"], dict) else spec["mu"])
        _, _, r = public_inputs(seed, mu, pi)
        x, y = (int(own_input), None) if role == "A" else (None, int(own_input))
        F = build_cpj(pi, x, y, r, mu)
        ep = PathEndpoint(role, F, seed, float(spec.get("eps", 0.01)), _path_cfg(spec))
        ep.public_r = r
        return ep
    raise ValueError(f"unknown engine {kind!r}")


def _path_cfg(spec: dict) -> SamplerConfig | None:
    if "t_max" not in spec and "k_bits" not in spec:
        return None
    return _sampler_cfg(spec)


@dataclass
class EndpointResult:
    role: str
    output: Any
    bits_sent: int
    frame_bits_sent: int
    frame_bits_received: int
    engine: Any = field(repr=False, default=None)


def run_endpoint(engine, sock: socket.socket, role: str) -> EndpointResult:
    """Drive one engine over a socket until it finishes."""
    ch = Channel(sock)
    try:
        for m in engine.start():
            ch.send(m)
        while not engine.done:
            msg = ch.recv()
            if msg is None:
                engine.peer_closed()
                break
            for m in engine.receive(msg):
                ch.send(m)
    finally:
        ch.finish()
    return EndpointResult(role, endpoint_output(engine), engine.bits_sent, ch.bits_sent,
                          ch.bits_received, engine)


def endpoint_output(engine):
    if isinstance(engine, PathEndpoint):
        res = engine.result()
        return {"labels": list(res.labels), "leaf": res.leaf, "complete": res.complete}
    return engine.output


@dataclass
class ChannelRun:
    A: EndpointResult
    B: EndpointResult
    stats: Any

    @property
    def outputs(self) -> tuple:
        return self.A.output, self.B.output


def combine(a: EndpointResult, b: EndpointResult):
    ea, eb = a.engine, b.engine
    if isinstance(ea, PathEndpoint):
        return combine_paths(ea, eb)
    snd, rcv = (ea, eb) if isinstance(ea, Sender) else (eb, ea)
    return combine_stats(snd, rcv)


def run_over_channel(spec: dict, input_a, input_b, seed: SharedSeed, transport: str = "socketpair",
                     timeout: float = 30.0) -> ChannelRun:
    """Run both endpoints in separate threads over a real socket.

    ``transport`` is "socketpair" (AF_UNIX pair) or "tcp" (loopback).
    """
    if transport == "socketpair":
        sa, sb = socket.socketpair()
    elif transport == "tcp":
        sa, sb = _tcp_pair()
    else:
        raise ValueError(f"unknown transport {transport!r}")
    for s in (sa, sb):
        s.settimeout(timeout)
    roles = {"A": (input_a, sa), "B": (input_b, sb)}
    results: dict[str, Any] = {}

    def work(role):
        own, sock = roles[role]
        try:
            results[role] = run_endpoint(make_engine(spec, role, own, seed), sock, role)
        except BaseException as exc:  # surfaced in the caller
            results[role] = exc
            try:
                sock.close()
            except OSError:
                pass

    threads = [threading.Thread(target=work, args=(r,), daemon=True) for r in ("A", "B")]
    for t in threads:
        t.start()
    for t in threads:
        t.join(timeout + 5)
    for role in ("A", "B"):
        if role not in results:
            raise TimeoutError(f"endpoint {role} did not finish")
        if isinstance(results[role], BaseException):
            raise results[role]
    a, b = results["A"], results["B"]
    return ChannelRun(a, b, combine(a, b))


def _tcp_pair():
    lst = socket.create_server(("127.0.0.1", 0))
    port = lst.getsockname()[1]
    client = socket.create_connection(("127.0.0.1", port))
    server, _ = lst.accept()
    lst.close()
    return server, client


def serve(spec: dict, role: str, own_input, seed: SharedSeed, listen: str | None = None,
          connect: str | None = None, timeout: float = 60.0) -> EndpointResult:
    """Run one endpoint as a standalone process side (used by the CLI)."""
    if (listen is None) == (connect is None):
        raise ValueError("give exactly one of listen or connect")
    host, port = (listen or connect).rsplit(":", 1)
    if listen is not None:
        with socket.create_server((host, int(port))) as lst:
            lst.settimeout(timeout)
            sock, _ = lst.accept()
    else:
        sock = _connect_retry(host, int(port), timeout)
    sock.settimeout(timeout)
    return run_endpoint(make_engine(spec, role, own_input, seed), sock, role)


def _connect_retry(host: str, port: int, timeout: float) -> socket.socket:
    # the listening side may not be up yet
    deadline = time.monotonic() + timeout
    while True:
        try:
            return socket.create_connection((host, port), timeout=timeout)
        except ConnectionRefusedError:
            if time.monotonic() > deadline:
                raise
            time.sleep(0.05)


def load_spec(path_or_obj) -> dict:
    if isinstance(path_or_obj, dict):
        return path_or_obj
    with open(path_or_obj) as fh:
        return json.load(fh)
