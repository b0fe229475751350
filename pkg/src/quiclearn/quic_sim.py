"""A simulated QUIC handshake server at tag/value granularity.

Packets carry a connection id and a list of frames. Cryptographic material
is replaced by opaque tokens stamped with the server's configuration epoch;
a client CHLO is complete when it echoes the current epoch's SCFG and STK.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from enum import Enum

log = logging.getLogger(__name__)

HANDSHAKE_STREAM = 1
HEADERS_STREAM = 3
NO_STREAM = 0
UNSET_CONN_ID = -1
DEFAULT_SNI = "www.example.org"


class FrameKind(str, Enum):
    CHLO = "CHLO"
    REJ = "REJ"
    SHLO = "SHLO"
    HTTP_GET = "HTTP_GET"
    HTTP_RESP = "HTTP_RESP"
    ACK = "ACK"
    CONN_CLOSE = "CONN_CLOSE"
    PRST = "PRST"


HANDSHAKE_KINDS = frozenset({FrameKind.CHLO, FrameKind.REJ, FrameKind.SHLO})
CLIENT_KINDS = frozenset({FrameKind.CHLO, FrameKind.HTTP_GET, FrameKind.CONN_CLOSE, FrameKind.ACK})


@dataclass(frozen=True)
class Frame:
    kind: FrameKind
    stream_id: int = NO_STREAM
    tags: dict = field(default_factory=dict, hash=False)


@dataclass(frozen=True)
class Packet:
    conn_id: int = UNSET_CONN_ID
    frames: tuple = ()

    @property
    def ack_only(self) -> bool:
        return bool(self.frames) and all(f.kind is FrameKind.ACK for f in self.frames)

    def kinds(self) -> list:
        return [f.kind for f in self.frames]


class Phase(Enum):
    REJECTED = "rejected"
    ESTABLISHED = "established"
    SERVED = "served"
    CLOSED = "closed"


OPEN_PHASES = frozenset({Phase.REJECTED, Phase.ESTABLISHED, Phase.SERVED})


@dataclass
class Connection:
    phase: Phase
    last_response: Packet | None = None


class MalformedPacket(ValueError):
    pass


def config_tokens(epoch: int) -> dict:
    return {"SCFG": f"scfg-e{epoch}", "STK": f"stk-e{epoch}"}


class QuicServer:
    """Server state plus the protocol logic that advances it.

    ``noise_retx`` is the probability that a response on a connection is
    replaced by that connection's previous response, as if a stale
    retransmission arrived first. The generator is seeded once and is not
    touched by :meth:`reset`, so noise differs between queries.
    """

    def __init__(self, seed: int = 0, noise_retx: float = 0.0, sni: str = DEFAULT_SNI):
        if not 0.0 <= noise_retx <= 1.0:
            raise ValueError(f"noise_retx must be in [0, 1], got {noise_retx}")
        self.config_epoch = 0
        self.connections: dict[int, Connection] = {}
        self.rng = random.Random(seed)
        self.noise_retx = noise_retx
        self.sni = sni
        self.noise_draws = 0
        self.noise_hits = 0

    def reset(self) -> None:
        self.connections.clear()

    def rotate_config(self) -> None:
        self.config_epoch += 1

    def current_tokens(self) -> dict:
        return config_tokens(self.config_epoch)

    def send(self, packet: Packet) -> Packet | None:
        """Deliver one client packet and return what the client observes."""
        response = self.handle(packet)
        observed = self.inject_noise(packet.conn_id, response)
        conn = self.connections.get(packet.conn_id)
        if conn is not None and response is not None:
            conn.last_response = response
        return observed

    def inject_noise(self, conn_id: int, response: Packet | None) -> Packet | None:
        conn = self.connections.get(conn_id)
        if conn is None or conn.last_response is None or self.noise_retx <= 0.0:
            return response
        self.noise_draws += 1
        if self.rng.random() < self.noise_retx:
            self.noise_hits += 1
            return conn.last_response
        return response

    def handle(self, packet: Packet) -> Packet | None:
        try:
            self._validate(packet)
        except MalformedPacket as exc:
            log.debug("malformed packet %r: %s", packet, exc)
            return self._reply(packet.conn_id, Frame(FrameKind.PRST))
        frames = []
        for frame in packet.frames:
            out = self._dispatch(packet.conn_id, frame)
            if out is not None:
                frames.append(out)
        if not frames:
            return None
        return Packet(packet.conn_id, tuple(frames))

    def _validate(self, packet: Packet) -> None:
        if not packet.frames:
            raise MalformedPacket("packet has no frames")
        if sum(f.kind in HANDSHAKE_KINDS for f in packet.frames) > 1:
            raise MalformedPacket("more than one handshake frame")
        for f in packet.frames:
            if f.kind not in CLIENT_KINDS:
                raise MalformedPacket(f"{f.kind.value} is not a client frame")
            if f.kind is FrameKind.CHLO and f.stream_id != HANDSHAKE_STREAM:
                raise MalformedPacket(f"CHLO on stream {f.stream_id}")
            if f.kind is FrameKind.HTTP_GET:
                if f.stream_id != HEADERS_STREAM:
                    raise MalformedPacket(f"HTTP request on stream {f.stream_id}")
                if f.tags.get("SNI") != self.sni:
                    raise MalformedPacket("HTTP request for a foreign origin")

    def _reply(self, conn_id, frame):
        return Packet(conn_id, (frame,))

    def _dispatch(self, conn_id: int, frame: Frame) -> Frame | None:
        if frame.kind is FrameKind.CHLO:
            return self._on_chlo(conn_id, frame)
        if frame.kind is FrameKind.HTTP_GET:
            return self._on_get(conn_id)
        if frame.kind is FrameKind.CONN_CLOSE:
            return self._on_close(conn_id)
        return None  # client ACKs need no answer

    def _on_chlo(self, conn_id: int, frame: Frame) -> Frame | None:
        if conn_id < 0:
            return Frame(FrameKind.PRST)
        conn = self.connections.get(conn_id)
        if conn is not None and conn.phase is Phase.CLOSED:
            return Frame(FrameKind.PRST)
        current = self.current_tokens()
        offered = {k: frame.tags.get(k) for k in current}
        if offered != current:
            # Incomplete CHLO or tokens from an expired configuration.
            if conn is None:
                self.connections[conn_id] = Connection(Phase.REJECTED)
            return Frame(FrameKind.REJ, HANDSHAKE_STREAM, dict(current))
        if conn is None or conn.phase is Phase.REJECTED:
            if conn is None:
                self.connections[conn_id] = conn = Connection(Phase.ESTABLISHED)
            conn.phase = Phase.ESTABLISHED
            return Frame(FrameKind.SHLO, HANDSHAKE_STREAM, {"SNO": f"sno-{conn_id}"})
        # Duplicate complete CHLO on an established connection is ignored.
        return None

    def _on_get(self, conn_id: int) -> Frame | None:
        conn = self.connections.get(conn_id)
        if conn is None or conn.phase is Phase.REJECTED:
            return None
        if conn.phase is Phase.CLOSED:
            return Frame(FrameKind.PRST)
        if conn.phase is Phase.ESTABLISHED:
            conn.phase = Phase.SERVED
            return Frame(FrameKind.HTTP_RESP, HEADERS_STREAM, {"STATUS": "200"})
        return Frame(FrameKind.ACK)

    def _on_close(self, conn_id: int) -> Frame:
        conn = self.connections.get(conn_id)
        if conn is not None and conn.phase in OPEN_PHASES:
            conn.phase = Phase.CLOSED
            return Frame(FrameKind.CONN_CLOSE)
        return Frame(FrameKind.PRST)
