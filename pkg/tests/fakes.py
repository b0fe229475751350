"""Deliberately misbehaving servers for filter tests."""

from quiclearn.quic_sim import HEADERS_STREAM, Frame, FrameKind, Packet, QuicServer


class StaleHttpServer(QuicServer):
    """Answers the first ``stale`` bare CHLOs with an HTTP response, as if an
    old retransmission overtook the REJ."""

    def __init__(self, stale=1, **kwargs):
        super().__init__(**kwargs)
        self.stale = stale
        self.injected = 0

    def send(self, packet):
        response = super().send(packet)
        frame = packet.frames[0] if packet.frames else None
        bare = frame is not None and frame.kind is FrameKind.CHLO and "SCFG" not in frame.tags
        if bare and self.injected < self.stale:
            self.injected += 1
            return Packet(packet.conn_id, (Frame(FrameKind.HTTP_RESP, HEADERS_STREAM),))
        return response
