"""Newline-delimited TCP protocol between a learner and a mapper.

Each request line holds one input symbol and is answered by exactly one
output line. ``RESET`` starts a new query and is answered with ``OK``.
Lines are UTF-8. Unknown symbols are answered with
``ERROR:unknown-symbol``; a mapper that cannot settle on an answer replies
``ERROR:non-deterministic``.
"""

from __future__ import annotations

import logging
import socket
import socketserver
from typing import Sequence

from .lstar import MembershipOracle
from .mapper import NonDeterministicResponse

log = logging.getLogger(__name__)

RESET = "RESET"
OK = "OK"
ERR_UNKNOWN = "ERROR:unknown-symbol"
ERR_NONDET = "ERROR:non-deterministic"


class SocketSULError(ConnectionError):
    pass


class LineSession:
    """Protocol state for one client: the inputs sent since the last RESET.

    Every symbol is answered by re-running the whole current query against
    the oracle, so each reply is the last output of a full membership query.
    """

    def __init__(self, oracle: MembershipOracle, alphabet: Sequence[str]):
        self.oracle = oracle
        self.alphabet = frozenset(alphabet)
        self.history: list[str] = []

    def handle_line(self, line: str) -> str:
        line = line.strip()
        if line == RESET:
            self.history.clear()
            return OK
        if line not in self.alphabet:
            return ERR_UNKNOWN
        self.history.append(line)
        try:
            return self.oracle.query(self.history)[-1]
        except NonDeterministicResponse as exc:
            log.warning("%s", exc)
            self.history.pop()
            return ERR_NONDET


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        session = LineSession(self.server.oracle, self.server.alphabet)
        log.info("client %s connected", self.client_address)
        for raw in self.rfile:
            line = raw.decode("utf-8", errors="replace").strip()
            if not line:
                continue
            reply = session.handle_line(line)
            self.wfile.write((reply + "\n").encode("utf-8"))
            self.wfile.flush()
        log.info("client %s disconnected", self.client_address)


class SULServer(socketserver.TCPServer):
    """Serves one client at a time; further connections wait in the backlog."""

    allow_reuse_address = True

    def __init__(self, address, oracle: MembershipOracle, alphabet: Sequence[str]):
        self.oracle = oracle
        self.alphabet = tuple(alphabet)
        super().__init__(address, _Handler)

    @property
    def port(self) -> int:
        return self.server_address[1]


class SocketOracle:
    """Membership oracle backed by a remote mapper speaking the line protocol."""

    def __init__(self, host: str, port: int, timeout: float = 0.5,
                 connect_timeout: float = 5.0):
        self.host = host
        self.port = port
        self.timeout = timeout
        self.connect_timeout = connect_timeout
        self._sock = None
        self._file = None
        self.queries = 0
        self.symbols_sent = 0

    def _connect(self):
        try:
            self._sock = socket.create_connection((self.host, self.port), self.connect_timeout)
        except OSError as exc:
            raise SocketSULError(f"cannot connect to {self.host}:{self.port}: {exc}") from exc
        self._sock.settimeout(self.timeout)
        self._file = self._sock.makefile("rwb")

    def close(self):
        if self._sock is not None:
            try:
                self._file.close()
                self._sock.close()
            finally:
                self._sock = self._file = None

    def _exchange(self, line: str) -> str:
        try:
            self._file.write((line + "\n").encode("utf-8"))
            self._file.flush()
            reply = self._file.readline()
        except OSError as exc:
            self.close()
            raise SocketSULError(f"no reply to {line!r}: {exc}") from exc
        if not reply:
            self.close()
            raise SocketSULError("mapper closed the connection")
        return reply.decode("utf-8").strip()

    def query(self, word):
        if self._sock is None:
            self._connect()
        self.queries += 1
        reply = self._exchange(RESET)
        if reply != OK:
            raise SocketSULError(f"expected {OK!r} after {RESET}, got {reply!r}")
        outputs = []
        for i, sym in enumerate(word):
            reply = self._exchange(sym)
            self.symbols_sent += 1
            if reply == ERR_NONDET:
                raise NonDeterministicResponse(word, i, [], "remote mapper reported no majority")
            if reply.startswith("ERROR:"):
                raise SocketSULError(f"mapper rejected {sym!r}: {reply}")
            outputs.append(reply)
        return tuple(outputs)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
