import socket

import pytest

from quiclearn import harness
from quiclearn.alphabet import EXP, FULL_CHLO, GET, HTTP, INIT_CHLO, MINIMAL_ALPHABET, REJ, SHLO
from quiclearn.harness import (
    ERR_NONDET, ERR_UNKNOWN, OK, LineSession, SocketOracle, SocketSULError, SULServer,
)
from quiclearn.lstar import learn
from quiclearn.mapper import NonDeterministicResponse, simulated_mapper
from quiclearn.mealy import equivalent
from quiclearn.oracles import ExhaustiveOracle, MachineSUL
from quiclearn.reference import M_EXT, M_MIN


class Unreliable:
    def query(self, word):
        raise NonDeterministicResponse(word, len(word) - 1, ["REJ", "SHLO"])


def test_line_session():
    s = LineSession(MachineSUL(M_MIN), MINIMAL_ALPHABET)
    replies = [s.handle_line(x) for x in ["RESET", INIT_CHLO, FULL_CHLO, GET, GET, "0RTT-CHLO"]]
    assert replies == [OK, REJ, SHLO, HTTP, EXP, ERR_UNKNOWN]
    assert s.handle_line("RESET\n") == OK
    assert s.handle_line(GET) == EXP


def test_line_session_reports_nondeterminism():
    s = LineSession(Unreliable(), MINIMAL_ALPHABET)
    assert s.handle_line(INIT_CHLO) == ERR_NONDET
    assert s.history == []


def test_socket_oracle_round_trip(serve):
    server = serve(simulated_mapper(MINIMAL_ALPHABET), MINIMAL_ALPHABET)
    with SocketOracle("127.0.0.1", server.port) as oracle:
        assert oracle.query([INIT_CHLO, FULL_CHLO, GET, GET]) == (REJ, SHLO, HTTP, EXP)
        assert oracle.query([]) == ()
        assert oracle.queries == 2
        assert oracle.symbols_sent == 4


def test_learning_over_socket(serve):
    server = serve(simulated_mapper(M_EXT.inputs), M_EXT.inputs)
    with SocketOracle("127.0.0.1", server.port) as oracle:
        learned, _ = learn(oracle, M_EXT.inputs, ExhaustiveOracle(M_EXT))
    assert equivalent(learned, M_EXT) is None


def test_socket_oracle_errors(serve):
    server = serve(MachineSUL(M_MIN), MINIMAL_ALPHABET)
    with SocketOracle("127.0.0.1", server.port) as oracle:
        with pytest.raises(SocketSULError, match="rejected"):
            oracle.query(["0RTT-CHLO"])
    bad = serve(Unreliable(), MINIMAL_ALPHABET)
    with SocketOracle("127.0.0.1", bad.port) as oracle:
        with pytest.raises(NonDeterministicResponse):
            oracle.query([INIT_CHLO])


def test_socket_oracle_connection_refused(serve):
    server = serve(MachineSUL(M_MIN), MINIMAL_ALPHABET)
    port = server.port
    server.shutdown()
    server.server_close()
    with pytest.raises(SocketSULError, match="cannot connect"):
        SocketOracle("127.0.0.1", port, connect_timeout=1.0).query([GET])


def test_socket_oracle_timeout():
    listener = socket.socket()
    listener.bind(("127.0.0.1", 0))
    listener.listen(1)
    try:
        oracle = SocketOracle("127.0.0.1", listener.getsockname()[1], timeout=0.2)
        with pytest.raises(SocketSULError, match="no reply"):
            oracle.query([GET])
    finally:
        listener.close()


def test_reset_lines_match_queries(serve, monkeypatch):
    resets = []

    class Counting(LineSession):
        def handle_line(self, line):
            if line.strip() == harness.RESET:
                resets.append(1)
            return super().handle_line(line)

    monkeypatch.setattr(harness, "LineSession", Counting)
    server = serve(simulated_mapper(MINIMAL_ALPHABET), MINIMAL_ALPHABET)
    with SocketOracle("127.0.0.1", server.port) as oracle:
        for _ in range(3):
            oracle.query([INIT_CHLO])
    assert len(resets) == 3
