"""Translation between abstract learning symbols and simulated QUIC packets.

The mapper is a nearly stateless client. It remembers the connection id of
the last INIT-CHLO / 0RTT-CHLO and the SCFG/STK tags of the last REJ, and it
de-noises the SUL by majority voting and by a small registry of response
filters.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Protocol, Sequence

from .alphabet import (
    CLOSE, CLOSED, EXP, EXTENDED_ALPHABET, FULL_CHLO, GET, HTTP, INIT_CHLO, PRST,
    REJ, SHLO, ZERO_RTT_CHLO,
)
from .quic_sim import (
    DEFAULT_SNI, HANDSHAKE_STREAM, HEADERS_STREAM, UNSET_CONN_ID, Frame, FrameKind, Packet,
    QuicServer,
)

log = logging.getLogger(__name__)

CLIENT_HELLO_TAGS = {"SNI": DEFAULT_SNI, "VER": "Q039", "PDMD": "X509"}
SERVER_TAGS = ("SCFG", "STK")

_ABSTRACT = {
    FrameKind.REJ: REJ,
    FrameKind.SHLO: SHLO,
    FrameKind.HTTP_RESP: HTTP,
    FrameKind.CONN_CLOSE: CLOSED,
    FrameKind.PRST: PRST,
}


class VoteMode(str, Enum):
    IN_SESSION = "in-session"
    WHOLE_WORD_REVOTE = "revote"


# Symbols whose repetition inside one session changes the server state.
DEFAULT_SKIP_REPEAT = frozenset({CLOSE, ZERO_RTT_CHLO, FULL_CHLO, GET})


class FilterAction(Enum):
    DISCARD_AND_RETRY = "RETRY"
    REPLACE = "REPLACE"


class _Retry:
    def __repr__(self):
        return "RETRY"


RETRY = _Retry()


@dataclass(frozen=True)
class FilterRule:
    input: str
    observed: str
    action: FilterAction
    replacement: str | None = None

    def __post_init__(self):
        if (self.action is FilterAction.REPLACE) != (self.replacement is not None):
            raise ValueError("REPLACE rules need a replacement output; RETRY rules take none")

    @classmethod
    def parse(cls, line: str) -> "FilterRule":
        lhs, sep, rhs = line.partition("->")
        parts = lhs.split()
        if not sep or len(parts) != 2:
            raise ValueError(f"bad filter rule {line!r}: expected 'INPUT OBSERVED -> ACTION'")
        rhs = rhs.strip()
        if rhs == "RETRY":
            return cls(parts[0], parts[1], FilterAction.DISCARD_AND_RETRY)
        if rhs.startswith("REPLACE:") and rhs[len("REPLACE:"):].strip():
            return cls(parts[0], parts[1], FilterAction.REPLACE, rhs[len("REPLACE:"):].strip())
        raise ValueError(f"bad filter action {rhs!r}: expected RETRY or REPLACE:<OUTPUT>")

    def __str__(self):
        action = "RETRY" if self.action is FilterAction.DISCARD_AND_RETRY else f"REPLACE:{self.replacement}"
        return f"{self.input} {self.observed} -> {action}"


def default_filters() -> list[FilterRule]:
    # An HTTP answer to a brand-new connection can only be a stale retransmission.
    return [FilterRule(INIT_CHLO, HTTP, FilterAction.DISCARD_AND_RETRY)]


def parse_filters(text: str) -> list[FilterRule]:
    rules = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            rules.append(FilterRule.parse(line))
        except ValueError as exc:
            raise ValueError(f"line {n}: {exc}") from None
    return rules


def load_filters(path) -> list[FilterRule]:
    return parse_filters(Path(path).read_text(encoding="utf-8"))


class NonDeterministicResponse(RuntimeError):
    def __init__(self, word, position, observations, reason="no majority"):
        self.word = tuple(word)
        self.position = position
        self.observations = Counter(observations)
        super().__init__(
            f"{reason} for {self.word[position]!r} at position {position} of "
            f"{list(self.word)}: {dict(self.observations)}")


@dataclass
class MapperSession:
    next_conn_id: int = 0
    current_conn_id: int = UNSET_CONN_ID
    stored_tags: dict | None = None
    vote_repeats: int = 3
    vote_mode: VoteMode = VoteMode.WHOLE_WORD_REVOTE
    skip_repeat: frozenset = DEFAULT_SKIP_REPEAT
    filters: list = field(default_factory=default_filters)
    response_timeout: float = 0.5
    retry_budget: int = 3
    alphabet: tuple = EXTENDED_ALPHABET

    def __post_init__(self):
        self.vote_mode = VoteMode(self.vote_mode)
        if self.vote_repeats < 1 or self.vote_repeats % 2 == 0:
            raise ValueError(f"vote_repeats must be odd and >= 1, got {self.vote_repeats}")

    def reset(self) -> None:
        self.current_conn_id = UNSET_CONN_ID
        self.stored_tags = None


def session_reset(sess: MapperSession) -> MapperSession:
    sess.reset()
    return sess


def concretize(sess: MapperSession, sym: str) -> Packet:
    if sym not in sess.alphabet:
        raise ValueError(f"unknown symbol {sym!r}")
    if sym in (INIT_CHLO, ZERO_RTT_CHLO):
        conn_id = sess.next_conn_id
        sess.next_conn_id += 1
        sess.current_conn_id = conn_id
        tags = dict(CLIENT_HELLO_TAGS)
        if sym == ZERO_RTT_CHLO and sess.stored_tags:
            tags.update(sess.stored_tags)
        return Packet(conn_id, (Frame(FrameKind.CHLO, HANDSHAKE_STREAM, tags),))
    if sym == FULL_CHLO:
        tags = dict(CLIENT_HELLO_TAGS)
        if sess.stored_tags:
            tags.update(sess.stored_tags)
        return Packet(sess.current_conn_id, (Frame(FrameKind.CHLO, HANDSHAKE_STREAM, tags),))
    if sym == GET:
        frame = Frame(FrameKind.HTTP_GET, HEADERS_STREAM, {"SNI": DEFAULT_SNI, ":path": "/"})
        return Packet(sess.current_conn_id, (frame,))
    if sym == CLOSE:
        return Packet(sess.current_conn_id, (Frame(FrameKind.CONN_CLOSE),))
    raise ValueError(f"no concrete message for symbol {sym!r}")


def abstractize(sess: MapperSession, response: Packet | None) -> str:
    if response is None:
        return EXP
    if response.ack_only:
        log.debug("ACK-only packet on connection %d treated as EXP", response.conn_id)
        return EXP
    frame = next(f for f in response.frames if f.kind != FrameKind.ACK)
    if frame.kind == FrameKind.REJ:
        sess.stored_tags = {k: frame.tags[k] for k in SERVER_TAGS if k in frame.tags}
    if frame.kind in _ABSTRACT:
        return _ABSTRACT[frame.kind]
    return f"UNKNOWN:{getattr(frame.kind, 'value', frame.kind)}"


def apply_filters(sess: MapperSession, sym: str, observed: str):
    """Apply the first matching rule; returns an output or :data:`RETRY`."""
    for rule in sess.filters:
        if rule.input == sym and rule.observed == observed:
            if rule.action is FilterAction.DISCARD_AND_RETRY:
                return RETRY
            return rule.replacement
    return observed


def majority(observations: Iterable[str]):
    """Strict majority of ``observations`` or ``None``."""
    observations = list(observations)
    if not observations:
        return None
    value, count = Counter(observations).most_common(1)[0]
    return value if 2 * count > len(observations) else None


class ConcreteSUL(Protocol):
    def reset(self) -> None: ...

    def send(self, packet: Packet) -> Packet | None: ...


class QuicMapper:
    """Membership oracle that drives a concrete SUL through a mapper session."""

    def __init__(self, sul: ConcreteSUL, session: MapperSession | None = None):
        self.sul = sul
        self.session = session or MapperSession()
        self.queries = 0
        self.packets_sent = 0
        self.resets = 0
        self.retries = 0
        self.raw_trace: list[tuple[str, tuple]] = []
        self.last_votes: list[tuple[int, str, tuple]] = []

    def query(self, word: Sequence[str]) -> tuple[str, ...]:
        word = tuple(word)
        for sym in word:
            if sym not in self.session.alphabet:
                raise ValueError(f"unknown symbol {sym!r}")
        self.queries += 1
        self.last_votes = []
        if self.session.vote_mode is VoteMode.IN_SESSION:
            return tuple(self._execute(word, repeat=True))
        runs = [self._execute(word, repeat=False) for _ in range(self.session.vote_repeats)]
        return self._vote_runs(word, runs)

    def _vote_runs(self, word, runs):
        winners = [majority(col) for col in zip(*runs)]
        if None in winners:
            runs.append(self._execute(word, repeat=False))
            winners = [majority(col) for col in zip(*runs)]
        for i, w in enumerate(winners):
            if w is None:
                raise NonDeterministicResponse(word, i, [r[i] for r in runs])
        for i, sym in enumerate(word):
            self.last_votes.append((i, sym, tuple(r[i] for r in runs)))
        return tuple(winners)

    def _restart(self):
        self.sul.reset()
        self.session.reset()
        self.raw_trace = []
        self.resets += 1

    def _exchange(self, sym: str) -> str:
        packet = concretize(self.session, sym)
        response = self.sul.send(packet)
        self.packets_sent += 1
        self.raw_trace.append((sym, tuple(k.value for k in response.kinds()) if response else ()))
        return abstractize(self.session, response)

    def _send_symbol(self, word, i, repeat, record=True) -> str:
        sym = word[i]
        if not repeat or sym in self.session.skip_repeat:
            return self._exchange(sym)
        obs = [self._exchange(sym) for _ in range(self.session.vote_repeats)]
        winner = majority(obs)
        if winner is None:
            obs.append(self._exchange(sym))
            winner = majority(obs)
        if record:
            self.last_votes.append((i, sym, tuple(obs)))
        if winner is None:
            raise NonDeterministicResponse(word, i, obs)
        return winner

    def _execute(self, word, repeat: bool) -> list[str]:
        self._restart()
        outputs = []
        for i in range(len(word)):
            observed = self._send_symbol(word, i, repeat)
            outputs.append(self._filtered(word, i, observed, repeat))
        return outputs

    def _filtered(self, word, i, observed, repeat) -> str:
        """Apply filters; on RETRY isolate the request and send it once more."""
        seen = [observed]
        budget = self.session.retry_budget
        while True:
            result = apply_filters(self.session, word[i], observed)
            if result is not RETRY:
                return result
            if budget == 0:
                raise NonDeterministicResponse(word, i, seen, "retry budget exhausted")
            budget -= 1
            self.retries += 1
            log.debug("filter discarded %s after %s; isolating", observed, word[i])
            self._restart()
            for j in range(i):
                self._send_symbol(word, j, repeat, record=False)
            observed = self._exchange(word[i])
            seen.append(observed)


def simulated_mapper(alphabet=EXTENDED_ALPHABET, noise_retx: float = 0.0, seed=0,
                     **session_options) -> QuicMapper:
    """A mapper wired to a fresh :class:`QuicServer`."""
    session = MapperSession(alphabet=tuple(alphabet), **session_options)
    return QuicMapper(QuicServer(seed=seed, noise_retx=noise_retx), session)
