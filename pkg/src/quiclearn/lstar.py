"""Angluin-style L* for Mealy machines.

The observation table keeps a prefix-closed set of access words ``S`` and a
suffix set ``E`` that always contains every one-symbol word. A cell holds
the outputs produced by the suffix after the prefix has been read, so the
output of a transition is read directly from the ``(p, (a,))`` cell.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Protocol, Sequence

from .mealy import ContractViolation, MealyMachine, run

log = logging.getLogger(__name__)

DEFAULT_MAX_ROUNDS = 1000


class MembershipOracle(Protocol):
    def query(self, word: Sequence[str]) -> tuple[str, ...]:
        """Reset the SUL, feed ``word`` and return one output per symbol."""


EquivalenceOracle = Callable[[MealyMachine], Optional[tuple]]


class LearningError(RuntimeError):
    def __init__(self, message: str, hypothesis: MealyMachine | None = None):
        super().__init__(message)
        self.hypothesis = hypothesis


class CounterexampleRejected(ValueError):
    """The proposed counterexample does not separate SUL and hypothesis."""


@dataclass
class LearnStats:
    membership_queries: int = 0
    equivalence_queries: int = 0
    refinement_rounds: int = 0
    total_input_symbols_sent: int = 0
    rejected_counterexamples: int = 0
    hypothesis_sizes: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return asdict(self)


class CachedOracle:
    """Memoizing wrapper: each distinct word reaches the SUL at most once."""

    def __init__(self, oracle: MembershipOracle):
        self.oracle = oracle
        self.cache: dict[tuple, tuple] = {}
        self.misses = 0
        self.symbols_sent = 0

    def query(self, word):
        word = tuple(word)
        if word not in self.cache:
            out = tuple(self.oracle.query(word))
            if len(out) != len(word):
                raise LearningError(
                    f"oracle returned {len(out)} outputs for a word of length {len(word)}")
            self.cache[word] = out
            self.misses += 1
            self.symbols_sent += len(word)
        return self.cache[word]


class ObservationTable:
    def __init__(self, alphabet: Sequence[str]):
        if not alphabet:
            raise ContractViolation("input alphabet is empty")
        self.alphabet = tuple(alphabet)
        self.prefixes: list[tuple] = [()]
        self.suffixes: list[tuple] = [(a,) for a in self.alphabet]
        self.cells: dict[tuple, tuple] = {}

    def boundary(self) -> list[tuple]:
        in_s = set(self.prefixes)
        out = []
        for p in self.prefixes:
            for a in self.alphabet:
                pa = p + (a,)
                if pa not in in_s:
                    out.append(pa)
        return out

    def all_rows(self) -> list[tuple]:
        return self.prefixes + self.boundary()

    def row(self, prefix: tuple) -> tuple:
        return tuple(self.cells[prefix, e] for e in self.suffixes)

    def missing(self):
        return [(p, e) for p in self.all_rows() for e in self.suffixes
                if (p, e) not in self.cells]

    def find_unclosed(self) -> tuple | None:
        """First boundary prefix whose row matches no row of ``S``."""
        s_rows = {self.row(p) for p in self.prefixes}
        for p in self.boundary():
            if self.row(p) not in s_rows:
                return p
        return None

    def find_inconsistency(self):
        """Return ``(new_suffix, (s1, s2))`` for the first inconsistency, else ``None``."""
        for i, s1 in enumerate(self.prefixes):
            r1 = self.row(s1)
            for s2 in self.prefixes[i + 1:]:
                if self.row(s2) != r1:
                    continue
                for a in self.alphabet:
                    for e in self.suffixes:
                        if self.cells[s1 + (a,), e] != self.cells[s2 + (a,), e]:
                            return (a,) + e, (s1, s2)
        return None

    def is_closed(self) -> bool:
        return not self.missing() and self.find_unclosed() is None

    def is_consistent(self) -> bool:
        return not self.missing() and self.find_inconsistency() is None

    def __repr__(self):
        return (f"ObservationTable(|S|={len(self.prefixes)}, |E|={len(self.suffixes)}, "
                f"cells={len(self.cells)})")


def fill_table(t: ObservationTable, oracle: MembershipOracle) -> ObservationTable:
    for p, e in t.missing():
        out = oracle.query(p + e)
        t.cells[p, e] = tuple(out[len(p):])
    return t


def close_and_make_consistent(t: ObservationTable, oracle: MembershipOracle,
                              max_rounds: int = DEFAULT_MAX_ROUNDS) -> ObservationTable:
    rounds = 0
    while True:
        fill_table(t, oracle)
        unclosed = t.find_unclosed()
        if unclosed is not None:
            if rounds >= max_rounds:
                raise LearningError(
                    f"round cap {max_rounds} reached: row {list(unclosed)} is not closed")
            t.prefixes.append(unclosed)
            rounds += 1
            continue
        found = t.find_inconsistency()
        if found is not None:
            suffix, (s1, s2) = found
            if rounds >= max_rounds:
                raise LearningError(
                    f"round cap {max_rounds} reached: rows {list(s1)} and {list(s2)} "
                    f"are inconsistent on {list(suffix)}")
            t.suffixes.append(suffix)
            rounds += 1
            continue
        return t


def hypothesis(t: ObservationTable) -> MealyMachine:
    if t.missing():
        raise ContractViolation("observation table has unfilled cells")
    if t.find_unclosed() is not None or t.find_inconsistency() is not None:
        raise ContractViolation("observation table is not closed and consistent")
    names = {}
    for p in t.prefixes:
        names.setdefault(t.row(p), f"s{len(names)}")
    delta, lam = {}, {}
    for p in t.prefixes:
        src = names[t.row(p)]
        for a in t.alphabet:
            delta[src, a] = names[t.row(p + (a,))]
            lam[src, a] = t.cells[p, (a,)][0]
    return MealyMachine(names.values(), names[t.row(())], t.alphabet, delta, lam)


def refine(t: ObservationTable, counterexample: Sequence[str], oracle: MembershipOracle,
           hyp: MealyMachine | None = None,
           max_rounds: int = DEFAULT_MAX_ROUNDS) -> ObservationTable:
    """Add every prefix of ``counterexample`` to ``S`` and restore closedness."""
    cex = tuple(counterexample)
    if hyp is None:
        hyp = hypothesis(t)
    observed = tuple(oracle.query(cex))
    if run(hyp, cex) == observed:
        raise CounterexampleRejected(
            f"{list(cex)} yields {list(observed)} on both the SUL and the hypothesis")
    known = set(t.prefixes)
    for i in range(1, len(cex) + 1):
        if cex[:i] not in known:
            t.prefixes.append(cex[:i])
            known.add(cex[:i])
    return close_and_make_consistent(t, oracle, max_rounds)


def learn(oracle: MembershipOracle, alphabet: Sequence[str], eq: EquivalenceOracle,
          max_rounds: int = DEFAULT_MAX_ROUNDS) -> tuple[MealyMachine, LearnStats]:
    """Run L* until ``eq`` finds no counterexample.

    Membership queries go through a :class:`CachedOracle`. A counterexample
    that fails to reproduce on re-query (possible with a noisy SUL) is
    dropped and the equivalence oracle is asked again; every such attempt
    counts toward ``max_rounds``.
    """
    if not alphabet:
        raise ContractViolation("input alphabet is empty")
    cached = oracle if isinstance(oracle, CachedOracle) else CachedOracle(oracle)
    stats = LearnStats()

    def sync():
        stats.membership_queries = cached.misses
        stats.total_input_symbols_sent = cached.symbols_sent

    t = ObservationTable(alphabet)
    close_and_make_consistent(t, cached, max_rounds)
    hyp = None
    for _ in range(max_rounds + 1):
        hyp = hypothesis(t)
        stats.hypothesis_sizes.append(len(hyp))
        stats.equivalence_queries += 1
        sync()
        cex = eq(hyp)
        if cex is None:
            log.info("hypothesis with %d states accepted", len(hyp))
            return hyp, stats
        log.debug("counterexample %s", list(cex))
        try:
            refine(t, cex, cached, hyp, max_rounds)
        except CounterexampleRejected as exc:
            stats.rejected_counterexamples += 1
            log.warning("dropping counterexample: %s", exc)
            continue
        finally:
            sync()
        stats.refinement_rounds += 1
    raise LearningError(f"no accepted hypothesis after {max_rounds} rounds", hyp)
