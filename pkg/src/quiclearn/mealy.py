"""Deterministic Mealy machines: execution, equivalence and minimization."""

from __future__ import annotations

import random
from collections import deque
from typing import Hashable, Iterable, Mapping, Sequence

State = Hashable
Word = tuple


class ContractViolation(ValueError):
    """Raised when an operation is called outside its precondition."""


class MealyMachine:
    """An immutable, complete, deterministic Mealy machine.

    ``delta`` and ``lam`` map ``(state, input)`` pairs to the successor state
    and the emitted output. Both must be total over ``states x inputs``.
    """

    __slots__ = ("states", "initial", "inputs", "outputs", "_delta", "_lam")

    def __init__(
        self,
        states: Iterable[State],
        initial: State,
        inputs: Iterable[str],
        delta: Mapping[tuple, State],
        lam: Mapping[tuple, str],
        outputs: Iterable[str] | None = None,
    ):
        states = tuple(dict.fromkeys(states))
        inputs = tuple(dict.fromkeys(inputs))
        delta = dict(delta)
        lam = dict(lam)
        if initial not in states:
            raise ContractViolation(f"initial state {initial!r} is not a state")
        for s in states:
            for a in inputs:
                if (s, a) not in delta or (s, a) not in lam:
                    raise ContractViolation(f"transition ({s!r}, {a!r}) is undefined")
                if delta[s, a] not in states:
                    raise ContractViolation(
                        f"transition ({s!r}, {a!r}) targets unknown state {delta[s, a]!r}"
                    )
        used = {lam[s, a] for s in states for a in inputs}
        if outputs is None:
            outputs = used
        outputs = frozenset(outputs)
        if not used <= outputs:
            raise ContractViolation(f"outputs {sorted(used - outputs)} are not declared")
        keys = {(s, a) for s in states for a in inputs}
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "initial", initial)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outputs", outputs)
        object.__setattr__(self, "_delta", {k: delta[k] for k in keys})
        object.__setattr__(self, "_lam", {k: lam[k] for k in keys})

    def __setattr__(self, name, value):
        raise AttributeError("MealyMachine is immutable")

    @classmethod
    def from_table(cls, table: Mapping[State, Mapping[str, tuple]], initial: State,
                   inputs: Sequence[str] | None = None) -> "MealyMachine":
        """Build from ``{state: {input: (output, target)}}``."""
        if inputs is None:
            inputs = list(dict.fromkeys(a for row in table.values() for a in row))
        delta, lam = {}, {}
        for s, row in table.items():
            for a, (out, target) in row.items():
                delta[s, a] = target
                lam[s, a] = out
        return cls(table.keys(), initial, inputs, delta, lam)

    def delta(self, state: State, symbol: str) -> State:
        return self._delta[state, symbol]

    def output(self, state: State, symbol: str) -> str:
        return self._lam[state, symbol]

    def transitions(self):
        """Yield ``(state, input, output, target)`` in declaration order."""
        for s in self.states:
            for a in self.inputs:
                yield s, a, self._lam[s, a], self._delta[s, a]

    def replace(self, state: State, symbol: str, *, output: str | None = None,
                target: State | None = None) -> "MealyMachine":
        """Return a copy with one transition's output and/or target changed."""
        delta, lam = dict(self._delta), dict(self._lam)
        if output is not None:
            lam[state, symbol] = output
        if target is not None:
            delta[state, symbol] = target
        return MealyMachine(self.states, self.initial, self.inputs, delta, lam)

    def restrict(self, inputs: Sequence[str]) -> "MealyMachine":
        """Drop every input column not in ``inputs``."""
        missing = set(inputs) - set(self.inputs)
        if missing:
            raise ContractViolation(f"unknown inputs {sorted(missing)}")
        return MealyMachine(self.states, self.initial, inputs, self._delta, self._lam)

    def reachable_states(self) -> tuple:
        seen = {self.initial: None}
        queue = deque([self.initial])
        while queue:
            s = queue.popleft()
            for a in self.inputs:
                t = self._delta[s, a]
                if t not in seen:
                    seen[t] = None
                    queue.append(t)
        return tuple(seen)

    def __len__(self):
        return len(self.states)

    def __repr__(self):
        return (f"MealyMachine(states={len(self.states)}, inputs={list(self.inputs)}, "
                f"initial={self.initial!r})")


def step(m: MealyMachine, state: State, symbol: str) -> tuple[State, str]:
    if state not in m.states:
        raise ContractViolation(f"unknown state {state!r}")
    if symbol not in m.inputs:
        raise ContractViolation(f"symbol {symbol!r} is not in the input alphabet")
    return m.delta(state, symbol), m.output(state, symbol)


def run_from(m: MealyMachine, state: State, word: Sequence[str]) -> tuple[str, ...]:
    outputs = []
    for a in word:
        state, out = step(m, state, a)
        outputs.append(out)
    return tuple(outputs)


def run(m: MealyMachine, word: Sequence[str]) -> tuple[str, ...]:
    """Output word produced by ``m`` on ``word`` from the initial state."""
    return run_from(m, m.initial, word)


def reach(m: MealyMachine, word: Sequence[str]) -> State:
    state = m.initial
    for a in word:
        state, _ = step(m, state, a)
    return state


def equivalent(m1: MealyMachine, m2: MealyMachine) -> Word | None:
    """Return a shortest separating word, or ``None`` if the machines agree.

    Breadth-first search over the product automaton. Among the shortest
    witnesses, the one minimal in ``m1``'s input order is returned.
    """
    if set(m1.inputs) != set(m2.inputs):
        raise ContractViolation(
            f"alphabet mismatch: {sorted(m1.inputs)} vs {sorted(m2.inputs)}")
    start = (m1.initial, m2.initial)
    access = {start: ()}
    queue = deque([start])
    while queue:
        pair = queue.popleft()
        s1, s2 = pair
        for a in m1.inputs:
            if m1.output(s1, a) != m2.output(s2, a):
                return access[pair] + (a,)
        for a in m1.inputs:
            nxt = (m1.delta(s1, a), m2.delta(s2, a))
            if nxt not in access:
                access[nxt] = access[pair] + (a,)
                queue.append(nxt)
    return None


def minimize(m: MealyMachine) -> MealyMachine:
    """Minimal machine equivalent to ``m``; unreachable states are dropped.

    Moore-style partition refinement: states start grouped by their output
    row and are split by the blocks of their successors until stable. The
    surviving block of each state is named after its first member.
    """
    states = m.reachable_states()
    block = {s: tuple(m.output(s, a) for a in m.inputs) for s in states}
    n_blocks = len(set(block.values()))
    while True:
        refined = {
            s: (block[s], tuple(block[m.delta(s, a)] for a in m.inputs))
            for s in states
        }
        n_refined = len(set(refined.values()))
        ids = {}
        for s in states:
            ids.setdefault(refined[s], len(ids))
        block = {s: ids[refined[s]] for s in states}
        if n_refined == n_blocks:
            break
        n_blocks = n_refined
    rep = {}
    for s in states:
        rep.setdefault(block[s], s)
    new_states = list(rep.values())
    delta, lam = {}, {}
    for s in new_states:
        for a in m.inputs:
            delta[s, a] = rep[block[m.delta(s, a)]]
            lam[s, a] = m.output(s, a)
    return MealyMachine(new_states, rep[block[m.initial]], m.inputs, delta, lam)


def random_machine(rng: random.Random, n_states: int, inputs: Sequence[str],
                   outputs: Sequence[str]) -> MealyMachine:
    """Uniformly wired random machine; states are named ``q0..q{n-1}``."""
    states = [f"q{i}" for i in range(n_states)]
    delta, lam = {}, {}
    for s in states:
        for a in inputs:
            delta[s, a] = rng.choice(states)
            lam[s, a] = rng.choice(outputs)
    return MealyMachine(states, states[0], inputs, delta, lam)
