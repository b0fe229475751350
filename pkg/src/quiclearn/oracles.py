"""Equivalence oracles: seeded random words and an exact white-box check."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .lstar import MembershipOracle
from .mealy import MealyMachine, equivalent, run


@dataclass(frozen=True)
class RandomEqConfig:
    num_queries: int = 100
    min_len: int = 5
    max_len: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.num_queries < 1:
            raise ValueError(f"num_queries must be >= 1, got {self.num_queries}")
        if not 1 <= self.min_len <= self.max_len:
            raise ValueError(
                f"need 1 <= min_len <= max_len, got {self.min_len}..{self.max_len}")

    def describe(self) -> dict:
        return {
            "num_queries": self.num_queries,
            "min_len": self.min_len,
            "max_len": self.max_len,
            "seed": self.seed,
            "length_distribution": "uniform",
            "symbol_distribution": "iid-uniform",
        }


def _search(sul: MembershipOracle, hyp: MealyMachine, cfg: RandomEqConfig,
            rng: random.Random, counter=None):
    inputs = list(hyp.inputs)
    for _ in range(cfg.num_queries):
        length = rng.randint(cfg.min_len, cfg.max_len)
        word = tuple(rng.choice(inputs) for _ in range(length))
        if counter is not None:
            counter.words += 1
            counter.symbols += length
        if tuple(sul.query(word)) != run(hyp, word):
            return word
    return None


def random_word_oracle(sul: MembershipOracle, hyp: MealyMachine,
                       cfg: RandomEqConfig) -> tuple | None:
    """First of ``cfg.num_queries`` random words on which SUL and hypothesis differ.

    The generator is seeded from ``cfg.seed`` on every call, so the verdict
    is a pure function of its arguments (for a deterministic SUL).
    """
    if not hyp.inputs:
        raise ValueError("hypothesis has an empty input alphabet")
    return _search(sul, hyp, cfg, random.Random(cfg.seed))


class RandomWordOracle:
    """Stateful variant used inside the learning loop.

    One generator is seeded once, so each equivalence query in a run draws
    fresh words while the whole run stays reproducible.
    """

    def __init__(self, sul: MembershipOracle, cfg: RandomEqConfig):
        self.sul = sul
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self.words = 0
        self.symbols = 0

    def __call__(self, hyp: MealyMachine):
        return _search(self.sul, hyp, self.cfg, self.rng, counter=self)


def exhaustive_oracle(reference: MealyMachine, hyp: MealyMachine) -> tuple | None:
    return equivalent(reference, hyp)


class ExhaustiveOracle:
    def __init__(self, reference: MealyMachine):
        self.reference = reference

    def __call__(self, hyp: MealyMachine):
        return equivalent(self.reference, hyp)


class MachineSUL:
    """Membership oracle answering from a known machine; counts what it serves."""

    def __init__(self, machine: MealyMachine):
        self.machine = machine
        self.queries = 0
        self.symbols = 0

    def query(self, word):
        self.queries += 1
        self.symbols += len(word)
        return run(self.machine, word)
