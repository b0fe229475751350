"""Command-line entry points: ``learn``, ``serve-sul`` and ``diff``."""

from __future__ import annotations

import json
import logging
import sys
import time
from pathlib import Path

import click

from .alphabet import ALPHABETS
from .dot import DotParseError, from_dot, to_dot
from .harness import SocketOracle, SocketSULError, SULServer
from .lstar import DEFAULT_MAX_ROUNDS, LearningError, learn
from .mapper import (
    DEFAULT_SKIP_REPEAT, NonDeterministicResponse, VoteMode, default_filters, load_filters,
    simulated_mapper,
)
from .mealy import ContractViolation, equivalent, run
from .oracles import ExhaustiveOracle, RandomEqConfig, RandomWordOracle
from .reference import REFERENCE

EXIT_NONDETERMINISM = 2
EXIT_SOCKET = 3

log = logging.getLogger("quiclearn")


def _option(*decls, **kwargs):
    name = decls[0].lstrip("-").replace("-", "_").upper()
    kwargs.setdefault("envvar", f"QUICLEARN_{name}")
    kwargs.setdefault("show_default", True)
    return click.option(*decls, **kwargs)


def _parse_sul(value: str):
    if value == "sim":
        return None
    if value.startswith("socket:"):
        host, sep, port = value[len("socket:"):].rpartition(":")
        if sep and host and port.isdigit():
            return host, int(port)
    raise click.BadParameter(f"expected 'sim' or 'socket:<host>:<port>', got {value!r}")


def _session_options(vote, repeats, filters):
    return {
        "vote_mode": VoteMode(vote),
        "vote_repeats": repeats,
        "filters": load_filters(filters) if filters else default_filters(),
        "skip_repeat": DEFAULT_SKIP_REPEAT,
    }


_alphabet = _option("--alphabet", type=click.Choice(sorted(ALPHABETS)), default="minimal")
_seed = _option("--seed", type=int, default=0)
_noise = _option("--noise-retx", type=click.FloatRange(0.0, 1.0), default=0.0)
_vote = _option("--vote", type=click.Choice([m.value for m in VoteMode]),
                default=VoteMode.WHOLE_WORD_REVOTE.value)
_repeats = _option("--repeats", type=int, default=3)
_filters = _option("--filters", type=click.Path(exists=True, dir_okay=False), default=None,
                   help="Response filter rules, one 'INPUT OBSERVED -> RETRY|REPLACE:OUT' per line.")


@click.group()
@click.option("-v", "--verbose", count=True)
def main(verbose):
    """Active learning of QUIC handshake state machines."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@main.command("learn")
@_alphabet
@_option("--sul", default="sim", help="'sim' or 'socket:<host>:<port>'.")
@_option("--eq-oracle", type=click.Choice(["random", "exhaustive"]), default="random",
         help="'exhaustive' compares against the built-in reference (sim only).")
@_option("--eq-queries", type=int, default=100)
@_option("--min-len", type=int, default=5)
@_option("--max-len", type=int, default=10)
@_repeats
@_vote
@_noise
@_seed
@_option("--max-rounds", type=int, default=DEFAULT_MAX_ROUNDS)
@_option("--timeout", type=float, default=0.5, help="Reply timeout for socket SULs, seconds.")
@_option("--out", type=click.Path(dir_okay=False), default=None, help="DOT output (default stdout).")
@_option("--stats", type=click.Path(dir_okay=False), default=None, help="Stats JSON output.")
@_filters
def learn_cmd(alphabet, sul, eq_oracle, eq_queries, min_len, max_len, repeats, vote,
              noise_retx, seed, max_rounds, timeout, out, stats, filters):
    """Learn a Mealy machine of the SUL and write it as DOT."""
    symbols = ALPHABETS[alphabet]
    remote = _parse_sul(sul)
    try:
        cfg = RandomEqConfig(eq_queries, min_len, max_len, seed)
        session_options = _session_options(vote, repeats, filters)
        if remote is None:
            oracle = simulated_mapper(symbols, noise_retx, seed, **session_options)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    if remote is not None:
        if eq_oracle == "exhaustive":
            raise click.UsageError("the exhaustive oracle needs --sul sim")
        oracle = SocketOracle(*remote, timeout=timeout)
    if eq_oracle == "exhaustive":
        eq = ExhaustiveOracle(REFERENCE[alphabet])
    else:
        eq = RandomWordOracle(oracle, cfg)

    started = time.perf_counter()
    try:
        machine, learn_stats = learn(oracle, symbols, eq, max_rounds)
    except SocketSULError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_SOCKET)
    except (NonDeterministicResponse, LearningError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_NONDETERMINISM)
    finally:
        if remote is not None:
            oracle.close()
    elapsed_ms = (time.perf_counter() - started) * 1000

    dot = to_dot(machine)
    if out:
        Path(out).write_text(dot, encoding="utf-8")
    else:
        click.echo(dot, nl=False)

    record = learn_stats.as_dict()
    record.update(
        states=len(machine),
        alphabet=alphabet,
        sul=sul,
        eq_oracle=cfg.describe() if eq_oracle == "random" else {"kind": "exhaustive"},
        vote_mode=vote,
        repeats=repeats,
        noise_retx=noise_retx,
        seed=seed,
        wall_time_ms=round(elapsed_ms, 3),
    )
    if eq_oracle == "random":
        record.update(equivalence_test_words=eq.words, equivalence_test_symbols=eq.symbols)
    if remote is None:
        record.update(sul_packets_sent=oracle.packets_sent, sul_resets=oracle.resets,
                      filter_retries=oracle.retries)
    if stats:
        Path(stats).write_text(json.dumps(record, indent=2) + "\n", encoding="utf-8")
    click.echo(
        f"learned {len(machine)} states with {learn_stats.membership_queries} membership "
        f"and {learn_stats.equivalence_queries} equivalence queries", err=True)


@main.command("serve-sul")
@_option("--host", default="127.0.0.1")
@_option("--port", type=int, default=4444, help="0 picks a free port.")
@_option("--alphabet", type=click.Choice(sorted(ALPHABETS)), default="extended")
@_repeats
@_vote
@_noise
@_seed
@_filters
def serve_sul_cmd(host, port, alphabet, repeats, vote, noise_retx, seed, filters):
    """Expose the simulated SUL behind the mapper over the line protocol."""
    symbols = ALPHABETS[alphabet]
    try:
        oracle = simulated_mapper(symbols, noise_retx, seed, **_session_options(vote, repeats, filters))
    except ValueError as exc:
        raise click.UsageError(str(exc))
    try:
        server = SULServer((host, port), oracle, symbols)
    except OSError as exc:
        click.echo(f"error: cannot bind {host}:{port}: {exc}", err=True)
        sys.exit(EXIT_SOCKET)
    with server:
        click.echo(f"listening on {host}:{server.port}")
        sys.stdout.flush()
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass


@main.command("diff")
@click.argument("model_a", type=click.Path(dir_okay=False))
@click.argument("model_b", type=click.Path(dir_okay=False))
def diff_cmd(model_a, model_b):
    """Print 'equivalent' or a shortest word separating two DOT models."""
    machines = []
    for path in (model_a, model_b):
        try:
            machines.append(from_dot(Path(path).read_text(encoding="utf-8")))
        except (OSError, UnicodeDecodeError, DotParseError, ContractViolation) as exc:
            click.echo(f"error: {path}: {exc}", err=True)
            sys.exit(2)
    a, b = machines
    try:
        word = equivalent(a, b)
    except ContractViolation as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    if word is None:
        click.echo("equivalent")
        sys.exit(0)
    click.echo(" ".join(word))
    click.echo(f"{model_a}: {' '.join(run(a, word))}", err=True)
    click.echo(f"{model_b}: {' '.join(run(b, word))}", err=True)
    sys.exit(1)


if __name__ == "__main__":
    main()
