"""Reading and writing Mealy machines as Graphviz DOT.

The dialect is a small subset of DOT::

    digraph g {
        __start [shape=none, label=""];
        S0 [shape=circle];
        __start -> S0;
        S0 -> S1 [label="INIT-CHLO/REJ"];
    }

The initial state is the target of the edge leaving the synthetic
``__start`` node. Every other edge carries an ``input/output`` label.
"""

from __future__ import annotations

import re

from .mealy import MealyMachine

START = "__start"

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*|\#[^\n]*|/\*.*?\*/)
  | (?P<arrow>->|--)
  | (?P<punct>[{}\[\];,=])
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<id>[A-Za-z_\x80-\uffff][A-Za-z0-9_\x80-\uffff]*|-?(?:\.[0-9]+|[0-9]+(?:\.[0-9]*)?))
    """,
    re.VERBOSE | re.DOTALL,
)


class DotParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


def _quote(name) -> str:
    text = str(name)
    if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", text):
        return text
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(m: MealyMachine, name: str = "g") -> str:
    lines = [f"digraph {_quote(name)} {{", f'    {START} [shape=none, label=""];']
    for s in m.states:
        shape = "doublecircle" if s == m.initial else "circle"
        lines.append(f"    {_quote(s)} [shape={shape}];")
    lines.append(f"    {START} -> {_quote(m.initial)};")
    for s, a, out, t in m.transitions():
        if "/" in a or "/" in out:
            raise ValueError(f"symbol names may not contain '/': {a!r}, {out!r}")
        lines.append(f"    {_quote(s)} -> {_quote(t)} [label={_quote(f'{a}/{out}')}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _tokenize(text: str):
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if match is None:
            raise DotParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = match.lastgroup
        value = match.group()
        col = pos - line_start + 1
        if kind not in ("ws", "comment"):
            if kind == "string":
                value = re.sub(r"\\(.)", r"\1", value[1:-1])
            yield kind, value, line, col
        raw = match.group()
        if "\n" in raw:
            line += raw.count("\n")
            line_start = pos + raw.rfind("\n") + 1
        pos = match.end()
    yield "eof", "", line, pos - line_start + 1


class _Parser:
    def __init__(self, text: str):
        self.tokens = list(_tokenize(text))
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        _, _, line, col = tok or self.peek()
        return DotParseError(message, line, col)

    def expect(self, value):
        tok = self.next()
        if tok[1] != value or tok[0] == "string":
            raise self.error(f"expected {value!r}, found {tok[1]!r}", tok)
        return tok

    def ident(self):
        tok = self.next()
        if tok[0] not in ("id", "string"):
            raise self.error(f"expected identifier, found {tok[1] or 'end of input'!r}", tok)
        return tok[1]

    def attrs(self) -> dict:
        result = {}
        while self.peek()[1] == "[" and self.peek()[0] == "punct":
            self.next()
            while not (self.peek()[0] == "punct" and self.peek()[1] == "]"):
                key = self.ident()
                self.expect("=")
                result[key] = self.ident()
                if self.peek()[0] == "punct" and self.peek()[1] in ",;":
                    self.next()
            self.next()
        return result

    def graph(self):
        """Return (node names, edges) where edges are (src, dst, attrs, token)."""
        tok = self.next()
        if tok[1] == "strict":
            tok = self.next()
        if tok[1] != "digraph":
            raise self.error("expected 'digraph'", tok)
        if self.peek()[0] in ("id", "string"):
            self.next()
        self.expect("{")
        nodes, edges = {}, []
        while True:
            tok = self.peek()
            if tok[0] == "punct" and tok[1] == "}":
                self.next()
                break
            if tok[0] == "eof":
                raise self.error("unterminated graph body")
            if tok[0] == "punct" and tok[1] == ";":
                self.next()
                continue
            if tok[0] == "id" and tok[1] in ("graph", "node", "edge"):
                self.next()
                self.attrs()
                continue
            name = self.ident()
            if self.peek()[0] == "punct" and self.peek()[1] == "=":
                self.next()
                self.ident()
                continue
            chain = [name]
            while self.peek()[0] == "arrow":
                arrow = self.next()
                if arrow[1] != "->":
                    raise self.error("undirected edge in digraph", arrow)
                chain.append(self.ident())
            attrs = self.attrs()
            for n in chain:
                nodes.setdefault(n, None)
            if len(chain) == 1:
                continue
            for src, dst in zip(chain, chain[1:]):
                edges.append((src, dst, attrs, tok))
        if self.peek()[0] != "eof":
            raise self.error(f"trailing input {self.peek()[1]!r}")
        return list(nodes), edges


def from_dot(text: str) -> MealyMachine:
    nodes, edges = _Parser(text).graph()
    initial = None
    states = [n for n in nodes if n != START]
    inputs = {}
    delta, lam = {}, {}
    for src, dst, attrs, tok in edges:
        if src == START:
            if initial is not None and initial != dst:
                raise DotParseError("more than one initial-state marker", tok[2], tok[3])
            initial = dst
            continue
        if dst == START:
            raise DotParseError(f"edge into {START}", tok[2], tok[3])
        label = attrs.get("label")
        if label is None:
            raise DotParseError(f"edge {src} -> {dst} has no label", tok[2], tok[3])
        parts = label.split("/")
        if len(parts) != 2 or not all(p.strip() for p in parts):
            raise DotParseError(f"label {label!r} is not of the form input/output", tok[2], tok[3])
        a, out = (p.strip() for p in parts)
        if (src, a) in delta and (delta[src, a], lam[src, a]) != (dst, out):
            raise DotParseError(f"nondeterministic transition on {a!r} from {src}", tok[2], tok[3])
        inputs.setdefault(a, None)
        delta[src, a] = dst
        lam[src, a] = out
    if initial is None:
        raise DotParseError("missing initial-state marker")
    for s in states:
        for a in inputs:
            if (s, a) not in delta:
                raise DotParseError(f"state {s} has no transition on {a!r}")
    return MealyMachine(states, initial, list(inputs), delta, lam)
