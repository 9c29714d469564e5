"""Text formats for flat and ST domains.

ST documents::

    stdomain
    props: moat castle
    init:
    goal: castle
    action dig-moat:
      tree moat: (moat ? 1 : 1/2)
      tree castle: (castle ? 1 : 0)
    end

Flat documents::

    flatdomain
    states: a b
    init: a
    goal: b
    action go:
      a -> b : 1/2
      a -> a : 1/2
      b -> b : 1
    end

``#`` starts a comment.  Indentation is cosmetic.
"""

from __future__ import annotations

import re
from fractions import Fraction
from pathlib import Path

from .domain import Branch, DecisionTree, FlatDomain, Leaf, STDomain
from .errors import ParseError
from .rational import DEFAULT_MAX_BITS, format_rational, parse_probability, parse_rational

NAME = r"[A-Za-z_][A-Za-z0-9_\-.+]*"
_NAME_RE = re.compile(rf"^{NAME}$")
_TOKEN_RE = re.compile(
    rf"\s*(?:(?P<lp>\()|(?P<rp>\))|(?P<q>\?)|(?P<test>{NAME}:new\b)|(?P<name>{NAME})"
    rf"|(?P<num>[0-9][0-9./]*|\.[0-9]+)|(?P<colon>:))"
)
_ACTION_RE = re.compile(rf"^action\s+({NAME})\s*:\s*$")
_TREE_RE = re.compile(rf"^tree\s+({NAME})\s*:(.*)$")
_ROW_RE = re.compile(rf"^({NAME})\s*->\s*({NAME})\s*:\s*(\S+)\s*$")


def is_name(text: str) -> bool:
    return bool(_NAME_RE.match(text))


def strip_comment(line: str) -> str:
    return line.split("#", 1)[0].rstrip()


def _lines(text):
    """Yield ``(lineno, column_offset, stripped_content)`` of non-blank lines."""
    for no, raw in enumerate(text.splitlines(), start=1):
        body = strip_comment(raw)
        content = body.strip()
        if content:
            yield no, len(body) - len(body.lstrip()), content


def _split_names(rest, lineno, col, kind):
    names = rest.split()
    for n in names:
        if not is_name(n):
            raise ParseError(f"invalid {kind} name {n!r}", lineno, col)
    return names


# ---------------------------------------------------------------- trees

class _TreeParser:
    def __init__(self, text, lineno, col0, known, max_bits):
        self.lineno = lineno
        self.col0 = col0
        self.known = known
        self.max_bits = max_bits
        self.tokens = []
        pos = 0
        text = text.rstrip()
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None or m.end() == pos:
                raise ParseError(f"unexpected character {text[pos]!r}", lineno, col0 + pos + 1)
            kind = m.lastgroup
            start = m.start(kind)
            self.tokens.append((kind, m.group(kind), col0 + start + 1))
            pos = m.end()
        self.i = 0

    def _next(self, expected=None):
        if self.i >= len(self.tokens):
            raise ParseError(f"unexpected end of expression{' (expected ' + expected + ')' if expected else ''}", self.lineno)
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def _expect(self, kind, what):
        tok = self._next(what)
        if tok[0] != kind:
            raise ParseError(f"expected {what}, found {tok[1]!r}", self.lineno, tok[2])
        return tok

    def parse(self):
        node = self._expr()
        if self.i != len(self.tokens):
            tok = self.tokens[self.i]
            raise ParseError(f"trailing input {tok[1]!r}", self.lineno, tok[2])
        return node

    def _expr(self):
        kind, value, col = self._next("expression")
        if kind == "num":
            try:
                return Leaf(parse_probability(value, self.max_bits))
            except ValueError as exc:
                raise ParseError(str(exc), self.lineno, col) from None
        if kind != "lp":
            raise ParseError(f"expected probability or '(', found {value!r}", self.lineno, col)
        kind, value, col = self._next("test proposition")
        if kind == "test":
            prop, new = value[: -len(":new")], True
        elif kind == "name":
            prop, new = value, False
        else:
            raise ParseError(f"expected test proposition, found {value!r}", self.lineno, col)
        if prop not in self.known:
            raise ParseError(f"unknown proposition {prop!r}", self.lineno, col)
        self._expect("q", "'?'")
        left = self._expr()
        self._expect("colon", "':'")
        right = self._expr()
        self._expect("rp", "')'")
        return Branch(prop, new, left, right)


def parse_tree_expr(text, known, lineno=1, col0=0, max_bits=DEFAULT_MAX_BITS):
    return _TreeParser(text, lineno, col0, known, max_bits).parse()


def render_node(node) -> str:
    if isinstance(node, Leaf):
        return format_rational(node.value)
    test = node.prop + (":new" if node.new else "")
    return f"({test} ? {render_node(node.left)} : {render_node(node.right)})"


# --------------------------------------------------------------- parsing

def _header(text):
    for no, col, content in _lines(text):
        return no, content
    raise ParseError("empty document")


def _key(content, key):
    """Return the text after ``key:`` or None when the line is not that key."""
    m = re.match(rf"^{key}\s*:(.*)$", content)
    return None if m is None else m.group(1)


def _parse_st(text, max_bits):
    props = None
    init = goals = None
    actions, trees = [], {}
    current = None
    ended = False
    lines = list(_lines(text))[1:]
    for no, col, content in lines:
        if ended:
            raise ParseError("content after 'end'", no, col + 1)
        if content == "end":
            ended = True
            continue
        if (rest := _key(content, "props")) is not None:
            if props is not None:
                raise ParseError("duplicate 'props:' line", no, col + 1)
            props = _split_names(rest, no, col + 1, "proposition")
            if len(set(props)) != len(props):
                raise ParseError("duplicate proposition", no, col + 1)
            continue
        if (rest := _key(content, "init")) is not None:
            init = (no, col, _split_names(rest, no, col + 1, "proposition"))
            continue
        if (rest := _key(content, "goal")) is not None:
            goals = (no, col, _split_names(rest, no, col + 1, "proposition"))
            continue
        if m := _ACTION_RE.match(content):
            if props is None:
                raise ParseError("'props:' must precede actions", no, col + 1)
            name = m.group(1)
            if name in trees:
                raise ParseError(f"duplicate action {name!r}", no, col + 1)
            actions.append(name)
            trees[name] = []
            current = name
            continue
        if m := _TREE_RE.match(content):
            if current is None:
                raise ParseError("tree outside an action block", no, col + 1)
            label = m.group(1)
            if label not in props:
                raise ParseError(f"unknown proposition {label!r}", no, col + 1)
            root = parse_tree_expr(m.group(2), set(props), no, col + m.start(2), max_bits)
            trees[current].append(DecisionTree(label, root))
            continue
        raise ParseError(f"unrecognised line {content!r}", no, col + 1)
    if not ended:
        raise ParseError("missing 'end'")
    if props is None:
        raise ParseError("missing 'props:' line")
    known = set(props)
    resolved = {}
    for key, item in (("init", init), ("goal", goals)):
        if item is None:
            if key == "goal":
                raise ParseError("missing 'goal:' line")
            resolved[key] = frozenset()
            continue
        no, col, names = item
        for n in names:
            if n not in known:
                raise ParseError(f"unknown proposition {n!r}", no, col + 1)
        resolved[key] = frozenset(names)
    return STDomain(tuple(props), resolved["init"], tuple(actions), trees, resolved["goal"])


def _parse_flat_lines(lines, max_bits, extra=None):
    """Shared flat-format reader; ``extra(no, col, content)`` may claim lines."""
    states = None
    init = goals = None
    actions, rows = [], {}
    current = None
    ended = False
    for no, col, content in lines:
        if ended:
            raise ParseError("content after 'end'", no, col + 1)
        if content == "end":
            ended = True
            continue
        if (rest := _key(content, "states")) is not None:
            if states is not None:
                raise ParseError("duplicate 'states:' line", no, col + 1)
            states = _split_names(rest, no, col + 1, "state")
            if len(set(states)) != len(states):
                raise ParseError("duplicate state", no, col + 1)
            continue
        if (rest := _key(content, "init")) is not None:
            names = _split_names(rest, no, col + 1, "state")
            if len(names) != 1:
                raise ParseError("'init:' needs exactly one state", no, col + 1)
            init = (no, col, names[0])
            continue
        if (rest := _key(content, "goal")) is not None:
            goals = (no, col, _split_names(rest, no, col + 1, "state"))
            continue
        if m := _ACTION_RE.match(content):
            if states is None:
                raise ParseError("'states:' must precede actions", no, col + 1)
            name = m.group(1)
            if name in actions:
                raise ParseError(f"duplicate action {name!r}", no, col + 1)
            actions.append(name)
            current = name
            continue
        if m := _ROW_RE.match(content):
            if current is None:
                raise ParseError("transition row outside an action block", no, col + 1)
            src, dst, lit = m.groups()
            for n, c in ((src, m.start(1)), (dst, m.start(2))):
                if n not in states:
                    raise ParseError(f"unknown state {n!r}", no, col + c + 1)
            try:
                p = parse_probability(lit, max_bits)
            except ValueError as exc:
                raise ParseError(str(exc), no, col + m.start(3) + 1) from None
            row = rows.setdefault((src, current), {})
            if dst in row:
                raise ParseError(f"duplicate transition {src} -> {dst}", no, col + 1)
            row[dst] = p
            continue
        if extra is not None and extra(no, col, content, states, actions):
            continue
        raise ParseError(f"unrecognised line {content!r}", no, col + 1)
    if not ended:
        raise ParseError("missing 'end'")
    if states is None:
        raise ParseError("missing 'states:' line")
    if init is None:
        raise ParseError("missing 'init:' line")
    no, col, s0 = init
    if s0 not in states:
        raise ParseError(f"unknown state {s0!r}", no, col + 1)
    goal_set = frozenset()
    if goals is not None:
        no, col, names = goals
        for n in names:
            if n not in states:
                raise ParseError(f"unknown state {n!r}", no, col + 1)
        goal_set = frozenset(names)
    return states, s0, actions, rows, goal_set, goals is not None


def _parse_flat(text, max_bits):
    states, s0, actions, rows, goals, has_goal = _parse_flat_lines(list(_lines(text))[1:], max_bits)
    if not has_goal:
        raise ParseError("missing 'goal:' line")
    return FlatDomain(tuple(states), s0, tuple(actions), rows, goals)


def parse_domain(text: str, max_bits: int = DEFAULT_MAX_BITS):
    """Parse a ``stdomain`` or ``flatdomain`` document."""
    no, head = _header(text)
    if head == "stdomain":
        return _parse_st(text, max_bits)
    if head == "flatdomain":
        return _parse_flat(text, max_bits)
    raise ParseError(f"expected header 'stdomain' or 'flatdomain', found {head!r}", no, 1)


def load_domain(path, max_bits: int = DEFAULT_MAX_BITS):
    return parse_domain(Path(path).read_text(encoding="utf-8"), max_bits)


# ------------------------------------------------------------- rendering

def _render_st(d: STDomain) -> str:
    lines = ["stdomain", "props: " + " ".join(d.props)]
    lines.append(("init: " + " ".join(p for p in d.props if p in d.init)).rstrip())
    lines.append(("goal: " + " ".join(p for p in d.props if p in d.goals)).rstrip())
    for a in d.actions:
        lines.append(f"action {a}:")
        for t in d.trees.get(a, ()):
            lines.append(f"  tree {t.label}: {render_node(t.root)}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def render_flat_rows(d: FlatDomain):
    order = {s: i for i, s in enumerate(d.states)}
    for a in d.actions:
        yield f"action {a}:"
        for s in d.states:
            row = d.trans.get((s, a))
            if row is None:
                continue
            for dst in sorted(row, key=order.__getitem__):
                yield f"  {s} -> {dst} : {format_rational(row[dst])}"


def _render_flat(d: FlatDomain) -> str:
    lines = ["flatdomain", "states: " + " ".join(d.states), f"init: {d.initial}"]
    lines.append(("goal: " + " ".join(s for s in d.states if s in d.goals)).rstrip())
    lines.extend(render_flat_rows(d))
    lines.append("end")
    return "\n".join(lines) + "\n"


def render_domain(d) -> str:
    if isinstance(d, STDomain):
        return _render_st(d)
    return _render_flat(d)


def normalize_domain_text(text: str) -> str:
    return render_domain(parse_domain(text))


def _coerce(p) -> Fraction:
    return Fraction(p)


__all__ = [
    "parse_domain",
    "load_domain",
    "render_domain",
    "normalize_domain_text",
    "parse_tree_expr",
    "render_node",
    "parse_rational",
]
