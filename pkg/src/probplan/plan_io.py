"""Text formats for plans and partially ordered plans.

::

    plan
    node v0: action dig-moat
      -> v1 if moat
      -> v2 if !moat
    node v1: action erect-castle
      -> T if *
    node v2: action dig-moat
      -> T if *
    node T: terminal
    start v0
    end

    poplan
    step d1: dig-moat
    step e1: erect-castle
    order d1 < e1
    end
"""

from __future__ import annotations

import re
from pathlib import Path

from .domain_io import NAME, _lines
from .errors import ParseError, StructureError
from .plan import ALWAYS, Edge, Guard, GuardKind, PartialOrderPlan, Plan, PlanNode, Step

_NODE_RE = re.compile(rf"^node\s+({NAME})\s*:\s*(?:action\s+({NAME})|terminal(?:\s+({NAME}))?)\s*$")
_EDGE_RE = re.compile(rf"^->\s*({NAME})\s+if\s+(.+)$")
_START_RE = re.compile(rf"^start\s+({NAME})\s*$")
_STEP_RE = re.compile(rf"^step\s+({NAME})\s*:\s*({NAME})\s*$")
_ORDER_RE = re.compile(r"^order\s+(.+)$")
_LIT_RE = re.compile(rf"^(!?)\s*({NAME})$")
_FULL_NAME_RE = re.compile(rf"^{NAME}$")


def parse_guard(text: str, lineno=None, col=None) -> Guard:
    text = text.strip()
    if text == "*":
        return ALWAYS
    if text.startswith("{"):
        if not text.endswith("}"):
            raise ParseError("unterminated state set", lineno, col)
        inner = text[1:-1].strip()
        names = [s.strip() for s in inner.split(",")] if inner else []
        for n in names:
            if not _FULL_NAME_RE.match(n):
                raise ParseError(f"invalid state name {n!r} in guard", lineno, col)
        return Guard.state_set(names)
    lits = []
    for part in text.split("&"):
        m = _LIT_RE.match(part.strip())
        if m is None:
            raise ParseError(f"invalid guard literal {part.strip()!r}", lineno, col)
        lits.append((m.group(2), not m.group(1)))
    return Guard(GuardKind.LITERALS, literals=tuple(lits))


def _parse_plan(lines):
    nodes, edges = [], []
    names = {}
    start = None
    current = None
    ended = False
    for no, col, content in lines:
        if ended:
            raise ParseError("content after 'end'", no, col + 1)
        if content == "end":
            ended = True
            continue
        if m := _NODE_RE.match(content):
            name = m.group(1)
            if name in names:
                raise ParseError(f"duplicate node {name!r}", no, col + 1)
            node = PlanNode(name, m.group(2))
            names[name] = (no, col)
            nodes.append(node)
            current = node
            continue
        if m := _EDGE_RE.match(content):
            if current is None:
                raise ParseError("edge outside a node block", no, col + 1)
            if current.terminal:
                raise ParseError(f"edge from terminal node {current.name!r}", no, col + 1)
            guard = parse_guard(m.group(2), no, col + m.start(2) + 1)
            edges.append((no, col + m.start(1) + 1, Edge(current.name, m.group(1), guard)))
            continue
        if m := _START_RE.match(content):
            if start is not None:
                raise ParseError("duplicate 'start' line", no, col + 1)
            start = (no, col + m.start(1) + 1, m.group(1))
            continue
        raise ParseError(f"unrecognised line {content!r}", no, col + 1)
    if not ended:
        raise ParseError("missing 'end'")
    if start is None:
        raise ParseError("missing 'start' line")
    for no, col, e in edges:
        if e.dst not in names:
            raise ParseError(f"unknown node {e.dst!r}", no, col)
    no, col, s = start
    if s not in names:
        raise ParseError(f"unknown node {s!r}", no, col)
    return Plan(tuple(nodes), tuple(e for _, _, e in edges), s)


def _parse_poplan(lines):
    steps, ids = [], set()
    pairs = []
    ended = False
    for no, col, content in lines:
        if ended:
            raise ParseError("content after 'end'", no, col + 1)
        if content == "end":
            ended = True
            continue
        if m := _STEP_RE.match(content):
            sid = m.group(1)
            if sid in ids:
                raise ParseError(f"duplicate step {sid!r}", no, col + 1)
            ids.add(sid)
            steps.append(Step(sid, m.group(2)))
            continue
        if m := _ORDER_RE.match(content):
            chain = [c.strip() for c in m.group(1).split("<")]
            if len(chain) < 2:
                raise ParseError("order needs at least two steps", no, col + 1)
            for c in chain:
                if not _FULL_NAME_RE.match(c):
                    raise ParseError(f"invalid step id {c!r}", no, col + 1)
            pairs.append((no, col, list(zip(chain, chain[1:]))))
            continue
        raise ParseError(f"unrecognised line {content!r}", no, col + 1)
    if not ended:
        raise ParseError("missing 'end'")
    order = set()
    for no, col, chain_pairs in pairs:
        for a, b in chain_pairs:
            for x in (a, b):
                if x not in ids:
                    raise ParseError(f"unknown step {x!r}", no, col + 1)
            order.add((a, b))
    try:
        return PartialOrderPlan(tuple(steps), frozenset(order))
    except StructureError as exc:
        raise ParseError(str(exc)) from None


def parse_plan(text: str):
    """Parse a ``plan`` or ``poplan`` document."""
    lines = list(_lines(text))
    if not lines:
        raise ParseError("empty document")
    no, col, head = lines[0]
    if head == "plan":
        return _parse_plan(lines[1:])
    if head == "poplan":
        return _parse_poplan(lines[1:])
    raise ParseError(f"expected header 'plan' or 'poplan', found {head!r}", no, col + 1)


def load_plan(path):
    return parse_plan(Path(path).read_text(encoding="utf-8"))


def render_plan(p) -> str:
    if isinstance(p, PartialOrderPlan):
        lines = ["poplan"]
        lines += [f"step {s.id}: {s.action}" for s in p.steps]
        lines += [f"order {a} < {b}" for a, b in sorted(p.order)]
        lines.append("end")
        return "\n".join(lines) + "\n"
    lines = ["plan"]
    for n in p.nodes:
        if n.terminal:
            lines.append(f"node {n.name}: terminal")
            continue
        lines.append(f"node {n.name}: action {n.action}")
        for e in p.outgoing(n.name):
            lines.append(f"  -> {e.dst} if {e.guard}")
    lines.append(f"start {p.start}")
    lines.append("end")
    return "\n".join(lines) + "\n"
