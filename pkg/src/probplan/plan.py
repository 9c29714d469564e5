"""Plans as finite-state controllers, and partially ordered plans.

A :class:`Plan` is a directed graph of steps.  Each non-terminal node
carries an action; each edge carries a :class:`Guard` saying which next
states follow it.  A :class:`PartialOrderPlan` is a set of labelled steps
with a precedence relation and stands for all of its linear extensions.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .domain import FlatDomain, STDomain, ValidationReport, Violation
from .errors import CapExceeded, StructureError

DEFAULT_EXTENSION_CAP = 10**7
MAX_GUARD_PROPS = 20


# --------------------------------------------------------------- guards

class GuardKind(enum.Enum):
    ALWAYS = "always"
    LITERALS = "literals"
    STATES = "states"


@dataclass(frozen=True)
class Guard:
    """Edge label.

    ``literals`` is a tuple of ``(proposition, positive)`` pairs read as a
    conjunction; ``states`` is an explicit set of flat state names.
    """

    kind: GuardKind
    literals: tuple = ()
    states: frozenset = frozenset()

    @staticmethod
    def always() -> "Guard":
        return ALWAYS

    @staticmethod
    def conj(*literals) -> "Guard":
        """``Guard.conj("moat", "!castle")`` or pairs ``("moat", True)``."""
        lits = []
        for lit in literals:
            if isinstance(lit, str):
                lits.append((lit[1:], False) if lit.startswith("!") else (lit, True))
            else:
                prop, positive = lit
                lits.append((prop, bool(positive)))
        if not lits:
            return ALWAYS
        return Guard(GuardKind.LITERALS, literals=tuple(lits))

    @staticmethod
    def state_set(states: Iterable[str]) -> "Guard":
        return Guard(GuardKind.STATES, states=frozenset(states))

    def props(self) -> set:
        return {p for p, _ in self.literals}

    def __str__(self):
        if self.kind is GuardKind.ALWAYS:
            return "*"
        if self.kind is GuardKind.LITERALS:
            return " & ".join(p if pos else "!" + p for p, pos in self.literals)
        return "{" + ",".join(sorted(self.states)) + "}"


ALWAYS = Guard(GuardKind.ALWAYS)


def guard_matches(g: Guard, state, domain=None) -> bool:
    """Does ``state`` satisfy ``g``?

    Without a domain, ``state`` is the set of true propositions (literal
    guards) or a flat state name (set guards).  With a domain, ``state`` may
    be anything the domain's ``encode_state`` accepts, and unknown
    propositions raise KeyError.
    """
    if g.kind is GuardKind.ALWAYS:
        return True
    if domain is not None:
        sid = domain.encode_state(state)
        return compile_guard(g, domain)(sid)
    if g.kind is GuardKind.LITERALS:
        true = {state} if isinstance(state, str) else set(state)
        return all((p in true) == pos for p, pos in g.literals)
    return state in g.states


def compile_guard(g: Guard, domain):
    """Return a predicate on the domain's integer state ids."""
    if g.kind is GuardKind.ALWAYS:
        return lambda sid: True
    if g.kind is GuardKind.LITERALS:
        if not isinstance(domain, STDomain):
            raise StructureError(f"literal guard {g} used with a flat domain")
        pos = domain.mask(p for p, v in g.literals if v)
        neg = domain.mask(p for p, v in g.literals if not v)
        return lambda sid: (sid & pos) == pos and not (sid & neg)
    if not isinstance(domain, FlatDomain):
        raise StructureError(f"state-set guard {g} used with an ST domain")
    ids = frozenset(domain.encode_state(s) for s in g.states)
    return ids.__contains__


# ---------------------------------------------------------------- plans

@dataclass(frozen=True)
class PlanNode:
    name: str
    action: Optional[str] = None

    @property
    def terminal(self) -> bool:
        return self.action is None


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    guard: Guard = ALWAYS


class PlanClass(enum.Enum):
    TOTALLY_ORDERED = "totally-ordered"
    ACYCLIC = "acyclic"
    LOOPING = "looping"


@dataclass(frozen=True)
class Plan:
    """Finite-state controller ``(V, v0, E, pi, delta)``.

    Terminal nodes have ``action=None``.  Several edges between the same
    pair of nodes are allowed; their guards are read as a union.
    """

    nodes: tuple
    edges: tuple
    start: str
    _index: dict = field(default=None, init=False, repr=False, compare=False)
    _out: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        index = {}
        for i, n in enumerate(self.nodes):
            if n.name in index:
                raise StructureError(f"duplicate node {n.name!r}")
            index[n.name] = i
        if self.start not in index:
            raise StructureError(f"start node {self.start!r} is not a node")
        out = {n.name: [] for n in self.nodes}
        for e in self.edges:
            if e.src not in index:
                raise StructureError(f"edge from unknown node {e.src!r}")
            if e.dst not in index:
                raise StructureError(f"edge to unknown node {e.dst!r}")
            if self.nodes[index[e.src]].terminal:
                raise StructureError(f"terminal node {e.src!r} has an outgoing edge")
            out[e.src].append(e)
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_out", {k: tuple(v) for k, v in out.items()})

    @property
    def size(self) -> int:
        return len(self.nodes)

    def node(self, name) -> PlanNode:
        return self.nodes[self._index[name]]

    def node_index(self, name) -> int:
        return self._index[name]

    def outgoing(self, name) -> tuple:
        return self._out[name]

    def successors(self, name) -> list:
        seen = []
        for e in self._out[name]:
            if e.dst not in seen:
                seen.append(e.dst)
        return seen

    def actions(self) -> set:
        return {n.action for n in self.nodes if not n.terminal}


def totally_ordered_plan(actions: Iterable[str], prefix: str = "v", terminal: str = "T") -> Plan:
    """Chain ``v0 -> v1 -> ... -> T`` executing ``actions`` in order."""
    actions = list(actions)
    names = [f"{prefix}{i}" for i in range(len(actions))]
    if terminal in names:
        raise StructureError(f"terminal name {terminal!r} clashes with a step name")
    nodes = [PlanNode(n, a) for n, a in zip(names, actions)] + [PlanNode(terminal)]
    chain = names + [terminal]
    edges = [Edge(chain[i], chain[i + 1]) for i in range(len(actions))]
    return Plan(tuple(nodes), tuple(edges), chain[0])


def plan_actions_chain(p: Plan) -> list:
    """Action sequence of a totally ordered plan, following ALWAYS-style single edges."""
    seq, name, seen = [], p.start, set()
    while True:
        if name in seen:
            raise StructureError("plan is not a chain")
        seen.add(name)
        node = p.node(name)
        if node.terminal:
            return seq
        seq.append(node.action)
        succ = p.successors(name)
        if len(succ) != 1:
            raise StructureError("plan is not a chain")
        name = succ[0]


def has_cycle(p: Plan) -> bool:
    color = {n.name: 0 for n in p.nodes}
    for root in color:
        if color[root]:
            continue
        stack = [(root, iter(p.successors(root)))]
        color[root] = 1
        while stack:
            name, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[name] = 2
                stack.pop()
            elif color[nxt] == 1:
                return True
            elif color[nxt] == 0:
                color[nxt] = 1
                stack.append((nxt, iter(p.successors(nxt))))
    return False


def classify_plan(p: Plan) -> PlanClass:
    if has_cycle(p):
        return PlanClass.LOOPING
    if all(len(p.outgoing(n.name)) <= 1 for n in p.nodes):
        return PlanClass.TOTALLY_ORDERED
    return PlanClass.ACYCLIC


def _describe_assignment(props, values):
    return "{" + ",".join(p for p, v in zip(props, values) if v) + "}"


def validate_plan(p: Plan, d) -> ValidationReport:
    """Check actions exist and that guards at each node partition the states."""
    out = []
    is_st = isinstance(d, STDomain)
    known_props = set(d.props) if is_st else set()
    known_states = set(d.states) if not is_st else set()
    for n in p.nodes:
        if not n.terminal and n.action not in d.actions:
            out.append(Violation("unknown-action", f"node {n.name}", f"action {n.action!r} not in domain"))
    for n in p.nodes:
        if n.terminal:
            continue
        where = f"node {n.name}"
        edges = p.outgoing(n.name)
        usable = []
        for e in edges:
            g = e.guard
            if g.kind is GuardKind.LITERALS:
                if not is_st:
                    out.append(Violation("guard-kind", where, f"literal guard {g} on a flat domain"))
                    continue
                bad = sorted(g.props() - known_props)
                if bad:
                    out.append(Violation("unknown-proposition", where, f"guard mentions {', '.join(bad)}"))
                    continue
            elif g.kind is GuardKind.STATES:
                if is_st:
                    out.append(Violation("guard-kind", where, f"state-set guard {g} on an ST domain"))
                    continue
                bad = sorted(g.states - known_states)
                if bad:
                    out.append(Violation("unknown-state", where, f"guard mentions {', '.join(bad)}"))
                    continue
            usable.append(e)
        if len(usable) != len(edges):
            continue
        if is_st:
            mentioned = [q for q in d.props if any(q in e.guard.props() for e in edges)]
            if len(mentioned) > MAX_GUARD_PROPS:
                out.append(Violation("guard-cap", where, f"{len(mentioned)} propositions mentioned, cap {MAX_GUARD_PROPS}"))
                continue
            for values in itertools.product((False, True), repeat=len(mentioned)):
                true = {q for q, v in zip(mentioned, values) if v}
                hits = [e for e in edges if guard_matches(e.guard, true)]
                desc = _describe_assignment(mentioned, values)
                if not hits:
                    out.append(Violation("gap", where, f"no guard matches state {desc}"))
                elif len(hits) > 1:
                    out.append(Violation("overlap", where, f"{len(hits)} guards match state {desc}"))
        else:
            for s in d.states:
                hits = [e for e in edges if guard_matches(e.guard, s)]
                if not hits:
                    out.append(Violation("gap", where, f"no guard matches state {s}"))
                elif len(hits) > 1:
                    out.append(Violation("overlap", where, f"{len(hits)} guards match state {s}"))
    return ValidationReport(tuple(out))


# ------------------------------------------------------- partial orders

@dataclass(frozen=True)
class Step:
    id: str
    action: str


@dataclass(frozen=True)
class PartialOrderPlan:
    """Steps plus strict precedence pairs ``(before, after)``."""

    steps: tuple
    order: frozenset = frozenset()
    _preds: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        object.__setattr__(self, "order", frozenset(self.order))
        ids = [s.id for s in self.steps]
        if len(set(ids)) != len(ids):
            raise StructureError("duplicate step id")
        known = set(ids)
        preds = {i: set() for i in ids}
        for a, b in self.order:
            if a not in known or b not in known:
                raise StructureError(f"order {a} < {b} references an unknown step")
            if a == b:
                raise StructureError(f"precedence cycle through {a}")
            preds[b].add(a)
        object.__setattr__(self, "_preds", {k: frozenset(v) for k, v in preds.items()})
        cyc = find_precedence_cycle(ids, self.order)
        if cyc:
            raise StructureError("precedence cycle: " + " < ".join(cyc))

    def step_ids(self) -> list:
        return sorted(s.id for s in self.steps)

    def action_of(self, step_id) -> str:
        for s in self.steps:
            if s.id == step_id:
                return s.action
        raise KeyError(step_id)

    def predecessors(self, step_id) -> frozenset:
        return self._preds[step_id]


def find_precedence_cycle(ids, order):
    """Return one cycle as a list of ids (first repeated at the end), or None."""
    succ = {i: [] for i in ids}
    for a, b in order:
        succ.setdefault(a, []).append(b)
    color = dict.fromkeys(succ, 0)
    for root in sorted(succ):
        if color[root]:
            continue
        path = [root]
        stack = [iter(sorted(succ[root]))]
        color[root] = 1
        while stack:
            nxt = next(stack[-1], None)
            if nxt is None:
                color[path.pop()] = 2
                stack.pop()
            elif color[nxt] == 1:
                return path[path.index(nxt):] + [nxt]
            elif color[nxt] == 0:
                color[nxt] = 1
                path.append(nxt)
                stack.append(iter(sorted(succ[nxt])))
    return None


def chain_partial_order(actions: Iterable[str], prefix: str = "s") -> PartialOrderPlan:
    actions = list(actions)
    width = len(str(max(len(actions) - 1, 0)))
    ids = [f"{prefix}{i:0{width}d}" for i in range(len(actions))]
    steps = tuple(Step(i, a) for i, a in zip(ids, actions))
    return PartialOrderPlan(steps, frozenset(zip(ids, ids[1:])))


class _ExtensionIndex:
    """Bitmask view of a partial order with steps in lexicographic id order."""

    def __init__(self, p: PartialOrderPlan):
        self.ids = p.step_ids()
        pos = {s: k for k, s in enumerate(self.ids)}
        self.need = [0] * len(self.ids)
        for a, b in p.order:
            self.need[pos[b]] |= 1 << pos[a]
        self.full = (1 << len(self.ids)) - 1

    def available(self, placed):
        return [k for k in range(len(self.ids)) if not placed >> k & 1 and (self.need[k] & placed) == self.need[k]]


def count_linear_extensions(p: PartialOrderPlan, cap: int = DEFAULT_EXTENSION_CAP) -> int:
    """Exact number of linear extensions, by memoised DFS over down-sets.

    Raises CapExceeded when the count (or the memo) grows past ``cap``.
    """
    ix = _ExtensionIndex(p)
    memo = {ix.full: 1}

    def count(placed):
        hit = memo.get(placed)
        if hit is not None:
            return hit
        total = 0
        for k in ix.available(placed):
            total += count(placed | 1 << k)
        if len(memo) >= cap:
            raise CapExceeded("linear-extension memo", cap)
        memo[placed] = total
        return total

    n = count(0)
    if n > cap:
        raise CapExceeded(f"{n} linear extensions", cap)
    return n


def linear_extensions(p: PartialOrderPlan, cap: int = DEFAULT_EXTENSION_CAP) -> Iterator[tuple]:
    """Yield every linear extension (a tuple of step ids) in lexicographic order.

    The count is checked against ``cap`` before anything is yielded.
    """
    count_linear_extensions(p, cap)
    ix = _ExtensionIndex(p)
    ids = ix.ids
    order = []

    def rec(placed):
        if placed == ix.full:
            yield tuple(order)
            return
        for k in ix.available(placed):
            order.append(ids[k])
            yield from rec(placed | 1 << k)
            order.pop()

    return rec(0)


def extension_plan(p: PartialOrderPlan, extension) -> Plan:
    """Close a linear extension with a terminal node."""
    return totally_ordered_plan([p.action_of(s) for s in extension])
