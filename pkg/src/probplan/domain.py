"""Flat and sequential-effects-tree (ST) planning domains.

Both domain classes expose the same small integer-state protocol used by
the evaluator and search code:

* ``initial_id()`` - integer id of the initial state
* ``is_goal_id(i)`` - goal membership
* ``successors(i, action)`` - list of ``(j, probability)`` with probability > 0
* ``state_label(i)`` / ``encode_state(x)`` / ``decode_state(i)``

Flat state ids are indices into ``states``.  ST state ids are bitmasks in
which bit ``k`` stands for ``props[k]``; the canonical enumeration order of
ST states is therefore plain integer order.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Union

from .errors import CapExceeded, StructureError, UndefinedNewValue

_ONE = Fraction(1)
_ZERO = Fraction(0)
_SUCC_CACHE_LIMIT = 200_000


# ---------------------------------------------------------------- trees

@dataclass(frozen=True)
class Leaf:
    value: Fraction


@dataclass(frozen=True)
class Branch:
    """Internal test node; ``left`` is taken when the tested proposition holds."""

    prop: str
    new: bool
    left: "Node"
    right: "Node"


Node = Union[Leaf, Branch]


@dataclass(frozen=True)
class DecisionTree:
    label: str
    root: Node

    def iter_nodes(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if isinstance(node, Branch):
                stack.append(node.right)
                stack.append(node.left)

    def leaves(self):
        return [n.value for n in self.iter_nodes() if isinstance(n, Leaf)]

    def tests(self):
        return [(n.prop, n.new) for n in self.iter_nodes() if isinstance(n, Branch)]

    @property
    def size(self):
        return sum(1 for _ in self.iter_nodes())


def leaf(p) -> Leaf:
    return Leaf(Fraction(p))


def branch(prop: str, left, right, new: bool = False) -> Branch:
    """Build a test node, coercing plain numbers to leaves."""
    if not isinstance(left, (Leaf, Branch)):
        left = leaf(left)
    if not isinstance(right, (Leaf, Branch)):
        right = leaf(right)
    return Branch(prop, new, left, right)


def tree_leaf_probability(tree: DecisionTree, state: Iterable[str], partial_new: Mapping[str, bool]) -> Fraction:
    """Leaf value reached in ``tree`` for old state ``state``.

    ``state`` is the set of propositions true before the action;
    ``partial_new`` gives the already-defined new values.
    """
    old = frozenset(state)
    node = tree.root
    while isinstance(node, Branch):
        if node.new:
            if node.prop not in partial_new:
                raise UndefinedNewValue(f"{node.prop}:new is not defined yet in tree for {tree.label}")
            holds = bool(partial_new[node.prop])
        else:
            holds = node.prop in old
        node = node.left if holds else node.right
    return node.value


# ------------------------------------------------------------ reports

@dataclass(frozen=True)
class Violation:
    kind: str
    where: str
    message: str

    def __str__(self):
        return f"[{self.kind}] {self.where}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set:
        return {v.kind for v in self.violations}

    def __iter__(self):
        return iter(self.violations)

    def __len__(self):
        return len(self.violations)

    def __str__(self):
        if self.ok:
            return "valid"
        return "\n".join(str(v) for v in self.violations)


# -------------------------------------------------------------- flat

@dataclass(frozen=True, eq=True)
class FlatDomain:
    """Explicit-state domain.

    ``trans`` maps ``(state, action)`` to a sparse row ``{next_state: p}``.
    Missing rows are a validation error, never an implicit self-loop.
    """

    states: tuple
    initial: str
    actions: tuple
    trans: Mapping
    goals: frozenset
    _index: dict = field(default=None, init=False, repr=False, compare=False)
    _rows: dict = field(default=None, init=False, repr=False, compare=False)
    _goal_ids: frozenset = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "actions", tuple(self.actions))
        object.__setattr__(self, "goals", frozenset(self.goals))
        trans = {
            (s, a): {d: Fraction(p) for d, p in row.items()} for (s, a), row in dict(self.trans).items()
        }
        object.__setattr__(self, "trans", trans)
        if len(set(self.states)) != len(self.states):
            raise StructureError("duplicate state name")
        if len(set(self.actions)) != len(self.actions):
            raise StructureError("duplicate action name")
        index = {s: i for i, s in enumerate(self.states)}
        rows = {}
        for (s, a), row in trans.items():
            if s in index and all(d in index for d in row):
                rows[(index[s], a)] = [(index[d], p) for d, p in sorted(row.items(), key=lambda kv: index[kv[0]]) if p != 0]
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_rows", rows)
        object.__setattr__(self, "_goal_ids", frozenset(index[g] for g in self.goals if g in index))

    @property
    def num_states(self):
        return len(self.states)

    @property
    def size(self):
        """Domain size |M|: number of states plus number of actions."""
        return len(self.states) + len(self.actions)

    def initial_id(self):
        return self._index[self.initial]

    def is_goal_id(self, i):
        return i in self._goal_ids

    def successors(self, i, action):
        try:
            return self._rows[(i, action)]
        except KeyError:
            if action not in self.actions:
                raise KeyError(f"unknown action {action!r}") from None
            raise StructureError(f"missing transition row for ({self.states[i]}, {action})") from None

    def state_label(self, i):
        return self.states[i]

    def encode_state(self, x):
        if isinstance(x, int) and not isinstance(x, bool):
            if not 0 <= x < len(self.states):
                raise KeyError(f"state index {x} out of range")
            return x
        try:
            return self._index[x]
        except KeyError:
            raise KeyError(f"unknown state {x!r}") from None

    def decode_state(self, i):
        return self.states[i]

    def all_state_ids(self):
        return range(len(self.states))

    def row(self, state, action):
        return dict(self.trans.get((state, action), {}))


# ---------------------------------------------------------------- ST

def _compile_node(node, bit_of):
    if isinstance(node, Leaf):
        return node.value
    return (bit_of.get(node.prop, 0), node.new, _compile_node(node.left, bit_of), _compile_node(node.right, bit_of))


def _rho(node, old, new):
    while type(node) is tuple:
        bit, is_new, left, right = node
        node = left if ((new if is_new else old) & bit) else right
    return node


@dataclass(frozen=True, eq=True)
class STDomain:
    """Propositional domain; each action is an ordered sequence of trees."""

    props: tuple
    init: frozenset
    actions: tuple
    trees: Mapping
    goals: frozenset
    _bit: dict = field(default=None, init=False, repr=False, compare=False)
    _compiled: dict = field(default=None, init=False, repr=False, compare=False)
    _goal_mask: int = field(default=0, init=False, repr=False, compare=False)
    _cache: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "props", tuple(self.props))
        object.__setattr__(self, "init", frozenset(self.init))
        object.__setattr__(self, "actions", tuple(self.actions))
        object.__setattr__(self, "goals", frozenset(self.goals))
        object.__setattr__(self, "trees", {a: tuple(ts) for a, ts in dict(self.trees).items()})
        if len(set(self.props)) != len(self.props):
            raise StructureError("duplicate proposition name")
        if len(set(self.actions)) != len(self.actions):
            raise StructureError("duplicate action name")
        bit = {p: 1 << k for k, p in enumerate(self.props)}
        compiled = {
            a: tuple((bit.get(t.label, 0), _compile_node(t.root, bit)) for t in ts)
            for a, ts in self.trees.items()
        }
        object.__setattr__(self, "_bit", bit)
        object.__setattr__(self, "_compiled", compiled)
        object.__setattr__(self, "_goal_mask", sum(bit.get(g, 0) for g in self.goals))
        object.__setattr__(self, "_cache", {})

    @property
    def num_states(self):
        return 1 << len(self.props)

    @property
    def size(self):
        """Domain size |M|: total number of decision-tree nodes."""
        return sum(t.size for ts in self.trees.values() for t in ts)

    def mask(self, props: Iterable[str]) -> int:
        m = 0
        for p in props:
            try:
                m |= self._bit[p]
            except KeyError:
                raise KeyError(f"unknown proposition {p!r}") from None
        return m

    def initial_id(self):
        return self.mask(self.init)

    def is_goal_id(self, i):
        return (i & self._goal_mask) == self._goal_mask

    def _compiled_for(self, action):
        try:
            return self._compiled[action]
        except KeyError:
            raise KeyError(f"unknown action {action!r}") from None

    def successors(self, i, action):
        key = (i, action)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        compiled = self._compiled_for(action)
        out = {}
        last = len(compiled)

        def rec(k, new, p):
            while k < last:
                bit, root = compiled[k]
                rho = _rho(root, i, new)
                k += 1
                if rho == 1:
                    new |= bit
                elif rho != 0:
                    rec(k, new | bit, p * rho)
                    p = p * (1 - rho)
            out[new] = out.get(new, _ZERO) + p

        rec(0, 0, _ONE)
        result = sorted(out.items())
        if len(self._cache) < _SUCC_CACHE_LIMIT:
            self._cache[key] = result
        return result

    def transition_probability_ids(self, i, action, j):
        """Eq. (1): product over trees of rho or 1 - rho, evaluated directly."""
        result = _ONE
        for bit, root in self._compiled_for(action):
            rho = _rho(root, i, j)
            result *= rho if j & bit else (1 - rho)
            if result == 0:
                return _ZERO
        return result

    def state_label(self, i):
        return "{" + ",".join(p for p in self.props if i & self._bit[p]) + "}"

    def encode_state(self, x):
        if isinstance(x, int) and not isinstance(x, bool):
            if not 0 <= x < self.num_states:
                raise KeyError(f"state mask {x} out of range")
            return x
        if isinstance(x, str):
            x = [x]
        return self.mask(x)

    def decode_state(self, i):
        return frozenset(p for p in self.props if i & self._bit[p])

    def all_state_ids(self):
        return range(self.num_states)


Domain = Union[FlatDomain, STDomain]


# -------------------------------------------------------- validation

def _validate_flat(d: FlatDomain):
    out = []
    known = set(d.states)
    if d.initial not in known:
        out.append(Violation("unknown-state", "init", f"initial state {d.initial!r} not declared"))
    for g in sorted(d.goals - known):
        out.append(Violation("unknown-state", "goal", f"goal state {g!r} not declared"))
    for (s, a), row in d.trans.items():
        if s not in known:
            out.append(Violation("unknown-state", f"action {a}", f"source state {s!r} not declared"))
        if a not in d.actions:
            out.append(Violation("unknown-action", f"row {s}", f"action {a!r} not declared"))
        for dst in row:
            if dst not in known:
                out.append(Violation("unknown-state", f"row ({s}, {a})", f"target state {dst!r} not declared"))
    for a in d.actions:
        for s in d.states:
            row = d.trans.get((s, a))
            where = f"row ({s}, {a})"
            if row is None:
                out.append(Violation("missing-row", where, "no transition row"))
                continue
            for dst, p in row.items():
                if not 0 <= p <= 1:
                    out.append(Violation("probability-range", where, f"entry for {dst} is {p}, outside [0,1]"))
            total = sum(row.values(), _ZERO)
            if total != 1:
                out.append(Violation("row-sum", where, f"row sum {total} != 1"))
    return out


def _validate_st(d: STDomain):
    out = []
    known = set(d.props)
    for p in sorted(d.init - known):
        out.append(Violation("unknown-proposition", "init", f"{p!r} not declared"))
    for p in sorted(d.goals - known):
        out.append(Violation("unknown-proposition", "goal", f"{p!r} not declared"))
    for a in d.actions:
        if a not in d.trees:
            out.append(Violation("missing-tree", f"action {a}", "action has no trees"))
    for a, ts in d.trees.items():
        if a not in d.actions:
            out.append(Violation("unknown-action", f"action {a}", "trees given for undeclared action"))
        labels = [t.label for t in ts]
        for p in d.props:
            c = labels.count(p)
            if c == 0:
                out.append(Violation("missing-tree", f"action {a}", f"no tree for proposition {p}"))
            elif c > 1:
                out.append(Violation("duplicate-tree", f"action {a}", f"{c} trees for proposition {p}"))
        defined = set()
        for i, t in enumerate(ts):
            where = f"action {a}, tree {i + 1} ({t.label})"
            if t.label not in known:
                out.append(Violation("unknown-proposition", where, f"label {t.label!r} not declared"))
            for prop, new in t.tests():
                if prop not in known:
                    out.append(Violation("unknown-proposition", where, f"test on undeclared {prop!r}"))
                elif new and prop not in defined:
                    out.append(Violation("new-before-definition", where, f"{prop}:new used before its tree"))
            for v in t.leaves():
                if not 0 <= v <= 1:
                    out.append(Violation("probability-range", where, f"leaf {v} outside [0,1]"))
            defined.add(t.label)
    return out


def validate_domain(d: Domain) -> ValidationReport:
    """Report every violated domain invariant; an empty report means valid."""
    if isinstance(d, FlatDomain):
        return ValidationReport(tuple(_validate_flat(d)))
    return ValidationReport(tuple(_validate_st(d)))


# ---------------------------------------------------------- operations

def transition_probability(d: Domain, s, action, s2) -> Fraction:
    """t(s, a, s2): a table lookup for flat domains, Eq. (1) for ST."""
    if action not in d.actions:
        raise KeyError(f"unknown action {action!r}")
    i, j = d.encode_state(s), d.encode_state(s2)
    if isinstance(d, FlatDomain):
        for k, p in d.successors(i, action):
            if k == j:
                return p
        return _ZERO
    return d.transition_probability_ids(i, action, j)


def sample_next_state_id(d: Domain, i: int, action, rng: random.Random) -> int:
    if isinstance(d, FlatDomain):
        u = Fraction(rng.random())
        acc = _ZERO
        row = d.successors(i, action)
        for j, p in row:
            acc += p
            if u < acc:
                return j
        return row[-1][0]
    new = 0
    for bit, root in d._compiled_for(action):
        rho = _rho(root, i, new)
        if rho == 1 or (rho != 0 and Fraction(rng.random()) < rho):
            new |= bit
    return new


def sample_next_state(d: Domain, s, action, rng: random.Random):
    """Draw a successor of ``s``; consumes draws only from ``rng``.

    ST successors are built one proposition at a time in tree order.
    Deterministic leaves (0 or 1) consume no random draws.
    """
    if action not in d.actions:
        raise KeyError(f"unknown action {action!r}")
    return d.decode_state(sample_next_state_id(d, d.encode_state(s), action, rng))


def flat_state_name(d: STDomain, mask: int) -> str:
    return "s" + "".join("1" if mask >> k & 1 else "0" for k in range(len(d.props)))


def expand_to_flat(d: STDomain, limit: int = 20) -> FlatDomain:
    """Enumerate all 2^|P| states of an ST domain into a FlatDomain.

    State names are ``s`` followed by one bit per proposition in
    declaration order (so ``s10`` has only the first proposition true).
    """
    n = len(d.props)
    if n > limit:
        raise CapExceeded(f"{n} propositions for flat expansion", limit)
    names = [flat_state_name(d, m) for m in range(1 << n)]
    trans = {}
    for m in range(1 << n):
        for a in d.actions:
            trans[(names[m], a)] = {names[j]: p for j, p in d.successors(m, a)}
    goals = frozenset(names[m] for m in range(1 << n) if d.is_goal_id(m))
    return FlatDomain(tuple(names), names[d.initial_id()], d.actions, trans, goals)
