"""Slow, independent reference computations used as test oracles.

Nothing here calls the library's evaluators or solvers; only the plain
data classes are read.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from probplan.domain import Branch, FlatDomain
from probplan.plan import GuardKind


def _walk(node, old, new):
    while isinstance(node, Branch):
        holds = (node.prop in new) if node.new else (node.prop in old)
        node = node.left if holds else node.right
    return node.value


def eq1_probability(d, old, action, nxt) -> Fraction:
    """Product over the action's trees of the leaf chance of each new value."""
    old, nxt = frozenset(old), frozenset(nxt)
    prob = Fraction(1)
    for t in d.trees[action]:
        rho = _walk(t.root, old, nxt)
        prob *= rho if t.label in nxt else 1 - rho
    return prob


def all_prop_states(d):
    for bits in itertools.product((False, True), repeat=len(d.props)):
        yield frozenset(p for p, b in zip(d.props, bits) if b)


def successor_table(d, state, action):
    """List of ``(next_state, probability)`` with nonzero probability."""
    if isinstance(d, FlatDomain):
        return [(s, p) for s, p in d.trans[(state, action)].items() if p]
    out = []
    for s2 in all_prop_states(d):
        p = eq1_probability(d, state, action, s2)
        if p:
            out.append((s2, p))
    return out


def is_goal(d, state):
    if isinstance(d, FlatDomain):
        return state in d.goals
    return d.goals <= state


def initial_state(d):
    return d.initial if isinstance(d, FlatDomain) else frozenset(d.init)


def guard_holds(g, state):
    if g.kind is GuardKind.ALWAYS:
        return True
    if g.kind is GuardKind.STATES:
        return state in g.states
    return all((p in state) == pos for p, pos in g.literals)


def route(plan, node, state):
    hits = [e.dst for e in plan.edges if e.src == node and guard_holds(e.guard, state)]
    assert len(hits) == 1, f"guards at {node} do not partition: {hits}"
    return hits[0]


def acyclic_value(d, plan) -> Fraction:
    """Goal probability by recursive expansion of an acyclic plan."""
    actions = {n.name: n.action for n in plan.nodes}

    def go(state, node):
        if is_goal(d, state):
            return Fraction(1)
        a = actions[node]
        if a is None:
            return Fraction(0)
        return sum((p * go(s2, route(plan, node, s2)) for s2, p in successor_table(d, state, a)), Fraction(0))

    return go(initial_state(d), plan.start)


def gauss_jordan(matrix, rhs):
    """Solve a nonsingular square system over the rationals."""
    n = len(matrix)
    a = [[Fraction(x) for x in row] + [Fraction(b)] for row, b in zip(matrix, rhs)]
    for col in range(n):
        piv = next(r for r in range(col, n) if a[r][col] != 0)
        a[col], a[piv] = a[piv], a[col]
        inv = 1 / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [a[r][n] for r in range(n)]


def reach_probabilities(states, succ, goal):
    """Least solution of x = P x with x = 1 on ``goal``; ``succ`` maps a state to ``[(t, p)]``."""
    states = list(states)
    can = set(goal)
    changed = True
    while changed:
        changed = False
        for s in states:
            if s not in can and any(t in can for t, _ in succ(s)):
                can.add(s)
                changed = True
    var = [s for s in states if s in can and s not in goal]
    pos = {s: i for i, s in enumerate(var)}
    mat = [[Fraction(int(i == j)) for j in range(len(var))] for i in range(len(var))]
    rhs = [Fraction(0)] * len(var)
    for s in var:
        for t, p in succ(s):
            if t in goal:
                rhs[pos[s]] += p
            elif t in pos:
                mat[pos[s]][pos[t]] -= p
    sol = gauss_jordan(mat, rhs) if var else []
    out = {s: Fraction(0) for s in states}
    for s in goal:
        out[s] = Fraction(1)
    for s, i in pos.items():
        out[s] = sol[i]
    return out


def policy_value(d: FlatDomain, mapping) -> Fraction:
    def succ(s):
        if s in d.goals:
            return [(s, Fraction(1))]
        return list(d.trans[(s, mapping[s])].items())

    return reach_probabilities(d.states, succ, set(d.goals))[d.initial]


def looping_value(d, plan) -> Fraction:
    """Goal probability of any plan over the explicitly enumerated product chain."""
    actions = {n.name: n.action for n in plan.nodes}
    start = (initial_state(d), plan.start)
    seen = {start}
    frontier = [start]
    edges = {}
    while frontier:
        s, v = frontier.pop()
        if is_goal(d, s) or actions[v] is None:
            edges[(s, v)] = [((s, v), Fraction(1))]
            continue
        row = {}
        for s2, p in successor_table(d, s, actions[v]):
            key = (s2, route(plan, v, s2))
            row[key] = row.get(key, Fraction(0)) + p
            if key not in seen:
                seen.add(key)
                frontier.append(key)
        edges[(s, v)] = list(row.items())
    goal = {k for k in seen if is_goal(d, k[0])}
    return reach_probabilities(seen, edges.__getitem__, goal)[start]
