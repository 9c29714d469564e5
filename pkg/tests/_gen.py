"""Seeded random instance generators shared by the test modules."""

from __future__ import annotations

import random
from fractions import Fraction

from probplan.counting import CnfFormula
from probplan.domain import DecisionTree, FlatDomain, STDomain, branch, leaf
from probplan.plan import ALWAYS, Edge, Guard, Plan, PlanNode
from probplan.reductions.circuit import CircuitNetlist, Gate
from probplan.reductions.discount import RewardMDP

LEAVES = (Fraction(0), Fraction(1), Fraction(1, 2), Fraction(1, 3), Fraction(2, 3), Fraction(1, 4), Fraction(3, 4))


def random_cnf(rng: random.Random, n_max: int, m_max: int = 6, width: int = 3) -> CnfFormula:
    n = rng.randint(1, n_max)
    m = rng.randint(1, m_max)
    clauses = []
    for _ in range(m):
        w = rng.randint(1, min(width, n))
        vs = rng.sample(range(1, n + 1), w)
        clauses.append(tuple(v if rng.random() < 0.5 else -v for v in vs))
    return CnfFormula(n, tuple(clauses))


def random_distribution(rng, support, max_weight=4):
    weights = [rng.randint(1, max_weight) for _ in support]
    total = sum(weights)
    return {s: Fraction(w, total) for s, w in zip(support, weights)}


def random_flat_domain(rng, n_states=None, n_actions=None, max_support=3) -> FlatDomain:
    ns = n_states or rng.randint(2, 5)
    na = n_actions or rng.randint(1, 3)
    states = tuple(f"q{i}" for i in range(ns))
    actions = tuple(f"a{j}" for j in range(na))
    trans = {}
    for s in states:
        for a in actions:
            support = rng.sample(states, rng.randint(1, min(max_support, ns)))
            trans[(s, a)] = random_distribution(rng, support)
    if ns == 1:
        goals = frozenset(states)
    else:
        goals = frozenset(rng.sample(states[1:], rng.randint(1, max(1, ns // 2))))
    return FlatDomain(states, states[0], actions, trans, goals)


def _random_node(rng, olds, news, depth):
    if depth == 0 or rng.random() < 0.35:
        return leaf(rng.choice(LEAVES))
    choices = [(p, False) for p in olds] + [(p, True) for p in news]
    p, new = rng.choice(choices)
    return branch(p, _random_node(rng, olds, news, depth - 1), _random_node(rng, olds, news, depth - 1), new=new)


def random_st_domain(rng, n_props=None, n_actions=None, depth=2) -> STDomain:
    n = n_props or rng.randint(1, 4)
    props = tuple(f"p{i}" for i in range(n))
    actions = tuple(f"act{j}" for j in range(n_actions or rng.randint(1, 2)))
    trees = {}
    for a in actions:
        order = list(props)
        rng.shuffle(order)
        ts = []
        for i, p in enumerate(order):
            ts.append(DecisionTree(p, _random_node(rng, props, order[:i], depth)))
        trees[a] = ts
    init = frozenset(p for p in props if rng.random() < 0.3)
    goals = frozenset(rng.sample(props, rng.randint(1, min(2, n))))
    return STDomain(props, init, actions, trees, goals)


def _guard_split(rng, d, n_children):
    """Partition of the state space into at most ``n_children`` guards."""
    if n_children == 1:
        return [ALWAYS]
    if isinstance(d, FlatDomain):
        states = list(d.states)
        rng.shuffle(states)
        cut = rng.randint(1, len(states) - 1)
        return [Guard.state_set(states[:cut]), Guard.state_set(states[cut:])]
    p = rng.choice(d.props)
    return [Guard.conj(p), Guard.conj("!" + p)]


def random_acyclic_plan(rng, d, max_nodes=4) -> Plan:
    k = rng.randint(1, max_nodes)
    names = [f"v{i}" for i in range(k)] + ["T"]
    nodes = [PlanNode(f"v{i}", rng.choice(d.actions)) for i in range(k)] + [PlanNode("T")]
    edges = []
    for i in range(k):
        for g in _guard_split(rng, d, rng.choice((1, 2))):
            edges.append(Edge(f"v{i}", rng.choice(names[i + 1:]), g))
    return Plan(tuple(nodes), tuple(edges), "v0")


def random_looping_plan(rng, d, max_nodes=3) -> Plan:
    k = rng.randint(1, max_nodes)
    names = [f"v{i}" for i in range(k)] + ["T"]
    nodes = [PlanNode(f"v{i}", rng.choice(d.actions)) for i in range(k)] + [PlanNode("T")]
    edges = []
    for i in range(k):
        for g in _guard_split(rng, d, rng.choice((1, 2))):
            edges.append(Edge(f"v{i}", rng.choice(names), g))
    return Plan(tuple(nodes), tuple(edges), "v0")


def random_circuit(rng, max_inputs=10, max_gates=50) -> CircuitNetlist:
    ni = rng.randint(1, max_inputs)
    inputs = tuple(f"i{k}" for k in range(ni))
    defined = list(inputs)
    gates = []
    for g in range(rng.randint(1, max_gates)):
        op = rng.choice(("NOT", "AND", "OR"))
        args = (rng.choice(defined),) if op == "NOT" else tuple(rng.choice(defined) for _ in range(2))
        gates.append(Gate(f"g{g}", op, args))
        defined.append(f"g{g}")
    outputs = tuple(sorted(set(rng.sample(defined[ni:], rng.randint(1, min(3, len(gates)))))))
    return CircuitNetlist(inputs, tuple(gates), outputs)


def random_reward_mdp(rng, max_states=4, max_actions=2, discounts=(Fraction(1, 4), Fraction(1, 2), Fraction(3, 4))) -> RewardMDP:
    sk = random_flat_domain(rng, rng.randint(1, max_states), rng.randint(1, max_actions))
    sk = FlatDomain(sk.states, sk.initial, sk.actions, sk.trans, frozenset())
    reward = {}
    for s in sk.states:
        for a in sk.actions:
            if rng.random() < 0.8:
                reward[(s, a)] = Fraction(rng.randint(-4, 6), rng.choice((1, 2, 3)))
    return RewardMDP(sk, reward, rng.choice(discounts))
