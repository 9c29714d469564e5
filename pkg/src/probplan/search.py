"""Size-bounded plan existence and optimal stationary policies."""

from __future__ import annotations

import enum
import itertools
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Optional

from .domain import FlatDomain, STDomain
from .errors import CapExceeded
from .evaluator import Interpretation, absorption_probabilities, evaluate_plan
from .plan import ALWAYS, Edge, Guard, GuardKind, Plan, PlanClass, PlanNode, has_cycle, totally_ordered_plan

DEFAULT_CANDIDATE_CAP = 10**7
DEFAULT_MAX_SPLIT = 2
HALT = "halt"
_ZERO = Fraction(0)
_ONE = Fraction(1)


@dataclass(frozen=True)
class DecisionInstance:
    """Plan-existence question: is there a plan of size ``z`` with value > theta?

    Setting ``interpretation`` asks about partially ordered plans; those are
    answered through the totally ordered search.
    """

    domain: object
    theta: Fraction
    plan_class: PlanClass = PlanClass.TOTALLY_ORDERED
    z: int = 1
    interpretation: Optional[Interpretation] = None

    def __post_init__(self):
        object.__setattr__(self, "theta", Fraction(self.theta))
        if not 0 <= self.theta <= 1:
            raise ValueError("threshold must lie in [0, 1]")
        if self.z < 1:
            raise ValueError("size bound z must be at least 1")


@dataclass(frozen=True)
class SearchOutcome:
    """``decision`` is None when a resource cap stopped the search."""

    decision: Optional[bool]
    witness: Optional[Plan] = None
    value: Optional[Fraction] = None
    candidates: int = 0
    note: str = ""

    @property
    def indeterminate(self) -> bool:
        return self.decision is None


# ------------------------------------------------- admissible estimates

class _LiveMass:
    """Upper bound on the goal mass still reachable from a state in r steps."""

    def __init__(self, d):
        self.d = d
        if isinstance(d, FlatDomain):
            self.dist = self._flat_distances(d)
        else:
            self.dist = None
            self.dead_cache = {}

    @staticmethod
    def _flat_distances(d):
        pred = [set() for _ in d.all_state_ids()]
        for i in d.all_state_ids():
            for a in d.actions:
                for j, _ in d.successors(i, a):
                    pred[j].add(i)
        dist = {}
        queue = deque()
        for i in d.all_state_ids():
            if d.is_goal_id(i):
                dist[i] = 0
                queue.append(i)
        while queue:
            j = queue.popleft()
            for i in pred[j]:
                if i not in dist:
                    dist[i] = dist[j] + 1
                    queue.append(i)
        return dist

    def live(self, s, r) -> bool:
        if self.dist is not None:
            k = self.dist.get(s)
            return k is not None and k <= r
        hit = self.dead_cache.get(s)
        if hit is None:
            hit = st_state_is_dead(self.d, s)
            if len(self.dead_cache) < 200_000:
                self.dead_cache[s] = hit
        return not hit


def _possible_leaves(node, fixed_old, fixed_new):
    """Leaf values reachable when only some propositions are known."""
    out = set()
    stack = [node]
    while stack:
        node = stack.pop()
        if type(node) is not tuple:
            out.add(node)
            continue
        bit, is_new, left, right = node
        known = fixed_new if is_new else fixed_old
        if bit in known:
            stack.append(left if known[bit] else right)
        else:
            stack.append(left)
            stack.append(right)
    return out


def st_state_is_dead(d: STDomain, s: int) -> bool:
    """True if some goal proposition is false in ``s`` and can never change.

    Computes the largest set of literals of ``s`` that every action keeps
    fixed, assuming the set holds.  A false goal literal in that set means
    the goal is unreachable from ``s``.
    """
    bits = [1 << k for k in range(len(d.props))]
    stable = {b: bool(s & b) for b in bits}
    changed = True
    while changed:
        changed = False
        for b in list(stable):
            target = 1 if stable[b] else 0
            for a in d.actions:
                for label_bit, root in d._compiled_for(a):
                    if label_bit != b:
                        continue
                    if _possible_leaves(root, stable, stable) != {target}:
                        del stable[b]
                        changed = True
                        break
                if b not in stable:
                    break
    goal_mask = d._goal_mask
    return any(b & goal_mask and not v for b, v in stable.items())


# ------------------------------------------------ totally ordered search

def _step(d, dist, action):
    out, gained = {}, _ZERO
    for s, mass in dist:
        for s2, prob in d.successors(s, action):
            if d.is_goal_id(s2):
                gained += mass * prob
            else:
                out[s2] = out.get(s2, _ZERO) + mass * prob
    return tuple(sorted(out.items())), gained


def _search_totally_ordered(d, theta, z, prune, cap):
    live = _LiveMass(d) if prune else None
    fail_memo = {}
    counters = {"leaves": 0, "nodes": 0}
    seq = []

    def rec(dist, need, r):
        # need: additional goal mass must exceed this to succeed
        if r == 0 or not dist:
            counters["leaves"] += 1
            return need < 0
        counters["nodes"] += 1
        if counters["nodes"] > cap:
            raise CapExceeded("search nodes", cap)
        if prune:
            if need < 0:
                seq.extend([d.actions[0]] * r)
                return True
            else:
                key = (dist, r)
                known = fail_memo.get(key)
                if known is not None and need >= known:
                    return False
                bound = sum((m for s, m in dist if live.live(s, r)), _ZERO)
                if bound <= need:
                    fail_memo[key] = need if known is None else min(known, need)
                    return False
        for a in d.actions:
            nd, gained = _step(d, dist, a)
            seq.append(a)
            if rec(nd, need - gained, r - 1):
                return True
            seq.pop()
        if prune and need >= 0:
            key = (dist, r)
            known = fail_memo.get(key)
            if len(fail_memo) < 2_000_000:
                fail_memo[key] = need if known is None else min(known, need)
        return False

    s0 = d.initial_id()
    if d.is_goal_id(s0):
        dist, base = (), _ONE
    else:
        dist, base = ((s0, _ONE),), _ZERO
    found = rec(dist, theta - base, z)
    if found:
        while len(seq) < z:
            seq.append(d.actions[0])
    return found, list(seq), counters


def plan_exists(inst: DecisionInstance, prune: bool = True, cap: int = DEFAULT_CANDIDATE_CAP,
                max_split: int = DEFAULT_MAX_SPLIT) -> SearchOutcome:
    """Decide whether some plan of the requested class and size beats theta.

    Totally ordered (and partially ordered) questions use a depth-first
    search over exactly ``z`` actions; since goal states are absorbing,
    shorter plans never do better than their padded extensions.  Acyclic
    and looping questions walk :func:`enumerate_candidate_plans`.
    """
    d, theta = inst.domain, inst.theta
    note = ""
    if inst.interpretation is not None:
        note = "partially ordered question answered by totally ordered search"
    if inst.interpretation is not None or inst.plan_class is PlanClass.TOTALLY_ORDERED:
        try:
            found, seq, counters = _search_totally_ordered(d, theta, inst.z, prune, cap)
        except CapExceeded as exc:
            return SearchOutcome(None, note=str(exc))
        if not found:
            return SearchOutcome(False, candidates=counters["leaves"], note=note)
        witness = totally_ordered_plan(seq)
        value = evaluate_plan(d, witness).exact
        return SearchOutcome(True, witness, value, counters["leaves"], note)
    examined = 0
    try:
        for cand in enumerate_candidate_plans(d, inst.plan_class, inst.z, max_split=max_split, cap=cap):
            examined += 1
            v = evaluate_plan(d, cand).exact
            if v > theta:
                return SearchOutcome(True, cand, v, examined)
    except CapExceeded as exc:
        return SearchOutcome(None, candidates=examined, note=str(exc))
    return SearchOutcome(False, candidates=examined)


# ------------------------------------------------ candidate enumeration

def _flat_routing_shapes(d: FlatDomain):
    """One position per state, in state order."""
    return [(None, len(d.states))]


def _st_routing_shapes(d: STDomain, max_split):
    shapes = []
    for j in range(0, min(max_split, len(d.props)) + 1):
        for combo in itertools.combinations(d.props, j):
            shapes.append((combo, 1 << j))
    return shapes


def _depends_on_all(dsts, j):
    for t in range(j):
        if all(dsts[a] == dsts[a ^ (1 << t)] for a in range(len(dsts))):
            return False
    return True


def _edges_for(d, src, shape, dsts, names):
    combo, _ = shape
    if combo is None:
        groups = {}
        for s, dst in zip(d.states, dsts):
            groups.setdefault(dst, []).append(s)
        return [Edge(src, names(dst), Guard.state_set(ss)) for dst, ss in groups.items()]
    if not combo:
        return [Edge(src, names(dsts[0]), ALWAYS)]
    edges = []
    for a, dst in enumerate(dsts):
        lits = tuple((p, bool(a >> t & 1)) for t, p in enumerate(combo))
        edges.append(Edge(src, names(dst), Guard(GuardKind.LITERALS, literals=lits)))
    return edges


def enumerate_candidate_plans(d, plan_class: PlanClass, z: int, max_split: int = DEFAULT_MAX_SPLIT,
                              cap: int = DEFAULT_CANDIDATE_CAP) -> Iterator[Plan]:
    """Yield canonical candidate plans of the class.

    Totally ordered candidates are the ``|A|^z`` chains of exactly ``z``
    steps, in action-declaration order.  Acyclic and looping candidates
    have ``k = 1..z`` non-terminal nodes ``v0..v{k-1}`` numbered in the
    order the routing first mentions them, plus a shared terminal node
    ``halt`` when it is referenced.  Looping includes acyclic plans.
    """
    if z < 1:
        raise ValueError("z must be at least 1")
    plan_class = PlanClass(plan_class)
    if plan_class is PlanClass.TOTALLY_ORDERED:
        if len(d.actions) ** z > cap:
            raise CapExceeded(f"{len(d.actions)}^{z} totally ordered candidates", cap)
        for seq in itertools.product(d.actions, repeat=z):
            yield totally_ordered_plan(seq)
        return
    shapes = _flat_routing_shapes(d) if isinstance(d, FlatDomain) else _st_routing_shapes(d, max_split)
    budget = [0]

    def tick():
        budget[0] += 1
        if budget[0] > cap:
            raise CapExceeded("candidate combinations", cap)

    for k in range(1, z + 1):

        def names(dst, k=k):
            return HALT if dst == k else f"v{dst}"

        def routings(shape, next_new, k=k):
            combo, width = shape
            dsts = []

            def rec(pos, nn):
                if pos == width:
                    if combo is not None and len(combo) > 0 and not _depends_on_all(dsts, len(combo)):
                        return
                    yield tuple(dsts), nn
                    return
                options = list(range(nn))
                if nn < k:
                    options.append(nn)
                options.append(k)
                for o in options:
                    dsts.append(o)
                    yield from rec(pos + 1, nn + 1 if o == nn and nn < k else nn)
                    dsts.pop()

            return rec(0, next_new)

        def build(i, next_new, chosen):
            if i == k:
                if next_new != k:
                    return
                tick()
                nodes = [PlanNode(f"v{j}", chosen[j][0]) for j in range(k)]
                edges = []
                for j in range(k):
                    _, shape, dsts = chosen[j]
                    edges.extend(_edges_for(d, f"v{j}", shape, dsts, names))
                if any(e.dst == HALT for e in edges):
                    nodes.append(PlanNode(HALT))
                p = Plan(tuple(nodes), tuple(edges), "v0")
                if plan_class is PlanClass.ACYCLIC and has_cycle(p):
                    return
                yield p
                return
            if i >= next_new:
                return
            for a in d.actions:
                for shape in shapes:
                    for dsts, nn in routings(shape, next_new):
                        tick()
                        chosen.append((a, shape, dsts))
                        yield from build(i + 1, nn, chosen)
                        chosen.pop()

        yield from build(0, 1, [])


# ---------------------------------------------------- stationary policies

class Encoding(enum.Enum):
    BY_ACTION = "by-action"
    BY_STATE = "by-state"


@dataclass(frozen=True)
class StationaryPolicy:
    mapping: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "mapping", dict(self.mapping))

    def __getitem__(self, state):
        return self.mapping[state]

    def items(self):
        return self.mapping.items()


def _policy_rows(d: FlatDomain, choice):
    rows = []
    goal = set()
    for i in d.all_state_ids():
        if d.is_goal_id(i):
            goal.add(i)
            rows.append([(i, _ONE)])
        else:
            rows.append(list(d.successors(i, choice[i])))
    return rows, goal


def policy_state_values(d: FlatDomain, pol: StationaryPolicy) -> dict:
    """Goal-reachability probability of every state under ``pol``."""
    choice = [pol[s] for s in d.states]
    rows, goal = _policy_rows(d, choice)
    vals = absorption_probabilities(rows, goal)
    return {s: vals[i] for i, s in enumerate(d.states)}


def evaluate_policy(d: FlatDomain, pol: StationaryPolicy) -> Fraction:
    return policy_state_values(d, pol)[d.initial]


def optimal_stationary_policy(d: FlatDomain, max_rounds: int = 10_000):
    """Exact policy iteration for maximum goal reachability.

    Evaluation sets states that cannot reach the goal under the current
    policy to 0 before solving, which picks the least fixed point.  A
    state switches action only on a strict gain; among improving actions
    the first in declaration order wins.
    """
    n = d.num_states
    choice = [d.actions[0]] * n
    for _ in range(max_rounds):
        rows, goal = _policy_rows(d, choice)
        vals = absorption_probabilities(rows, goal)
        changed = False
        for i in range(n):
            if i in goal:
                continue
            best_q = vals[i]
            best_a = choice[i]
            for a in d.actions:
                q = sum((p * vals[j] for j, p in d.successors(i, a)), _ZERO)
                if q > best_q:
                    best_q, best_a = q, a
            if best_a != choice[i]:
                choice[i] = best_a
                changed = True
        if not changed:
            pol = StationaryPolicy({s: choice[i] for i, s in enumerate(d.states)})
            return pol, vals[d.initial_id()]
    raise RuntimeError("policy iteration did not converge")


def policy_to_looping_plan(pol: StationaryPolicy, d: FlatDomain, variant: Encoding = Encoding.BY_ACTION) -> Plan:
    variant = Encoding(variant)
    if variant is Encoding.BY_ACTION:
        used = [a for a in d.actions if any(pol[s] == a for s in d.states)]
        nodes = tuple(PlanNode(a, a) for a in used)
        edges = []
        for v in used:
            for w in used:
                edges.append(Edge(v, w, Guard.state_set(s for s in d.states if pol[s] == w)))
        return Plan(nodes, tuple(edges), pol[d.initial])
    name = {s: f"at_{s}" for s in d.states}
    nodes = tuple(PlanNode(name[s], pol[s]) for s in d.states)
    edges = tuple(Edge(name[s], name[t], Guard.state_set([t])) for s in d.states for t in d.states)
    return Plan(nodes, edges, name[d.initial])


def all_stationary_policies(d: FlatDomain) -> Iterator[StationaryPolicy]:
    for combo in itertools.product(d.actions, repeat=d.num_states):
        yield StationaryPolicy(dict(zip(d.states, combo)))
