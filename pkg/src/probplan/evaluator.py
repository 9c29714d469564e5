"""Exact plan evaluation.

Everything goes through the product chain over (domain state, plan node)
pairs reachable from the start.  Goal states are absorbing, so a plan's
value is the probability of first reaching the goal set.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .domain import sample_next_state_id
from .errors import CapExceeded, StructureError
from .linalg import backward_reachable, solve_fixed_point
from .plan import (
    DEFAULT_EXTENSION_CAP,
    PartialOrderPlan,
    Plan,
    PlanClass,
    classify_plan,
    compile_guard,
    extension_plan,
    linear_extensions,
)
from .rational import format_decimal, format_rational

DEFAULT_STATE_CAP = 10**6
DEFAULT_TRAJECTORY_CAP = 10**6
_ZERO = Fraction(0)
_ONE = Fraction(1)


@dataclass(frozen=True)
class PlanValue:
    exact: Fraction
    witness: Optional[tuple] = None
    precision: int = 6

    def decimal(self, precision: Optional[int] = None) -> str:
        return format_decimal(self.exact, self.precision if precision is None else precision)

    def render(self, precision: Optional[int] = None) -> str:
        return f"{format_rational(self.exact)} (= {self.decimal(precision)})"

    def __str__(self):
        return self.render()


def decide_threshold(v, theta) -> bool:
    """Strict comparison ``v > theta`` on exact rationals."""
    value = v.exact if isinstance(v, PlanValue) else Fraction(v)
    return value > Fraction(theta)


# -------------------------------------------------------- product chain

class _Router:
    """Per-node edge predicates compiled against one domain."""

    def __init__(self, d, p: Plan):
        self.names = [n.name for n in p.nodes]
        self.actions = [n.action for n in p.nodes]
        self.routes = []
        for n in p.nodes:
            self.routes.append([(compile_guard(e.guard, d), p.node_index(e.dst)) for e in p.outgoing(n.name)])

    def route(self, v, s):
        for match, dst in self.routes[v]:
            if match(s):
                return dst
        raise StructureError(f"no guard at node {self.names[v]} matches next state")


@dataclass
class ProductChain:
    """Reachable part of S x V.

    ``states[k]`` is a ``(state_id, node_index)`` pair, ``trans[k]`` a list
    of ``(k2, p)``.  Goal and terminal states carry a single self-loop.
    """

    states: list
    trans: list
    goal: set
    terminal: set
    node_names: list = field(default_factory=list)
    initial: int = 0

    def __len__(self):
        return len(self.states)

    def index(self, pair) -> int:
        return self.states.index(pair)

    def entry(self, a, b) -> Fraction:
        i, j = self.index(a), self.index(b)
        return sum((p for k, p in self.trans[i] if k == j), _ZERO)


def cross_product_chain(d, p: Plan, cap: int = DEFAULT_STATE_CAP) -> ProductChain:
    router = _Router(d, p)
    start = (d.initial_id(), p.node_index(p.start))
    index = {start: 0}
    states, trans = [start], []
    goal, terminal = set(), set()
    k = 0
    while k < len(states):
        s, v = states[k]
        if d.is_goal_id(s):
            goal.add(k)
            trans.append([(k, _ONE)])
        elif router.actions[v] is None:
            terminal.add(k)
            trans.append([(k, _ONE)])
        else:
            row = {}
            for s2, prob in d.successors(s, router.actions[v]):
                pair = (s2, router.route(v, s2))
                j = index.get(pair)
                if j is None:
                    if len(states) >= cap:
                        raise CapExceeded("product-chain states", cap)
                    j = index[pair] = len(states)
                    states.append(pair)
                row[j] = row.get(j, _ZERO) + prob
            trans.append(sorted(row.items()))
        k += 1
    return ProductChain(states, trans, goal, terminal, router.names)


# ------------------------------------------------------------ acyclic DP

def evaluate_acyclic(d, p: Plan, cap: int = DEFAULT_STATE_CAP) -> PlanValue:
    """Probability of reaching the goal within |V| steps of the product chain."""
    if classify_plan(p) is PlanClass.LOOPING:
        raise StructureError("evaluate_acyclic needs a plan without cycles")
    chain = cross_product_chain(d, p, cap)
    dist = {chain.initial: _ONE}
    reached = _ZERO
    for _ in range(p.size + 1):
        nxt = {}
        for k, mass in dist.items():
            if k in chain.goal:
                reached += mass
                continue
            if k in chain.terminal:
                continue
            for j, prob in chain.trans[k]:
                nxt[j] = nxt.get(j, _ZERO) + mass * prob
        dist = nxt
        if not dist:
            break
    return PlanValue(reached)


def enumerate_goal_trajectories(d, p: Plan, cap: int = DEFAULT_TRAJECTORY_CAP):
    """Every goal trajectory with its probability, by explicit path expansion.

    Trajectories are lists of ``(state_label, node_name)`` pairs stopping at
    the first goal state.  Independent of :func:`evaluate_acyclic`: walks
    the domain and plan directly without the product chain.
    """
    if classify_plan(p) is PlanClass.LOOPING:
        raise StructureError("trajectory enumeration needs a plan without cycles")
    router = _Router(d, p)
    out = []
    stack = [([(d.initial_id(), p.node_index(p.start))], _ONE)]
    expanded = 0
    while stack:
        path, prob = stack.pop()
        s, v = path[-1]
        if d.is_goal_id(s):
            out.append(([(d.state_label(a), router.names[b]) for a, b in path], prob))
            if len(out) > cap:
                raise CapExceeded("goal trajectories", cap)
            continue
        if router.actions[v] is None:
            continue
        expanded += 1
        if expanded > cap:
            raise CapExceeded("trajectory expansions", cap)
        children = []
        for s2, q in d.successors(s, router.actions[v]):
            children.append((path + [(s2, router.route(v, s2))], prob * q))
        stack.extend(reversed(children))
    total = sum((q for _, q in out), _ZERO)
    return out, total


# ------------------------------------------------------------ looping

def _absorption_values(trans, goal, n):
    """Probability of eventually hitting ``goal`` from each index."""
    live = backward_reachable(n, trans, goal)
    var = [k for k in range(n) if k in live and k not in goal]
    pos = {k: i for i, k in enumerate(var)}
    rows, const = [], []
    for k in var:
        row, c = [], _ZERO
        for j, prob in trans[k]:
            if j in goal:
                c += prob
            elif j in pos:
                row.append((pos[j], prob))
        rows.append(row)
        const.append(c)
    sol = solve_fixed_point(rows, const)
    values = [_ZERO] * n
    for k in goal:
        values[k] = _ONE
    for k, i in pos.items():
        values[k] = sol[i]
    return values


def absorption_probabilities(rows, goal) -> list:
    """Hitting probabilities of ``goal`` for a chain given as sparse rows."""
    return _absorption_values(rows, set(goal), len(rows))


def evaluate_looping(d, p: Plan, cap: int = DEFAULT_STATE_CAP) -> PlanValue:
    """Absorption probability in the goal set, by an exact linear solve."""
    chain = cross_product_chain(d, p, cap)
    values = _absorption_values(chain.trans, chain.goal, len(chain))
    return PlanValue(values[chain.initial])


def evaluate_plan(d, p: Plan, cap: int = DEFAULT_STATE_CAP) -> PlanValue:
    if classify_plan(p) is PlanClass.LOOPING:
        return evaluate_looping(d, p, cap)
    return evaluate_acyclic(d, p, cap)


# ---------------------------------------------------------- visit counts

@dataclass(frozen=True)
class StepVisits:
    per_node: dict
    per_action: dict


def expected_step_visits(d, p: Plan, cap: int = DEFAULT_STATE_CAP) -> StepVisits:
    """Expected number of executions of each non-terminal step.

    Raises StructureError if some reachable non-goal state can never be
    absorbed (its expected visit count would be infinite).
    """
    chain = cross_product_chain(d, p, cap)
    n = len(chain)
    absorbing = chain.goal | chain.terminal
    escapes = backward_reachable(n, chain.trans, absorbing)
    transient = [k for k in range(n) if k not in absorbing]
    stuck = [k for k in transient if k not in escapes]
    if stuck:
        s, v = chain.states[stuck[0]]
        raise StructureError(
            f"expected visits are infinite: state {d.state_label(s)} at node {chain.node_names[v]} is never absorbed"
        )
    pos = {k: i for i, k in enumerate(transient)}
    incoming = [[] for _ in transient]
    for k in transient:
        for j, prob in chain.trans[k]:
            if j in pos:
                incoming[pos[j]].append((pos[k], prob))
    const = [_ONE if k == chain.initial else _ZERO for k in transient]
    visits = solve_fixed_point(incoming, const) if transient else []
    per_node = {nd.name: _ZERO for nd in p.nodes if not nd.terminal}
    for k, i in pos.items():
        per_node[chain.node_names[chain.states[k][1]]] += visits[i]
    per_action = {}
    for nd in p.nodes:
        if not nd.terminal:
            per_action[nd.action] = per_action.get(nd.action, _ZERO) + per_node[nd.name]
    return StepVisits(per_node, per_action)


# ------------------------------------------------------- partial orders

class Interpretation(enum.Enum):
    OPTIMISTIC = "optimistic"
    PESSIMISTIC = "pessimistic"
    AVERAGE = "average"


@dataclass(frozen=True)
class PartialOrderSummary:
    count: int
    total: Fraction
    best: Fraction
    best_witness: tuple
    worst: Fraction
    worst_witness: tuple

    @property
    def average(self) -> Fraction:
        return self.total / self.count


def _check_po_actions(d, p: PartialOrderPlan):
    for s in p.steps:
        if s.action not in d.actions:
            raise StructureError(f"step {s.id} uses unknown action {s.action!r}")


def summarize_partial_order(d, p: PartialOrderPlan, cap: int = DEFAULT_EXTENSION_CAP) -> PartialOrderSummary:
    """Count, sum, max and min of extension values in one memoised pass.

    The search state is (placed steps, non-goal distribution).  Children are
    tried in lexicographic step-id order, so the recorded witnesses are the
    lexicographically first extensions attaining the max and min.
    """
    _check_po_actions(d, p)
    ids = p.step_ids()
    actions = [p.action_of(s) for s in ids]
    need = [0] * len(ids)
    where = {s: k for k, s in enumerate(ids)}
    for a, b in p.order:
        need[where[b]] |= 1 << where[a]
    full = (1 << len(ids)) - 1
    memo = {}

    def step(dist, action):
        out, gained = {}, _ZERO
        for s, mass in dist:
            for s2, prob in d.successors(s, action):
                if d.is_goal_id(s2):
                    gained += mass * prob
                else:
                    out[s2] = out.get(s2, _ZERO) + mass * prob
        return tuple(sorted(out.items())), gained

    def rec(placed, dist):
        key = (placed, dist)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if placed == full or not dist:
            rest = full & ~placed
            n = 1 if placed == full else _count_extensions(rest, need, full)
            suffix = _first_extension(rest, need, ids) if placed != full else ()
            res = (n, _ZERO, _ZERO, suffix, _ZERO, suffix)
        else:
            count, total = 0, _ZERO
            best = worst = None
            bw = ww = ()
            for k in range(len(ids)):
                if placed >> k & 1 or (need[k] & placed) != need[k]:
                    continue
                nd, gained = step(dist, actions[k])
                c, t, hi, hw, lo, lw = rec(placed | 1 << k, nd)
                count += c
                total += t + gained * c
                if best is None or hi + gained > best:
                    best, bw = hi + gained, (ids[k],) + hw
                if worst is None or lo + gained < worst:
                    worst, ww = lo + gained, (ids[k],) + lw
            res = (count, total, best, bw, worst, ww)
        if len(memo) >= cap:
            raise CapExceeded("partial-order memo", cap)
        memo[key] = res
        return res

    s0 = d.initial_id()
    if d.is_goal_id(s0):
        base, dist = _ONE, ()
    else:
        base, dist = _ZERO, ((s0, _ONE),)
    count, total, best, bw, worst, ww = rec(0, dist)
    if count > cap:
        raise CapExceeded(f"{count} linear extensions", cap)
    return PartialOrderSummary(count, total + base * count, best + base, bw, worst + base, ww)


def _count_extensions(rest, need, full):
    """Extensions of the steps in ``rest`` given everything else is placed."""
    placed0 = full & ~rest
    memo = {}

    def count(placed):
        if placed == full:
            return 1
        hit = memo.get(placed)
        if hit is not None:
            return hit
        total = 0
        for k in range(full.bit_length()):
            if not placed >> k & 1 and (need[k] & placed) == need[k]:
                total += count(placed | 1 << k)
        memo[placed] = total
        return total

    return count(placed0)


def _first_extension(rest, need, ids):
    placed = ~rest & ((1 << len(ids)) - 1)
    out = []
    while rest & ~placed:
        for k in range(len(ids)):
            if not placed >> k & 1 and (need[k] & placed) == need[k]:
                out.append(ids[k])
                placed |= 1 << k
                break
    return tuple(out)


def evaluate_partial_order(
    d,
    p: PartialOrderPlan,
    interpretation: Interpretation,
    cap: int = DEFAULT_EXTENSION_CAP,
    method: str = "memo",
) -> PlanValue:
    """Max, min or mean value over all labelled linear extensions.

    ``method="memo"`` uses :func:`summarize_partial_order`; ``"enumerate"``
    walks :func:`linear_extensions` and evaluates each closed chain with
    :func:`evaluate_acyclic`.
    """
    interpretation = Interpretation(interpretation)
    if method == "memo":
        summary = summarize_partial_order(d, p, cap)
    elif method == "enumerate":
        summary = summarize_by_enumeration(d, p, cap)
    else:
        raise ValueError(f"unknown method {method!r}")
    if interpretation is Interpretation.OPTIMISTIC:
        return PlanValue(summary.best, summary.best_witness)
    if interpretation is Interpretation.PESSIMISTIC:
        return PlanValue(summary.worst, summary.worst_witness)
    return PlanValue(summary.average)


def summarize_by_enumeration(d, p: PartialOrderPlan, cap: int = DEFAULT_EXTENSION_CAP) -> PartialOrderSummary:
    _check_po_actions(d, p)
    count, total = 0, _ZERO
    best = worst = None
    bw = ww = ()
    for ext in linear_extensions(p, cap):
        v = evaluate_acyclic(d, extension_plan(p, ext)).exact
        count += 1
        total += v
        if best is None or v > best:
            best, bw = v, ext
        if worst is None or v < worst:
            worst, ww = v, ext
    return PartialOrderSummary(count, total, best, bw, worst, ww)


# ------------------------------------------------------------ simulation

@dataclass(frozen=True)
class SimulationResult:
    trials: int
    successes: int
    cutoffs: int

    @property
    def frequency(self) -> Fraction:
        return Fraction(self.successes, self.trials) if self.trials else _ZERO


def simulate_success(d, p: Plan, trials: int, rng: random.Random, max_steps: int = 10_000) -> SimulationResult:
    """Monte-Carlo rollouts; a trial that hits ``max_steps`` counts as a cutoff, not a success."""
    router = _Router(d, p)
    s0, v0 = d.initial_id(), p.node_index(p.start)
    successes = cutoffs = 0
    for _ in range(trials):
        s, v = s0, v0
        steps = 0
        while True:
            if d.is_goal_id(s):
                successes += 1
                break
            action = router.actions[v]
            if action is None:
                break
            if steps >= max_steps:
                cutoffs += 1
                break
            s = sample_next_state_id(d, s, action, rng)
            v = router.route(v, s)
            steps += 1
    return SimulationResult(trials, successes, cutoffs)
