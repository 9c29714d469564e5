"""MAJSAT and E-MAJSAT gadgets."""

from __future__ import annotations

from collections import deque
from fractions import Fraction

from ..counting import CnfFormula
from ..domain import DecisionTree, FlatDomain, Leaf, STDomain, branch, leaf
from ..plan import PartialOrderPlan, Step, totally_ordered_plan
from .base import ReductionInstance

HALF = Fraction(1, 2)


def _keep(p):
    return DecisionTree(p, branch(p, 1, 0))


def _clause_tree(label, clause):
    node = leaf(0)
    for lit in reversed(clause):
        x = f"x{abs(lit)}"
        node = branch(x, 1, node, new=True) if lit > 0 else branch(x, node, 1, new=True)
    return DecisionTree(label, node)


def _satisfied_tree(m):
    node = leaf(1)
    for j in range(m, 0, -1):
        node = branch(f"clause{j}", node, 0, new=True)
    return DecisionTree("satisfied", branch("done", 0, node))


def evaluate_trees(phi: CnfFormula, k: int = 0):
    """Trees of ``evaluate``: x1..xk are kept, the rest drawn fairly while done is false."""
    n, m = phi.num_vars, phi.num_clauses
    trees = []
    for i in range(1, n + 1):
        x = f"x{i}"
        if i <= k:
            trees.append(_keep(x))
        else:
            trees.append(DecisionTree(x, branch("done", branch(x, 1, 0), HALF)))
    for j, clause in enumerate(phi.clauses, start=1):
        trees.append(_clause_tree(f"clause{j}", clause))
    trees.append(_satisfied_tree(m))
    trees.append(DecisionTree("done", Leaf(Fraction(1))))
    return trees


def gadget_props(phi: CnfFormula):
    return (
        [f"x{i}" for i in range(1, phi.num_vars + 1)]
        + [f"clause{j}" for j in range(1, phi.num_clauses + 1)]
        + ["satisfied", "done"]
    )


def majsat_to_st(phi: CnfFormula) -> ReductionInstance:
    """One ``evaluate`` step; its value is the fraction of satisfying assignments."""
    props = gadget_props(phi)
    d = STDomain(tuple(props), frozenset(), ("evaluate",), {"evaluate": evaluate_trees(phi)}, frozenset(["satisfied"]))
    return ReductionInstance(
        construction="majsat-st",
        domain=d,
        theta=HALF,
        claim="value of plan > theta iff strict majority of assignments satisfy the formula",
        plan=totally_ordered_plan(["evaluate"]),
    )


def set_action_trees(props, x):
    return [DecisionTree(p, leaf(1)) if p == x else _keep(p) for p in props]


def emajsat_to_st(phi: CnfFormula, k: int) -> ReductionInstance:
    """``set-xi`` actions for the first k variables plus ``evaluate``; goal {satisfied, done}."""
    n = phi.num_vars
    if not 1 <= k <= n:
        raise ValueError(f"k must be in 1..{n}, got {k}")
    props = gadget_props(phi)
    actions = tuple(f"set-x{i}" for i in range(1, k + 1)) + ("evaluate",)
    trees = {f"set-x{i}": set_action_trees(props, f"x{i}") for i in range(1, k + 1)}
    trees["evaluate"] = evaluate_trees(phi, k)
    d = STDomain(tuple(props), frozenset(), actions, trees, frozenset(["satisfied", "done"]))
    return ReductionInstance(
        construction="emajsat-st",
        domain=d,
        theta=HALF,
        claim="exists totally ordered plan of size z with value > theta iff some choice of x1..xk gives a strict majority",
        z=k + 1,
        plan_class="totally-ordered",
        info={"k": k},
    )


def choice_plan_actions(bits):
    """``set-xi`` for every chosen true bit, then ``evaluate``."""
    return [f"set-x{i}" for i, b in enumerate(bits, start=1) if b] + ["evaluate"]


# ---------------------------------------------------- average-case gadget

def _assign_action(i, b):
    return f"assign_{i}_{b}"


def _po_actions(n):
    return ["start"] + [_assign_action(i, b) for i in range(1, n + 1) for b in (0, 1)] + ["check", "end"]


def _literal_true(clause, i, b):
    return (i if b else -i) in clause


def _transition(phi, state, action):
    """Deterministic part of the automaton; returns the next state name."""
    n, m = phi.num_vars, phi.num_clauses
    kind = state[0]
    if kind in ("accept", "reject"):
        return state
    if action == "end":
        return None
    if kind == "bad":
        return state
    if kind == "init":
        return ("started",) if action == "start" else ("bad",)
    parsed = _parse_assign(action)
    if kind == "started":
        if parsed and parsed[0] == 1:
            return ("pre", 1, parsed[1], 1)
        return ("bad",)
    if kind == "pre":
        _, i, b, c = state
        if c < m:
            return ("pre", i, b, c + 1) if parsed == (i, b) else ("bad",)
        if i < n:
            return ("pre", i + 1, parsed[1], 1) if parsed and parsed[0] == i + 1 else ("bad",)
        return ("post", 1, 1, False, True) if action == "check" else ("bad",)
    if kind == "post":
        _, j, i, cs, ok = state
        if not parsed or parsed[0] != i:
            return ("bad",)
        cs = cs or _literal_true(phi.clauses[j - 1], i, parsed[1])
        if i < n:
            return ("post", j, i + 1, cs, ok)
        ok = ok and cs
        if j < m:
            return ("post", j + 1, 1, False, ok)
        return ("complete", ok)
    if kind == "complete":
        return ("bad",)
    raise AssertionError(state)


def _parse_assign(action):
    if not action.startswith("assign_"):
        return None
    _, i, b = action.split("_")
    return int(i), int(b)


def _end_row(state):
    kind = state[0]
    if kind == "accept":
        return {("accept",): Fraction(1)}
    if kind == "reject":
        return {("reject",): Fraction(1)}
    if kind == "complete":
        return {("accept",) if state[1] else ("reject",): Fraction(1)}
    return {("accept",): HALF, ("reject",): HALF}


def _state_name(state):
    kind = state[0]
    if kind == "pre":
        return f"pre_{state[1]}_{state[2]}_{state[3]}"
    if kind == "post":
        return f"post_{state[1]}_{state[2]}_{int(state[3])}_{int(state[4])}"
    if kind == "complete":
        return f"complete_{int(state[1])}"
    return kind


def average_gadget_domain(phi: CnfFormula) -> FlatDomain:
    if phi.num_vars < 1 or phi.num_clauses < 1:
        raise ValueError("formula needs at least one variable and one clause")
    actions = _po_actions(phi.num_vars)
    start = ("init",)
    seen = {start: 0}
    order = [start]
    rows = {}
    queue = deque([start])
    while queue:
        st = queue.popleft()
        for a in actions:
            row = _end_row(st) if a == "end" else {_transition(phi, st, a): Fraction(1)}
            rows[(st, a)] = row
            for nxt in row:
                if nxt not in seen:
                    seen[nxt] = len(order)
                    order.append(nxt)
                    queue.append(nxt)
    names = [_state_name(s) for s in order]
    trans = {(_state_name(s), a): {_state_name(t): p for t, p in row.items()} for (s, a), row in rows.items()}
    return FlatDomain(tuple(names), "init", tuple(actions), trans, frozenset(["accept"]))


def average_gadget_plan(phi: CnfFormula) -> PartialOrderPlan:
    n, m = phi.num_vars, phi.num_clauses
    middle = [Step(f"s_{i}_{b}_{h}", _assign_action(i, b)) for i in range(1, n + 1) for b in (0, 1) for h in range(1, m + 1)]
    middle.append(Step("check", "check"))
    steps = [Step("start", "start")] + middle + [Step("end", "end")]
    order = {("start", s.id) for s in middle} | {(s.id, "end") for s in middle}
    return PartialOrderPlan(tuple(steps), frozenset(order))


def majsat_to_po_average(phi: CnfFormula) -> ReductionInstance:
    """Average value over all orderings > 1/2 iff strict majority of assignments satisfy phi."""
    return ReductionInstance(
        construction="majsat-po-avg",
        domain=average_gadget_domain(phi),
        theta=HALF,
        claim="average value > theta iff strict majority of assignments satisfy the formula",
        plan=average_gadget_plan(phi),
        interpretation="average",
    )
