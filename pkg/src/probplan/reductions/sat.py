"""SAT into flat domains: plan existence and partially ordered evaluation."""

from __future__ import annotations

from fractions import Fraction

from ..counting import CnfFormula
from ..domain import FlatDomain
from ..plan import PartialOrderPlan, Step
from .base import ReductionInstance

S0, ACC, REJ = "s0", "s_acc", "s_rej"


def _assign(i, b):
    return f"assign_{i}_{b}"


def _appears(phi: CnfFormula, i, b, j) -> bool:
    return (i * b) in phi.clauses[j - 1]


def _check_formula(phi: CnfFormula):
    if phi.num_vars < 1:
        raise ValueError("formula needs at least one variable")
    if phi.num_clauses < 1:
        raise ValueError("formula needs at least one clause")


def sat_states_actions(phi: CnfFormula):
    n, m = phi.num_vars, phi.num_clauses
    states = [S0]
    for i in range(1, n + 2):
        for j in range(1, m + 1):
            states += [f"sat_{i}_{j}", f"unsat_{i}_{j}"]
    states += [ACC, REJ]
    actions = ["start"] + [_assign(i, b) for i in range(1, n + 1) for b in (1, -1)] + ["end"]
    return states, actions


def sat_flat_domain(phi: CnfFormula, goal=ACC, throwaway=False) -> FlatDomain:
    """The clause-checking domain.  ``throwaway`` adds one discard slot per variable."""
    _check_formula(phi)
    n, m = phi.num_vars, phi.num_clauses
    states, actions = sat_states_actions(phi)
    if throwaway:
        extra = [f"t{kind}_{i}_{j}" for i in range(2, n + 2) for j in range(1, m + 1) for kind in ("sat", "unsat")]
        states = states[:-2] + extra + states[-2:]
    trans = {}

    def put(s, a, dst):
        trans[(s, a)] = {dst: Fraction(1)}

    for a in actions:
        if a == "start":
            trans[(S0, a)] = {f"unsat_1_{j}": Fraction(1, m) for j in range(1, m + 1)}
        else:
            put(S0, a, REJ)
        put(ACC, a, ACC)
        put(REJ, a, REJ)
    for j in range(1, m + 1):
        for i in range(1, n + 2):
            for kind in ("sat", "unsat"):
                s = f"{kind}_{i}_{j}"
                for a in actions:
                    put(s, a, REJ)
                if i == n + 1:
                    if kind == "sat":
                        put(s, "end", ACC)
                    continue
                nxt_prefix = "t" if throwaway else ""
                for b in (1, -1):
                    hit = kind == "sat" or _appears(phi, i, b, j)
                    put(s, _assign(i, b), f"{nxt_prefix}{'sat' if hit else 'unsat'}_{i + 1}_{j}")
        if throwaway:
            for i in range(2, n + 2):
                for kind in ("sat", "unsat"):
                    s = f"t{kind}_{i}_{j}"
                    for a in actions:
                        put(s, a, REJ)
                    for b in (1, -1):
                        put(s, _assign(i - 1, b), f"{kind}_{i}_{j}")
    return FlatDomain(tuple(states), S0, tuple(actions), trans, frozenset([goal]))


def sat_to_flat(phi: CnfFormula) -> ReductionInstance:
    """Plan existence: a totally ordered plan of n+2 steps beats (m-1)/m iff phi is satisfiable."""
    d = sat_flat_domain(phi)
    n, m = phi.num_vars, phi.num_clauses
    return ReductionInstance(
        construction="sat-flat",
        domain=d,
        theta=Fraction(m - 1, m),
        claim="exists totally ordered plan of size z with value > theta iff formula satisfiable",
        z=n + 2,
        plan_class="totally-ordered",
    )


def assignment_plan_actions(bits):
    """``start, assign(1, b1), ..., assign(n, bn), end`` for booleans ``bits``."""
    return ["start"] + [_assign(i, 1 if b else -1) for i, b in enumerate(bits, start=1)] + ["end"]


def sat_po_plan(n: int) -> PartialOrderPlan:
    steps = [Step("start", "start"), Step("end", "end")]
    order = set()
    prev = ["start"]
    for i in range(1, n + 1):
        pair = [f"a{i}_pos", f"a{i}_neg"]
        steps += [Step(pair[0], _assign(i, 1)), Step(pair[1], _assign(i, -1))]
        order.update((p, q) for p in prev for q in pair)
        prev = pair
    order.update((p, "end") for p in prev)
    return PartialOrderPlan(tuple(steps), frozenset(order))


def sat_to_po_eval(phi: CnfFormula, mode: str = "optimistic") -> ReductionInstance:
    """Partially ordered evaluation; the second assignment of each pair is discarded.

    optimistic: goal s_acc, value > (m-1)/m iff satisfiable.
    pessimistic: goal s_rej, value > 0 iff unsatisfiable.
    """
    mode = mode.lower()
    m = phi.num_clauses
    if mode == "optimistic":
        d = sat_flat_domain(phi, goal=ACC, throwaway=True)
        theta = Fraction(m - 1, m)
        claim = "optimistic value > theta iff formula satisfiable"
    elif mode == "pessimistic":
        d = sat_flat_domain(phi, goal=REJ, throwaway=True)
        theta = Fraction(0)
        claim = "pessimistic value > theta iff formula unsatisfiable"
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return ReductionInstance(
        construction="sat-po",
        domain=d,
        theta=theta,
        claim=claim,
        plan=sat_po_plan(phi.num_vars),
        interpretation=mode,
    )
