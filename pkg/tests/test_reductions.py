import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _gen import random_circuit, random_cnf, random_reward_mdp

from probplan.counting import CnfFormula, count_models, is_satisfiable_bruteforce
from probplan.domain import FlatDomain, validate_domain
from probplan.domain_io import parse_domain, render_domain
from probplan.evaluator import Interpretation, evaluate_looping, evaluate_partial_order, evaluate_plan
from probplan.plan import ALWAYS, Edge, Plan, PlanNode, count_linear_extensions, totally_ordered_plan
from probplan.reductions import (
    DiscountMode,
    RewardMDP,
    assignment_plan_actions,
    choice_plan_actions,
    circuit_to_st,
    compute_step,
    discounted_policy_values,
    discounted_to_goal,
    emajsat_to_st,
    majsat_to_po_average,
    majsat_to_st,
    parse_netlist,
    parse_reward_mdp,
    render_netlist,
    render_reward_mdp,
    sat_to_flat,
    sat_to_po_eval,
    verify_manifest,
    write_instance,
)
from probplan.search import StationaryPolicy, evaluate_policy

PHI = CnfFormula(3, ((1, -2), (-1, 3)))
SEEDS = st.integers(0, 10**6)


def test_sat_gadget_plans():
    d = sat_to_flat(PHI).domain
    assert validate_domain(d).ok
    assert evaluate_plan(d, totally_ordered_plan(assignment_plan_actions([True, False, True]))).exact == 1
    assert evaluate_plan(d, totally_ordered_plan(assignment_plan_actions([True, True, False]))).exact == Fraction(1, 2)


def test_majsat_examples():
    for phi, v in [(PHI, Fraction(1, 2)), (CnfFormula(2, ((1, 2),)), Fraction(3, 4)), (CnfFormula(1, ((1, -1),)), Fraction(1))]:
        inst = majsat_to_st(phi)
        assert evaluate_plan(inst.domain, inst.plan).exact == v


def test_emajsat_examples():
    inst = emajsat_to_st(PHI, 2)
    assert evaluate_plan(inst.domain, totally_ordered_plan(["evaluate"])).exact == 1
    one = emajsat_to_st(PHI, 1)
    best = max(evaluate_plan(one.domain, totally_ordered_plan(a)).exact for a in (["evaluate"], ["set-x1", "evaluate"]))
    assert best == Fraction(1, 2)
    with pytest.raises(ValueError):
        emajsat_to_st(PHI, 0)


@settings(max_examples=40, deadline=None)
@given(SEEDS)
def test_emajsat_pointwise(seed):
    rng = random.Random(seed)
    phi = random_cnf(rng, 8, 6)
    k = rng.randint(1, min(4, phi.num_vars))
    d = emajsat_to_st(phi, k).domain
    for bits in itertools.product((False, True), repeat=k):
        v = evaluate_plan(d, totally_ordered_plan(choice_plan_actions(bits))).exact
        fixed = {i + 1: b for i, b in enumerate(bits)}
        assert v == Fraction(count_models(phi, fixed), 2 ** (phi.num_vars - k))


NET = "input a b\ngate i1 = NOT a\ngate i2 = AND a b\ngate i3 = OR i1 i2\noutput i3\n"


def test_circuit_examples():
    c = parse_netlist(NET)
    assert parse_netlist(render_netlist(c)) == c
    d = circuit_to_st(c, {"a": False, "b": False}).domain
    assert compute_step(d, frozenset()) >= {"i1", "i3"} and "i2" not in compute_step(d, frozenset())
    after = compute_step(d, frozenset({"a"}))
    assert not after & {"i1", "i2", "i3"}


@settings(max_examples=20, deadline=None)
@given(SEEDS)
def test_circuit_trees_deterministic(seed):
    c = random_circuit(random.Random(seed))
    d = circuit_to_st(c, {x: True for x in c.inputs}).domain
    assert all(v in (0, 1) for ts in d.trees.values() for t in ts for v in t.leaves())
    assert validate_domain(d).ok


def _two_action_mdp():
    sk = FlatDomain(("s",), "s", ("a", "b"), {("s", "a"): {"s": 1}, ("s", "b"): {"s": 1}}, frozenset())
    return RewardMDP(sk, {("s", "a"): 1, ("s", "b"): 0}, Fraction(1, 2))


def test_discount_examples():
    m = _two_action_mdp()
    d, _ = discounted_to_goal(m, DiscountMode.EXACT)
    sinks = {"g": "a", "reject": "a"}
    assert evaluate_policy(d, StationaryPolicy({"s": "a", **sinks})) == 1
    assert evaluate_policy(d, StationaryPolicy({"s": "b", **sinks})) == 0
    nodes = (PlanNode("pa", "a"), PlanNode("pb", "b"))
    alt = Plan(nodes, (Edge("pa", "pb", ALWAYS), Edge("pb", "pa", ALWAYS)), "pa")
    assert evaluate_looping(d, alt).exact == Fraction(2, 3)


def test_no_sink_mode_divergence():
    sk = FlatDomain(("s",), "s", ("a", "b", "c"), {("s", x): {"s": 1} for x in "abc"}, frozenset())
    m = RewardMDP(sk, {("s", "a"): 0, ("s", "b"): Fraction(1, 2), ("s", "c"): 1}, Fraction(1, 2))
    no_sink, _ = discounted_to_goal(m, DiscountMode.NO_SINK)
    exact, _ = discounted_to_goal(m, DiscountMode.EXACT)
    assert evaluate_policy(no_sink, StationaryPolicy({"s": "b", "g": "a"})) == 1
    assert evaluate_policy(exact, StationaryPolicy({"s": "b", "g": "a", "reject": "a"})) == Fraction(1, 2)
    assert (1 - m.discount) * discounted_policy_values(m, {"s": "b"})["s"] == Fraction(1, 2)


@settings(max_examples=30, deadline=None)
@given(SEEDS)
def test_reward_mdp_round_trip(seed):
    m = random_reward_mdp(random.Random(seed))
    again = parse_reward_mdp(render_reward_mdp(m))
    assert again.reward == {k: v for k, v in m.reward.items()}
    assert again.discount == m.discount
    assert render_reward_mdp(again) == render_reward_mdp(m)


def test_sat_po_examples():
    opt = sat_to_po_eval(PHI, "optimistic")
    assert evaluate_partial_order(opt.domain, opt.plan, Interpretation.OPTIMISTIC).exact == 1
    pes = sat_to_po_eval(CnfFormula(1, ((1,), (-1,))), "pessimistic")
    assert evaluate_partial_order(pes.domain, pes.plan, Interpretation.PESSIMISTIC).exact == Fraction(1, 2)


@settings(max_examples=25, deadline=None)
@given(SEEDS)
def test_sat_po_iff(seed):
    phi = random_cnf(random.Random(seed), 8, 6)
    sat = is_satisfiable_bruteforce(phi)
    opt = sat_to_po_eval(phi, "optimistic")
    pes = sat_to_po_eval(phi, "pessimistic")
    assert (evaluate_partial_order(opt.domain, opt.plan, Interpretation.OPTIMISTIC).exact > opt.theta) == sat
    assert (evaluate_partial_order(pes.domain, pes.plan, Interpretation.PESSIMISTIC).exact > pes.theta) == (not sat)


def test_average_gadget_small_cases():
    inst = majsat_to_po_average(CnfFormula(1, ((1,),)))
    assert count_linear_extensions(inst.plan) == 6
    assert evaluate_partial_order(inst.domain, inst.plan, Interpretation.AVERAGE, method="enumerate").exact == Fraction(1, 2)
    both = majsat_to_po_average(CnfFormula(2, ((1,), (2,))))
    assert evaluate_partial_order(both.domain, both.plan, Interpretation.AVERAGE).exact < Fraction(1, 2)


SOURCES = {
    "sat-flat": (PHI.to_dimacs(), {}),
    "majsat-st": (PHI.to_dimacs(), {}),
    "emajsat-st": (PHI.to_dimacs(), {"k": 2}),
    "sat-po": (PHI.to_dimacs(), {"mode": "pessimistic"}),
    "majsat-po-avg": ("p cnf 1 1\n1 0\n", {}),
    "circuit-st": (NET, {"inputs": {"a": 0, "b": 1}}),
    "discount": (render_reward_mdp(_two_action_mdp()), {"mode": "exact"}),
}


@pytest.mark.parametrize("construction", sorted(SOURCES))
def test_manifests_verify(construction, tmp_path):
    text, params = SOURCES[construction]
    path = write_instance(construction, text, tmp_path, params)
    v = verify_manifest(path)
    assert v.ok, str(v)
    dom = next(p for p in tmp_path.iterdir() if p.name.startswith("domain."))
    d = parse_domain(dom.read_text())
    assert render_domain(d) == dom.read_text()
