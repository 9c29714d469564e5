"""Exact evaluation, search and hardness gadgets for probabilistic plans."""

from .counting import CnfFormula, count_models, decide_majsat, parse_dimacs, solve_emajsat
from .domain import DecisionTree, FlatDomain, STDomain, expand_to_flat, transition_probability, validate_domain
from .domain_io import load_domain, parse_domain, render_domain
from .errors import CapExceeded, ParseError, ProbPlanError, StructureError
from .evaluator import (
    Interpretation,
    PlanValue,
    cross_product_chain,
    evaluate_acyclic,
    evaluate_looping,
    evaluate_partial_order,
    evaluate_plan,
    expected_step_visits,
    simulate_success,
)
from .plan import Edge, Guard, PartialOrderPlan, Plan, PlanClass, PlanNode, Step, classify_plan, totally_ordered_plan
from .plan_io import load_plan, parse_plan, render_plan
from .search import (
    DecisionInstance,
    Encoding,
    StationaryPolicy,
    enumerate_candidate_plans,
    optimal_stationary_policy,
    plan_exists,
    policy_to_looping_plan,
)

__version__ = "0.1.0"

__all__ = [
    "CnfFormula",
    "count_models",
    "decide_majsat",
    "parse_dimacs",
    "solve_emajsat",
    "DecisionTree",
    "FlatDomain",
    "STDomain",
    "expand_to_flat",
    "transition_probability",
    "validate_domain",
    "load_domain",
    "parse_domain",
    "render_domain",
    "CapExceeded",
    "ParseError",
    "ProbPlanError",
    "StructureError",
    "Interpretation",
    "PlanValue",
    "cross_product_chain",
    "evaluate_acyclic",
    "evaluate_looping",
    "evaluate_partial_order",
    "evaluate_plan",
    "expected_step_visits",
    "simulate_success",
    "Edge",
    "Guard",
    "PartialOrderPlan",
    "Plan",
    "PlanClass",
    "PlanNode",
    "Step",
    "classify_plan",
    "totally_ordered_plan",
    "load_plan",
    "parse_plan",
    "render_plan",
    "DecisionInstance",
    "Encoding",
    "StationaryPolicy",
    "enumerate_candidate_plans",
    "optimal_stationary_policy",
    "plan_exists",
    "policy_to_looping_plan",
]
