"""Compilers from SAT, MAJSAT, E-MAJSAT, circuits and discounted MDPs into planning instances."""

from .base import ReductionInstance
from .circuit import CircuitNetlist, Gate, circuit_to_st, compute_step, parse_netlist, render_netlist
from .discount import (
    DiscountMode,
    RewardMDP,
    discount_instance,
    discounted_policy_values,
    discounted_to_goal,
    normalize_rewards,
    parse_reward_mdp,
    render_reward_mdp,
)
from .majsat import choice_plan_actions, emajsat_to_st, majsat_to_po_average, majsat_to_st
from .manifest import CONSTRUCTIONS, compile_source, verify_manifest, write_instance
from .sat import assignment_plan_actions, sat_to_flat, sat_to_po_eval

__all__ = [
    "ReductionInstance",
    "CircuitNetlist",
    "Gate",
    "circuit_to_st",
    "compute_step",
    "parse_netlist",
    "render_netlist",
    "DiscountMode",
    "RewardMDP",
    "discount_instance",
    "discounted_policy_values",
    "discounted_to_goal",
    "normalize_rewards",
    "parse_reward_mdp",
    "render_reward_mdp",
    "choice_plan_actions",
    "emajsat_to_st",
    "majsat_to_po_average",
    "majsat_to_st",
    "CONSTRUCTIONS",
    "compile_source",
    "verify_manifest",
    "write_instance",
    "assignment_plan_actions",
    "sat_to_flat",
    "sat_to_po_eval",
]
