"""Discounted-reward MDPs recast as goal-reachability domains."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from ..domain import FlatDomain
from ..domain_io import NAME, _lines, _parse_flat_lines, render_flat_rows
from ..errors import ParseError
from ..linalg import bareiss_solve
from ..rational import DEFAULT_MAX_BITS, format_rational, parse_rational
from .base import ReductionInstance

_REWARD_RE = re.compile(rf"^reward\s+({NAME})\s+({NAME})\s*:\s*(\S+)\s*$")


class DiscountMode(enum.Enum):
    EXACT = "exact"
    NO_SINK = "no-sink"


@dataclass(frozen=True)
class RewardMDP:
    """Flat skeleton plus rewards R(s, a) and a discount factor in (0, 1).

    Rewards not listed are 0.  The skeleton's goal set is ignored.
    """

    skeleton: FlatDomain
    reward: Mapping = field(default_factory=dict)
    discount: Fraction = Fraction(1, 2)

    def __post_init__(self):
        object.__setattr__(self, "discount", Fraction(self.discount))
        object.__setattr__(self, "reward", {k: Fraction(v) for k, v in dict(self.reward).items()})
        if not 0 < self.discount < 1:
            raise ValueError("discount must lie strictly between 0 and 1")
        for (s, a) in self.reward:
            if s not in self.skeleton.states or a not in self.skeleton.actions:
                raise ValueError(f"reward for unknown pair ({s}, {a})")

    def r(self, s, a) -> Fraction:
        return self.reward.get((s, a), Fraction(0))


@dataclass(frozen=True)
class Normalization:
    low: Fraction
    high: Fraction
    degenerate: bool
    scaled: dict


def normalize_rewards(m: RewardMDP) -> Normalization:
    """R' = (R - min) / (max - min); constant rewards give R' = 1 everywhere."""
    pairs = [(s, a) for s in m.skeleton.states for a in m.skeleton.actions]
    values = [m.r(s, a) for s, a in pairs]
    lo, hi = min(values), max(values)
    if lo == hi:
        return Normalization(lo, hi, True, {k: Fraction(1) for k in pairs})
    return Normalization(lo, hi, False, {k: (m.r(*k) - lo) / (hi - lo) for k in pairs})


def _fresh(name, taken):
    while name in taken:
        name += "_"
    return name


def discounted_to_goal(m: RewardMDP, mode=DiscountMode.EXACT):
    """Return ``(domain, normalization)``.

    EXACT: from (s, a) go to the goal with (1-g)R', to a reject sink with
    (1-g)(1-R'), and follow t scaled by g otherwise.  NO_SINK: the goal with
    (1-g)R', and t scaled by 1-(1-g)R' otherwise.
    """
    mode = DiscountMode(mode)
    sk, gamma = m.skeleton, m.discount
    norm = normalize_rewards(m)
    goal = _fresh("g", set(sk.states))
    reject = _fresh("reject", set(sk.states) | {goal})
    states = list(sk.states) + [goal] + ([reject] if mode is DiscountMode.EXACT else [])
    trans = {}
    for s in sk.states:
        for a in sk.actions:
            rp = norm.scaled[(s, a)]
            row = {}
            keep = gamma if mode is DiscountMode.EXACT else 1 - (1 - gamma) * rp
            for dst, p in sk.trans[(s, a)].items():
                row[dst] = row.get(dst, Fraction(0)) + keep * p
            row[goal] = (1 - gamma) * rp
            if mode is DiscountMode.EXACT:
                row[reject] = (1 - gamma) * (1 - rp)
            trans[(s, a)] = {k: v for k, v in row.items()}
    for a in sk.actions:
        trans[(goal, a)] = {goal: Fraction(1)}
        if mode is DiscountMode.EXACT:
            trans[(reject, a)] = {reject: Fraction(1)}
    d = FlatDomain(tuple(states), sk.initial, sk.actions, trans, frozenset([goal]))
    return d, norm


def discount_instance(m: RewardMDP, mode=DiscountMode.EXACT) -> ReductionInstance:
    d, norm = discounted_to_goal(m, mode)
    mode = DiscountMode(mode)
    return ReductionInstance(
        construction="discount",
        domain=d,
        theta=Fraction(0),
        claim="for every stationary policy, goal probability = (1 - discount) * discounted value under R'",
        info={"mode": mode.value, "degenerate": norm.degenerate, "min": format_rational(norm.low),
              "max": format_rational(norm.high), "discount": format_rational(m.discount)},
    )


def discounted_policy_values(m: RewardMDP, policy: Mapping[str, str], normalized: bool = True) -> dict:
    """Solve (I - g P) V = R for a stationary policy with one dense elimination."""
    sk, gamma = m.skeleton, m.discount
    norm = normalize_rewards(m) if normalized else None
    idx = {s: i for i, s in enumerate(sk.states)}
    n = len(sk.states)
    mat = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    rhs = []
    for s in sk.states:
        a = policy[s]
        for dst, p in sk.trans[(s, a)].items():
            mat[idx[s]][idx[dst]] -= gamma * p
        rhs.append(norm.scaled[(s, a)] if normalized else m.r(s, a))
    sol = bareiss_solve(mat, rhs)
    return {s: sol[i] for s, i in idx.items()}


def parse_reward_mdp(text: str, max_bits: int = DEFAULT_MAX_BITS) -> RewardMDP:
    lines = list(_lines(text))
    if not lines or lines[0][2] != "flatdomain":
        raise ParseError("reward MDP documents start with 'flatdomain'", lines[0][0] if lines else None, 1)
    discount = []
    rewards = {}

    def extra(no, col, content, states, actions):
        mm = re.match(r"^discount\s*:\s*(\S+)\s*$", content)
        if mm:
            if discount:
                raise ParseError("duplicate 'discount:' line", no, col + 1)
            try:
                discount.append(parse_rational(mm.group(1), max_bits))
            except ValueError as exc:
                raise ParseError(str(exc), no, col + 1) from None
            return True
        mm = _REWARD_RE.match(content)
        if mm:
            s, a, lit = mm.groups()
            if states is None or s not in states:
                raise ParseError(f"unknown state {s!r}", no, col + 1)
            if a not in actions:
                raise ParseError(f"unknown action {a!r}", no, col + 1)
            if (s, a) in rewards:
                raise ParseError(f"duplicate reward for ({s}, {a})", no, col + 1)
            try:
                rewards[(s, a)] = parse_rational(lit, max_bits, signed=True)
            except ValueError as exc:
                raise ParseError(str(exc), no, col + mm.start(3) + 1) from None
            return True
        return False

    states, s0, actions, rows, goals, _ = _parse_flat_lines(lines[1:], max_bits, extra)
    if not discount:
        raise ParseError("missing 'discount:' line")
    sk = FlatDomain(tuple(states), s0, tuple(actions), rows, goals)
    try:
        return RewardMDP(sk, rewards, discount[0])
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def render_reward_mdp(m: RewardMDP) -> str:
    sk = m.skeleton
    lines = ["flatdomain", f"discount: {format_rational(m.discount)}", "states: " + " ".join(sk.states), f"init: {sk.initial}"]
    lines.extend(render_flat_rows(sk))
    for s in sk.states:
        for a in sk.actions:
            if (s, a) in m.reward:
                lines.append(f"reward {s} {a} : {format_rational(m.reward[(s, a)])}")
    lines.append("end")
    return "\n".join(lines) + "\n"
