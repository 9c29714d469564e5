import math
import random
from collections import Counter
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import _oracle
from _gen import random_flat_domain, random_st_domain

from probplan.domain import (
    DecisionTree,
    FlatDomain,
    STDomain,
    branch,
    expand_to_flat,
    leaf,
    sample_next_state,
    transition_probability,
    tree_leaf_probability,
    validate_domain,
)
from probplan.domain_io import load_domain, parse_domain, render_domain
from probplan.errors import CapExceeded, ParseError, UndefinedNewValue

FIX = Path(__file__).parent / "fixtures"
SEEDS = st.integers(0, 10**6)


@pytest.fixture(scope="module")
def sc():
    return load_domain(FIX / "sandcastle.st")


def test_sandcastle_parses(sc):
    assert isinstance(sc, STDomain)
    assert sc.props == ("moat", "castle")
    assert sc.actions == ("dig-moat", "erect-castle")
    assert sum(len(ts) for ts in sc.trees.values()) == 4
    assert validate_domain(sc).ok


def test_leaf_out_of_range_rejected():
    text = (FIX / "sandcastle.st").read_text().replace("(moat ? 1 : 1/2)", "(moat ? 1 : 3/2)")
    with pytest.raises(ParseError, match="probability out of range"):
        parse_domain(text)


def test_parse_error_carries_position():
    with pytest.raises(ParseError) as info:
        parse_domain("stdomain\nprops: a\ninit:\ngoal: a\naction x:\n  tree a: (a ? 1 : zz)\nend\n")
    assert info.value.line == 6


def test_new_before_definition_reported(sc):
    erect = sc.trees["erect-castle"]
    swapped = STDomain(sc.props, sc.init, sc.actions, {**sc.trees, "erect-castle": (erect[1], erect[0])}, sc.goals)
    assert "new-before-definition" in validate_domain(swapped).kinds()


def test_row_sum_violation():
    d = FlatDomain(("a", "b"), "a", ("x",), {("a", "x"): {"b": Fraction(9, 10)}, ("b", "x"): {"b": Fraction(1)}}, frozenset("b"))
    assert "row-sum" in validate_domain(d).kinds()


def test_tree_leaf_values(sc):
    moat_tree = sc.trees["erect-castle"][1]
    assert tree_leaf_probability(moat_tree, {"moat", "castle"}, {"castle": True}) == Fraction(3, 4)
    assert tree_leaf_probability(sc.trees["dig-moat"][0], set(), {}) == Fraction(1, 2)
    assert tree_leaf_probability(sc.trees["dig-moat"][1], set(), {"moat": True}) == 0
    with pytest.raises(UndefinedNewValue):
        tree_leaf_probability(moat_tree, {"moat"}, {})


def test_transition_examples(sc):
    assert transition_probability(sc, set(), "dig-moat", {"moat"}) == Fraction(1, 2)
    assert transition_probability(sc, {"moat"}, "erect-castle", {"moat", "castle"}) == Fraction(1, 2)
    assert transition_probability(sc, set(), "erect-castle", {"castle"}) == Fraction(1, 4)


def test_deterministic_sampling_ignores_seed():
    d = STDomain(("a",), (), ("x",), {"x": [DecisionTree("a", leaf(1))]}, ("a",))
    assert {frozenset(sample_next_state(d, set(), "x", random.Random(s))) for s in range(20)} == {frozenset("a")}


def test_sampling_reproducible(sc):
    a = [sample_next_state(sc, set(), "dig-moat", random.Random(42)) for _ in range(5)]
    assert len(set(map(frozenset, a))) == 1


def test_expand_sandcastle(sc):
    f = expand_to_flat(sc)
    assert f.num_states == 4
    assert transition_probability(f, "s10", "erect-castle", "s11") == Fraction(1, 2)


def test_expand_zero_props():
    d = STDomain((), (), ("x",), {"x": []}, ())
    f = expand_to_flat(d)
    assert f.num_states == 1
    assert f.trans[(f.states[0], "x")] == {f.states[0]: 1}


def test_expand_limit():
    props = tuple(f"p{i}" for i in range(21))
    d = STDomain(props, (), ("x",), {"x": [DecisionTree(p, branch(p, 1, 0)) for p in props]}, ())
    with pytest.raises(CapExceeded):
        expand_to_flat(d)


def test_render_matches_fixture(sc):
    assert parse_domain(render_domain(sc)) == sc


def _domain(seed):
    rng = random.Random(seed)
    return random_st_domain(rng) if seed % 2 else random_flat_domain(rng)


def _states(d):
    return list(d.states) if isinstance(d, FlatDomain) else list(_oracle.all_prop_states(d))


@settings(max_examples=60, deadline=None)
@given(SEEDS)
def test_distribution_law(seed):
    d = _domain(seed)
    assert validate_domain(d).ok
    states = _states(d)
    for s in states:
        for a in d.actions:
            assert sum(transition_probability(d, s, a, t) for t in states) == 1


@settings(max_examples=40, deadline=None)
@given(SEEDS)
def test_eq1_against_oracle(seed):
    d = random_st_domain(random.Random(seed))
    for s in _oracle.all_prop_states(d):
        for a in d.actions:
            for t in _oracle.all_prop_states(d):
                assert transition_probability(d, s, a, t) == _oracle.eq1_probability(d, s, a, t)


@settings(max_examples=40, deadline=None)
@given(SEEDS)
def test_expansion_soundness(seed):
    d = random_st_domain(random.Random(seed))
    f = expand_to_flat(d)
    states = list(_oracle.all_prop_states(d))
    for s in states:
        for a in d.actions:
            for t in states:
                fs, ft = f.state_label(d.encode_state(s)), f.state_label(d.encode_state(t))
                assert transition_probability(f, fs, a, ft) == transition_probability(d, s, a, t)


@settings(max_examples=60, deadline=None)
@given(SEEDS)
def test_parser_round_trip(seed):
    d = _domain(seed)
    again = parse_domain(render_domain(d))
    assert again == d
    assert render_domain(again) == render_domain(d)


@settings(max_examples=15, deadline=None)
@given(SEEDS)
def test_sampling_consistency(seed):
    rng = random.Random(seed)
    d = _domain(seed)
    s = rng.choice(_states(d))
    a = rng.choice(d.actions)
    n = 3000
    draws = Counter(frozenset(x) if not isinstance(d, FlatDomain) else x
                    for x in (sample_next_state(d, s, a, rng) for _ in range(n)))
    for t in _states(d):
        p = float(transition_probability(d, s, a, t))
        key = frozenset(t) if not isinstance(d, FlatDomain) else t
        assert abs(draws[key] / n - p) <= 4 * math.sqrt(p * (1 - p) / n) + 1e-12
