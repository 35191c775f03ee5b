from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from helpers import brute_leaves, brute_probs, example1, example2, example3
from ringmix.chain import RelatedRsSet
from ringmix.errors import BlowUpError, InfeasibleError
from ringmix.oracle import build_tree, forced_spent, pr_in_rs, pr_spent


def test_example3_level_counts():
    tree = build_tree(example3())
    assert len(build_tree(example3().prefix(2)).leaves) == 4
    assert len(tree.leaves) == 8
    assert tree.level_sizes == (2, 4, 8)
    # leaves of the two-ring prefix in which r2 spends c3
    assert build_tree(example3().prefix(2)).count_spending("c3", 2) == 2


def test_example3_probabilities():
    t2 = build_tree(example3().prefix(2))
    t3 = build_tree(example3())
    assert pr_in_rs(t2, "c3", 2) == Fraction(1, 2)
    assert pr_in_rs(t3, "c3", 2) == Fraction(1, 2)
    assert pr_spent(t2, "c1") == Fraction(3, 4)
    assert pr_spent(build_tree(example3().prefix(1)), "c1") == Fraction(1, 2)
    assert pr_spent(t3, "c9") == 0
    assert [pr_spent(t3, c) for c in ("c1", "c2", "c3", "c4")] == [
        Fraction(7, 8), Fraction(7, 8), Fraction(3, 4), Fraction(1, 2)]


def test_pr_in_rs_rejects_non_members():
    with pytest.raises(KeyError):
        pr_in_rs(build_tree(example3()), "c4", 1)


def test_single_ring_single_coin():
    tree = build_tree(RelatedRsSet.from_members([["c1"]]))
    assert tree.leaves == (("c1",),)


def test_example1_forces_c3_in_r1():
    assert ("c3", 1) in forced_spent(build_tree(example1()))


def test_disjoint_rings_force_nothing():
    rs = RelatedRsSet.from_members([["a", "b"], ["c", "d"], ["e", "f", "g"]])
    assert forced_spent(build_tree(rs)) == set()


def test_example2_first_solution_forces_c2():
    rs = example2().append({"c1", "c3"}, "tau1")
    tree = build_tree(rs)
    assert len(tree.leaves) == 2
    assert ("c2", 1) in forced_spent(tree)
    assert len(build_tree(example2()).leaves) == 3


def test_infeasible_set():
    rs = RelatedRsSet.from_members([["c1"], ["c1"]])
    with pytest.raises(InfeasibleError):
        build_tree(rs)


def test_leaf_cap_blow_up():
    rs = RelatedRsSet.from_members([[f"c{i}" for i in range(12)]] * 8)
    with pytest.raises(BlowUpError):
        build_tree(rs, leaf_cap=10**4)
    with pytest.raises(ValueError):
        build_tree(example3(), leaf_cap=0)


ring_sets = st.lists(
    st.sets(st.sampled_from([f"c{i}" for i in range(7)]), min_size=1, max_size=4),
    min_size=1, max_size=5,
).map(RelatedRsSet.from_members)


@settings(max_examples=200, deadline=None)
@given(ring_sets)
def test_tree_matches_cartesian_enumeration(rs):
    leaves = brute_leaves(rs)
    if not leaves:
        with pytest.raises(InfeasibleError):
            build_tree(rs)
        return
    tree = build_tree(rs)
    assert sorted(tree.leaves) == sorted(leaves)
    joint, spent = brute_probs(rs)
    assert tree.probabilities.pr_in_rs == joint
    assert {c: p for c, p in tree.probabilities.pr_spent.items()} == spent


@settings(max_examples=200, deadline=None)
@given(ring_sets)
def test_each_ring_spends_exactly_one_coin(rs):
    try:
        tree = build_tree(rs)
    except InfeasibleError:
        return
    for k, ring in enumerate(rs, start=1):
        assert sum(pr_in_rs(tree, c, k) for c in ring.members) == 1
    assert all(0 <= p <= 1 for p in tree.probabilities.pr_spent.values())
    assert sum(tree.probabilities.pr_spent.values()) == len(rs)
