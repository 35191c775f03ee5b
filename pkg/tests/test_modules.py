from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from helpers import brute_leaves, example2, example3, nested_example, rng_for
from ringmix.chain import RelatedRsSet
from ringmix.datagen import random_ds_history
from ringmix.errors import InvariantViolation, NotDisjointSupersetError
from ringmix.modules import (
    FRESH_COIN, SUPER_RS, check_ds, extract_modules, fresh_coin_module, module_union_degree,
    o_bounds, super_rs, union_diversity,
)
from ringmix.oracle import build_tree

TX = {f"c{i}": f"t{i}" for i in range(1, 9)}


def test_check_ds_examples():
    assert check_ds(example3()).is_ds
    diag = check_ds(example2())
    assert not diag and diag.violating_pair == ("r1", "r2")
    assert check_ds(RelatedRsSet()).is_ds


def test_ordered_check_rejects_a_later_subset():
    rs = RelatedRsSet.from_members([["c1", "c2", "c3"], ["c1", "c2"]])
    assert not check_ds(rs)
    assert check_ds(rs, ordered=False)


def test_super_rs_examples():
    assert super_rs(nested_example()) == ["r3", "r4"]
    assert super_rs(RelatedRsSet.from_members([["a"]])) == ["r1"]
    assert super_rs(example3()) == ["r3"]
    with pytest.raises(NotDisjointSupersetError):
        super_rs(example2())


def test_example3_module():
    mods = extract_modules(example3(), {"c1", "c2", "c3", "c4"}, TX)
    assert len(mods) == 1
    m = mods[0]
    assert (m.kind, m.size, m.pr_max, m.pr_min) == (SUPER_RS, 4, Fraction(7, 8), Fraction(1, 2))
    # ns counts r1, r2 and r3 itself; the degree a containing ring gains is then 4 - 3
    assert (m.ns, m.degree) == (3, 1)
    grown = example3().append({"c1", "c2", "c3", "c4", "c5"})
    assert len(brute_leaves(grown)) // len(brute_leaves(example3())) == m.degree + 1


def test_fresh_universe_gives_fresh_modules():
    mods = extract_modules(RelatedRsSet(), {"c1", "c2", "c3", "c4"}, TX)
    assert [m.module_id for m in mods] == ["c1", "c2", "c3", "c4"]
    assert all(m.kind == FRESH_COIN and m.degree == 1 and m.dive == 1 and m.pr_max == 0 for m in mods)


def test_union_degree_and_diversity():
    r3 = extract_modules(example3(), {"c1", "c2", "c3", "c4"}, TX)[0]
    c5 = fresh_coin_module("c5", "t5")
    # direct count for the ring {c1..c5}: 5 coins minus the 3 rings inside it
    assert module_union_degree([r3, c5]) == 2
    assert module_union_degree([c5]) == 1
    assert module_union_degree([]) == 0
    with pytest.raises(InvariantViolation):
        module_union_degree([c5, c5])


def test_union_diversity_examples():
    a = fresh_coin_module("a", "t1")
    b = fresh_coin_module("b", "t2")
    c = fresh_coin_module("c", "t2")
    d = fresh_coin_module("d", "t3")
    assert union_diversity([a, b, c, d]) == 3
    assert union_diversity([a, b, d]) == a.dive + b.dive + d.dive


def test_module_invariants_are_enforced():
    with pytest.raises(InvariantViolation):
        fresh_coin_module("a", "t1").__class__(
            "m", SUPER_RS, frozenset({"a", "b"}), frozenset({"t1"}), 1, 2, Fraction(0), Fraction(0))
    with pytest.raises(InvariantViolation):
        extract_modules(example3(), {"c1", "c2"}, TX)


def test_o_bounds():
    mods = [fresh_coin_module("a", "t1"), fresh_coin_module("b", "t1"), fresh_coin_module("c", "t2")]
    assert o_bounds(mods) == (2, 1)
    assert o_bounds([]) == (0, 0)


def _history(seed):
    rs, universe, coin_tx = random_ds_history(rng_for(seed), max_rings=8, max_coins=12, max_leaves=500)
    return rs, universe, coin_tx, extract_modules(rs, universe, coin_tx)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6))
def test_modules_partition_the_universe(seed):
    rs, universe, coin_tx, mods = _history(seed)
    covered = [c for m in mods for c in m.coins]
    assert sorted(covered) == sorted(universe)
    assert all(m.degree >= 0 for m in mods)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.data())
def test_union_degree_is_the_leaf_multiplier(seed, data):
    rs, universe, coin_tx, mods = _history(seed)
    picked = data.draw(st.lists(st.sampled_from(mods), min_size=1, max_size=4, unique_by=lambda m: m.module_id))
    ring = frozenset().union(*(m.coins for m in picked))
    degree = module_union_degree(picked)
    assert degree == len(ring) - sum(1 for r in rs if r.members <= ring)
    before = len(build_tree(rs).leaves)
    after = len(brute_leaves(rs.append(ring)))
    assert after == before * degree


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.data())
def test_union_diversity_sandwich(seed, data):
    rs, universe, coin_tx, mods = _history(seed)
    picked = data.draw(st.lists(st.sampled_from(mods), min_size=1, max_size=5, unique_by=lambda m: m.module_id))
    div = union_diversity(picked)
    assert max(m.dive for m in picked) <= div <= sum(m.dive for m in picked)
