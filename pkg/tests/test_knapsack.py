import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ringmix.engines.knapsack import KnapsackItem, delta_kp


def brute_value(items, capacity):
    best = Fraction(0)
    for r in range(len(items) + 1):
        for combo in itertools.combinations(items, r):
            if sum(it.weight for it in combo) <= capacity:
                best = max(best, sum((it.value for it in combo), Fraction(0)))
    return best


def value_of(items, ids):
    return sum((it.value for it in items if it.id in ids), Fraction(0))


def test_three_item_example():
    items = [KnapsackItem(1, 2, Fraction(3)), KnapsackItem(2, 3, Fraction(4)), KnapsackItem(3, 4, Fraction(5))]
    picked = delta_kp(items, 5, 0.1)
    assert value_of(items, picked) >= Fraction(9, 10) * 7
    assert picked == {1, 2}


def test_trivial_capacities():
    items = [KnapsackItem("a", 2, Fraction(3))]
    assert delta_kp(items, 0, 0.1) == frozenset()
    assert delta_kp(items, 2, 0.1) == {"a"}
    assert delta_kp([], 10, 0.5) == frozenset()


def test_argument_validation():
    with pytest.raises(ValueError):
        delta_kp([], -1, 0.1)
    with pytest.raises(ValueError):
        delta_kp([], 1, 1.0)
    with pytest.raises(ValueError):
        KnapsackItem("x", 0, Fraction(1))
    with pytest.raises(ValueError):
        KnapsackItem("x", 1, Fraction(-1))


items_strategy = st.lists(
    st.tuples(st.integers(1, 12), st.fractions(0, 20, max_denominator=7)), min_size=0, max_size=9,
).map(lambda xs: [KnapsackItem(k, w, v) for k, (w, v) in enumerate(xs)])


@settings(max_examples=300, deadline=None)
@given(items_strategy, st.integers(0, 40), st.sampled_from([0.05, 0.1, 0.3, 0.7]))
def test_value_within_one_minus_delta_of_optimum(items, capacity, delta):
    picked = delta_kp(items, capacity, delta)
    assert sum(it.weight for it in items if it.id in picked) <= capacity
    assert value_of(items, picked) >= (1 - Fraction(delta)) * brute_value(items, capacity)
