"""Progressive engine: knapsack over each pair window, greedy repair on overshoot."""
from __future__ import annotations

import time
from collections import Counter
from fractions import Fraction

from ..errors import NoEligibleRingError
from .instance import ProblemInstance, SelectionResult, make_result
from .knapsack import KnapsackItem, delta_kp
from .pairs import PairWindow, pair_windows

__all__ = ["progressive", "solve_window"]


def _repair(window: PairWindow, budget: int) -> tuple[list, set]:
    """Grow the core by best new-transactions-per-coin while everything fits."""
    chosen, txs = [], set(window.core_txs)
    size, degree = window.core_size, window.core_degree
    pool = list(window.candidates)
    while True:
        best, best_ratio = None, Fraction(0)
        for m in pool:
            if not window.fits(size + m.size, degree + m.degree, budget):
                continue
            ratio = Fraction(len(m.txs - txs), m.size)
            if ratio > best_ratio:
                best, best_ratio = m, ratio
        if best is None:
            return chosen, txs
        chosen.append(best.module_id)
        txs |= best.txs
        size += best.size
        degree += best.degree
        pool.remove(best)


def solve_window(window: PairWindow, budget: int, delta: float) -> tuple[list, int]:
    """Chosen extra module ids and the resulting diversity for one window."""
    cands = [m for m in window.candidates if m.degree >= 1]
    if not cands:
        return [], len(window.core_txs)
    per_tx = Counter(m.tx_of[c] for m in cands for c in m.coins)
    o_max = max(per_tx.values())
    items = [
        KnapsackItem(m.module_id, m.degree, Fraction(len(m.txs - window.core_txs), o_max))
        for m in cands
    ]
    if window.cap is None:
        capacity = sum(m.degree for m in cands)
    else:
        capacity = window.cap - window.core_degree
    picked = delta_kp(items, capacity, delta)
    by_id = {m.module_id: m for m in cands}
    size = window.core_size + sum(by_id[i].size for i in picked)
    if size > budget:
        chosen, txs = _repair(window, budget)
        return chosen, len(txs)
    txs = set(window.core_txs)
    for i in picked:
        txs |= by_id[i].txs
    return sorted(picked), len(txs)


def progressive(instance: ProblemInstance, delta: float = 0.1) -> SelectionResult:
    start = time.perf_counter()
    best_ids, best_div = None, -1
    for window in pair_windows(instance):
        extra, div = solve_window(window, instance.budget, delta)
        if div > best_div:
            best_ids, best_div = set(window.core) | set(extra), div
    if best_ids is None:
        raise NoEligibleRingError("no eligible ring exists for this target, budget and epsilon")
    return make_result(instance, best_ids, "progressive", time.perf_counter() - start)
