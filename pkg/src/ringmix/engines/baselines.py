"""Reference engines: greedy, random, and the exhaustive optimum."""
from __future__ import annotations

import time

from ..errors import NoEligibleRingError, PreconditionError
from .game import make_rng
from .instance import ProblemInstance, SelectionResult, make_result

__all__ = ["greedy", "random_baseline", "exhaustive", "EXHAUSTIVE_CAP"]

EXHAUSTIVE_CAP = 20


class _Growing:
    """Running totals of a ring grown from the target module."""

    def __init__(self, instance: ProblemInstance):
        self.instance = instance
        t = instance.target_module
        self.ids = [t.module_id]
        self.size, self.degree = t.size, t.degree
        self.pr_max, self.pr_min = t.pr_max, t.pr_min
        self.txs = set(t.txs)

    def admits_with(self, m) -> bool:
        return self.instance.admits(
            self.size + m.size, self.degree + m.degree,
            max(self.pr_max, m.pr_max), min(self.pr_min, m.pr_min),
        )

    def admissible(self) -> bool:
        return self.instance.admits(self.size, self.degree, self.pr_max, self.pr_min)

    def add(self, m):
        self.ids.append(m.module_id)
        self.size += m.size
        self.degree += m.degree
        self.pr_max = max(self.pr_max, m.pr_max)
        self.pr_min = min(self.pr_min, m.pr_min)
        self.txs |= m.txs


def greedy(instance: ProblemInstance) -> SelectionResult:
    start = time.perf_counter()
    ring = _Growing(instance)
    pool = [m for m in instance.modules if m.module_id != instance.target]
    while True:
        best, best_gain = None, -1
        for m in pool:
            if not ring.admits_with(m):
                continue
            gain = len(m.txs - ring.txs)
            if gain > best_gain:
                best, best_gain = m, gain
        # zero-gain additions only help while the ring is still too small to be valid
        if best is None or (best_gain == 0 and ring.admissible()):
            break
        ring.add(best)
        pool.remove(best)
    return make_result(instance, ring.ids, "greedy", time.perf_counter() - start)


def random_baseline(instance: ProblemInstance, seed: int = 0) -> SelectionResult:
    start = time.perf_counter()
    rng = make_rng(seed)
    ring = _Growing(instance)
    pool = [m for m in instance.modules if m.module_id != instance.target]
    while True:
        options = [m for m in pool if ring.admits_with(m)]
        if not options:
            break
        pick = options[int(rng.integers(len(options)))]
        ring.add(pick)
        pool.remove(pick)
    return make_result(instance, ring.ids, "random", time.perf_counter() - start)


def exhaustive(instance: ProblemInstance, cap: int = EXHAUSTIVE_CAP) -> SelectionResult:
    """Maximum-diversity admissible ring containing the target, by enumeration.

    Adding a module never loosens the budget or the fast check (the degree
    grows and the probability window widens), so a branch that fails either
    is cut; only rings still below two coins are extended regardless.
    """
    if len(instance.modules) > cap:
        raise PreconditionError(f"exhaustive search is capped at {cap} modules")
    start = time.perf_counter()
    t = instance.target_module
    others = [m for m in instance.modules if m.module_id != t.module_id]
    best = [-1, None]

    def visit(k, ids, size, degree, pr_max, pr_min, txs):
        if size > instance.budget:
            return
        ok = instance.admits(size, degree, pr_max, pr_min)
        if not ok and size >= 2 and degree >= 1:
            return
        if ok:
            key = tuple(sorted(ids))
            if len(txs) > best[0] or (len(txs) == best[0] and key < best[1]):
                best[0], best[1] = len(txs), key
        for nxt in range(k, len(others)):
            m = others[nxt]
            visit(nxt + 1, ids + [m.module_id], size + m.size, degree + m.degree,
                  max(pr_max, m.pr_max), min(pr_min, m.pr_min), txs | m.txs)

    visit(0, [t.module_id], t.size, t.degree, t.pr_max, t.pr_min, frozenset(t.txs))
    if best[1] is None:
        raise NoEligibleRingError("no eligible ring exists for this target, budget and epsilon")
    return make_result(instance, best[1], "exhaustive", time.perf_counter() - start)
