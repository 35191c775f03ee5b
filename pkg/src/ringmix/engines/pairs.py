"""(i, j) pair windows shared by the progressive and game engines.

Module i fixes the largest spent probability of the composed ring and module
j the smallest. Only modules whose probabilities fall inside that window may
join, so the composition's extremes are known in advance and eligibility
reduces to a size budget plus a degree cap.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .instance import ProblemInstance

__all__ = ["PairWindow", "pair_windows"]


@dataclass(frozen=True)
class PairWindow:
    index: int
    high: str  # module fixing pr_max
    low: str  # module fixing pr_min
    core: tuple  # module ids of the mandatory core, sorted
    pr_max: Fraction
    pr_min: Fraction
    cap: int | None  # None = unbounded
    core_size: int
    core_degree: int
    core_txs: frozenset
    candidates: tuple  # ModuleSummary, sorted by id

    def fits(self, size: int, degree: int, budget: int) -> bool:
        return size <= budget and (self.cap is None or degree <= self.cap)


def _ranks(values) -> dict:
    order = sorted(set(values))
    return {v: k for k, v in enumerate(order)}


def pair_windows(instance: ProblemInstance) -> Iterator[PairWindow]:
    mods = instance.modules
    n = len(mods)
    # integer ranks make the many window comparisons cheap and still exact
    hi_rank = _ranks(m.pr_max for m in mods)
    lo_rank = _ranks(m.pr_min for m in mods)
    top = [hi_rank[m.pr_max] for m in mods]
    bottom = [lo_rank[m.pr_min] for m in mods]
    t = next(k for k, m in enumerate(mods) if m.module_id == instance.target)
    for a, hi in enumerate(mods):
        if top[a] < top[t]:
            continue
        for b, lo in enumerate(mods):
            if top[b] > top[a] or bottom[b] > bottom[t] or bottom[b] > bottom[a]:
                continue
            core_idx = sorted({a, b, t})
            size = sum(mods[k].size for k in core_idx)
            degree = sum(mods[k].degree for k in core_idx)
            if not instance.admits(size, degree, hi.pr_max, lo.pr_min):
                continue
            txs = frozenset().union(*(mods[k].txs for k in core_idx))
            cands = tuple(
                mods[k] for k in range(n)
                if k not in core_idx and bottom[k] >= bottom[b] and top[k] <= top[a]
            )
            yield PairWindow(
                a * n + b, hi.module_id, lo.module_id, tuple(mods[k].module_id for k in core_idx),
                hi.pr_max, lo.pr_min, instance.cap(hi.pr_max, lo.pr_min),
                size, degree, txs, cands,
            )
