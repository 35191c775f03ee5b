"""0-1 knapsack by value scaling (FPTAS)."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

__all__ = ["KnapsackItem", "delta_kp"]


@dataclass(frozen=True)
class KnapsackItem:
    id: object
    weight: int
    value: Fraction

    def __post_init__(self):
        if self.weight < 1:
            raise ValueError(f"item {self.id}: weight must be at least 1")
        if self.value < 0:
            raise ValueError(f"item {self.id}: value must be non-negative")


def delta_kp(items: Sequence[KnapsackItem], capacity: int, delta: float) -> frozenset:
    """Item ids with total weight <= capacity and value >= (1 - delta) * optimum.

    Values are scaled down by K = delta * v_max / n and floored; a DP over
    the scaled value axis then finds the lightest subset for every value.
    """
    if capacity < 0:
        raise ValueError("capacity must be non-negative")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    fitting = [it for it in items if it.weight <= capacity and it.value > 0]
    if not fitting:
        return frozenset()
    v_max = max(it.value for it in fitting)
    scale = Fraction(delta) * v_max / len(fitting)
    scaled = [int(it.value / scale) for it in fitting]
    total = sum(scaled)

    unreachable = np.iinfo(np.int64).max // 2
    lightest = np.full(total + 1, unreachable, dtype=np.int64)
    lightest[0] = 0
    took = np.zeros((len(fitting), total + 1), dtype=bool)
    for k, (it, v) in enumerate(zip(fitting, scaled)):
        if v == 0:
            continue
        with_item = lightest[: total + 1 - v] + it.weight
        better = with_item < lightest[v:]
        took[k, v:] = better
        lightest[v:] = np.where(better, with_item, lightest[v:])

    best = int(np.flatnonzero(lightest <= capacity).max())
    chosen = []
    for k in range(len(fitting) - 1, -1, -1):
        if took[k, best]:
            chosen.append(fitting[k].id)
            best -= scaled[k]
    return frozenset(chosen)
