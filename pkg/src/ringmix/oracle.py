"""Brute-force ground truth: enumerate every valid spent-coin assignment.

Each leaf of the permutation tree is a tuple giving, for ring k (1-based,
timestamp order), the coin it spends. Probabilities are leaf frequencies,
kept as exact fractions.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

from .chain import RelatedRsSet
from .errors import BlowUpError, InfeasibleError

__all__ = [
    "DEFAULT_LEAF_CAP",
    "PermutationTree",
    "ExactProbabilities",
    "build_tree",
    "pr_in_rs",
    "pr_spent",
    "forced_spent",
]

DEFAULT_LEAF_CAP = 10**6


@dataclass(frozen=True)
class ExactProbabilities:
    pr_in_rs: dict  # (coin_id, rs order) -> Fraction
    pr_spent: dict  # coin_id -> Fraction


@dataclass(frozen=True, eq=False)
class PermutationTree:
    rs_set: RelatedRsSet
    leaves: tuple

    @property
    def depth(self) -> int:
        return len(self.rs_set)

    def nodes(self, depth: int) -> set:
        """Distinct valid prefixes of length `depth` (the node set at that level)."""
        return {leaf[:depth] for leaf in self.leaves}

    @cached_property
    def level_sizes(self) -> tuple:
        return tuple(len(self.nodes(j)) for j in range(1, self.depth + 1))

    def count_spending(self, coin: str, rs_order: int) -> int:
        """Number of leaves in which ring `rs_order` spends `coin`."""
        return self._counts[rs_order - 1][coin]

    @cached_property
    def _counts(self):
        counts = [Counter() for _ in range(self.depth)]
        for leaf in self.leaves:
            for k, coin in enumerate(leaf):
                counts[k][coin] += 1
        return counts

    @cached_property
    def probabilities(self) -> ExactProbabilities:
        total = len(self.leaves)
        joint, spent = {}, {}
        for k, rs in enumerate(self.rs_set, start=1):
            for coin in rs.members:
                p = Fraction(self._counts[k - 1][coin], total)
                joint[(coin, k)] = p
                spent[coin] = spent.get(coin, Fraction(0)) + p
        return ExactProbabilities(joint, spent)


def build_tree(rs_set: RelatedRsSet, leaf_cap: int = DEFAULT_LEAF_CAP) -> PermutationTree:
    """Expand the tree one ring at a time, dropping branches with no free coin."""
    if leaf_cap < 1:
        raise ValueError("leaf_cap must be positive")
    frontier = [()]
    for rs in rs_set:
        ring = sorted(rs.members)
        grown = []
        for prefix in frontier:
            used = set(prefix)
            for coin in ring:
                if coin not in used:
                    grown.append(prefix + (coin,))
            if len(grown) > leaf_cap:
                raise BlowUpError(
                    f"permutation tree exceeds leaf cap {leaf_cap} at ring {rs.rs_id}"
                )
        if not grown:
            raise InfeasibleError(f"ring {rs.rs_id} has no coin left to spend in any branch")
        frontier = grown
    return PermutationTree(rs_set, tuple(frontier))


def pr_in_rs(tree: PermutationTree, coin: str, rs_order: int) -> Fraction:
    if coin not in tree.rs_set[rs_order].members:
        raise KeyError(f"coin {coin} is not a member of ring {rs_order}")
    return tree.probabilities.pr_in_rs[(coin, rs_order)]


def pr_spent(tree: PermutationTree, coin: str) -> Fraction:
    return tree.probabilities.pr_spent.get(coin, Fraction(0))


def forced_spent(tree: PermutationTree) -> set:
    """(coin, ring order) pairs that every valid assignment agrees on."""
    return {key for key, p in tree.probabilities.pr_in_rs.items() if p == 1}
