"""Disjoint-superset validation and module extraction.

A module is either a super ring (no later ring contains it) or a coin no
ring has used yet. Modules partition the coin universe and are the units
that selection engines combine into a new ring.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .chain import RelatedRsSet
from .ci import iterative_states
from .errors import InvariantViolation, NotDisjointSupersetError

__all__ = [
    "SUPER_RS",
    "FRESH_COIN",
    "DsDiagnostics",
    "ModuleSummary",
    "check_ds",
    "require_ds",
    "super_rs",
    "extract_modules",
    "fresh_coin_module",
    "module_union_degree",
    "union_diversity",
    "o_bounds",
]

SUPER_RS = "super-rs"
FRESH_COIN = "fresh-coin"


@dataclass(frozen=True)
class DsDiagnostics:
    is_ds: bool
    violating_pair: tuple | None = None

    def __bool__(self):
        return self.is_ds


def check_ds(rs_set: RelatedRsSet, ordered: bool = True) -> DsDiagnostics:
    """Every ring must be disjoint from, or contain, each earlier ring.

    With ordered=False the weaker pairwise reading (disjoint or nested in
    either direction) is checked instead.
    """
    rings = list(rs_set)
    for j, later in enumerate(rings):
        for earlier in rings[:j]:
            if earlier.members.isdisjoint(later.members) or earlier.members <= later.members:
                continue
            if not ordered and later.members <= earlier.members:
                continue
            return DsDiagnostics(False, (earlier.rs_id, later.rs_id))
    return DsDiagnostics(True)


def require_ds(rs_set: RelatedRsSet):
    diag = check_ds(rs_set)
    if not diag.is_ds:
        a, b = diag.violating_pair
        raise NotDisjointSupersetError(f"rings {a} and {b} overlap without nesting")


def super_rs(rs_set: RelatedRsSet) -> list[str]:
    require_ds(rs_set)
    rings = list(rs_set)
    return [
        rs.rs_id
        for i, rs in enumerate(rings)
        if not any(rs.members <= later.members for later in rings[i + 1:])
    ]


@dataclass(frozen=True)
class ModuleSummary:
    """Selection unit with the attributes the engines need.

    `ns` counts the rings whose members lie inside `coins` (the super ring
    included), so `degree` is exactly what the module adds to the branching
    factor of any ring that contains it.
    """

    module_id: str
    kind: str
    coins: frozenset
    txs: frozenset
    ns: int
    degree: int
    pr_max: Fraction
    pr_min: Fraction
    tx_of: Mapping = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self):
        if self.kind not in (SUPER_RS, FRESH_COIN):
            raise ValueError(f"unknown module kind {self.kind!r}")
        if not self.coins:
            raise InvariantViolation(f"module {self.module_id} has no coins")
        if self.degree != len(self.coins) - self.ns or self.degree < 0:
            raise InvariantViolation(f"module {self.module_id}: degree must equal size - ns")
        if not 1 <= len(self.txs) <= len(self.coins):
            raise InvariantViolation(f"module {self.module_id}: diversity out of range")
        if not 0 <= self.pr_min <= self.pr_max <= 1:
            raise InvariantViolation(f"module {self.module_id}: need 0 <= pr_min <= pr_max <= 1")
        if self.kind == FRESH_COIN and (
            self.ns != 0 or self.degree != 1 or self.pr_max != 0 or len(self.coins) != 1
        ):
            raise InvariantViolation(f"fresh module {self.module_id} has non-trivial attributes")

    @property
    def size(self) -> int:
        return len(self.coins)

    @property
    def dive(self) -> int:
        return len(self.txs)


def fresh_coin_module(coin: str, tx: str, module_id: str | None = None) -> ModuleSummary:
    return ModuleSummary(
        module_id or coin, FRESH_COIN, frozenset([coin]), frozenset([tx]),
        0, 1, Fraction(0), Fraction(0), {coin: tx},
    )


def extract_modules(rs_set: RelatedRsSet, universe: Iterable[str], coin_tx: Mapping[str, str]
                    ) -> list[ModuleSummary]:
    require_ds(rs_set)
    universe = frozenset(universe)
    used = rs_set.coins()
    if not used <= universe:
        raise InvariantViolation(f"ring member {sorted(used - universe)[0]} is outside the universe")
    missing = universe - coin_tx.keys()
    if missing:
        raise InvariantViolation(f"no source transaction for coin {sorted(missing)[0]}")

    state = iterative_states(rs_set)[-1]
    rings = [rs.members for rs in rs_set]
    supers = set(super_rs(rs_set))
    modules = []
    for rs in rs_set:
        if rs.rs_id not in supers:
            continue
        ns = sum(1 for r in rings if r <= rs.members)
        probs = [state.pr_spent(c) for c in rs.members]
        modules.append(ModuleSummary(
            rs.rs_id, SUPER_RS, rs.members,
            frozenset(coin_tx[c] for c in rs.members),
            ns, len(rs.members) - ns, max(probs), min(probs),
            {c: coin_tx[c] for c in rs.members},
        ))
    ring_ids = {m.module_id for m in modules}
    for coin in sorted(universe - used):
        mid = coin if coin not in ring_ids else f"coin:{coin}"
        modules.append(fresh_coin_module(coin, coin_tx[coin], mid))
    return modules


def _require_disjoint(selected: Iterable[ModuleSummary]) -> list[ModuleSummary]:
    selected = list(selected)
    seen = set()
    for m in selected:
        if not seen.isdisjoint(m.coins):
            raise InvariantViolation(f"module {m.module_id} overlaps another selected module")
        seen |= m.coins
    return selected


def module_union_degree(selected: Iterable[ModuleSummary]) -> int:
    return sum(m.degree for m in _require_disjoint(selected))


def union_diversity(selected: Iterable[ModuleSummary]) -> int:
    txs = set()
    for m in selected:
        txs |= m.txs
    return len(txs)


def o_bounds(modules: Iterable[ModuleSummary]) -> tuple[int, int]:
    """(max, min) number of pool coins that share one source transaction."""
    per_tx = Counter()
    for m in modules:
        per_tx.update(m.tx_of[c] for c in m.coins)
    if not per_tx:
        return 0, 0
    return max(per_tx.values()), min(per_tx.values())
