"""Coin indistinguishability checks.

Two routes to the same numbers: the permutation-tree oracle (any ring set)
and the iterative update for disjoint-superset sets, where appending a ring
of degree d moves each member's spent probability p to p + (1 - p)/d and
records the joint (1 - p)/d for the new ring.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from functools import lru_cache
from typing import Mapping

from .chain import RelatedRsSet, RingSignature
from .errors import InvariantViolation
from .oracle import DEFAULT_LEAF_CAP, build_tree

__all__ = [
    "COMPARISON_MARGIN",
    "Epsilon",
    "IterativeState",
    "CiReport",
    "creation_degrees",
    "update_iterative",
    "iterative_states",
    "conditional_pr",
    "check_ci_full",
    "check_cik",
    "check_cik_fast",
    "degree_cap",
    "new_ring_ratio",
    "ratio_to_epsilon",
    "parse_epsilon",
    "posterior_bound",
    "ring_ratios",
]

COMPARISON_MARGIN = Fraction(1, 10**12)


@lru_cache(maxsize=1024)
def _exp_fraction(value: float) -> Fraction:
    with localcontext() as ctx:
        ctx.prec = 40
        return Fraction(Decimal(value).exp())


@dataclass(frozen=True)
class Epsilon:
    """Privacy parameter with e^epsilon kept as a fraction.

    Built from a float, e^epsilon is a 40-digit approximation and comparisons
    get a 1e-12 relative margin in favour of the inequality. Built with
    `from_ratio(q)`, e^epsilon is exactly q.
    """

    value: float
    exp: Fraction
    exact: bool = False
    effective: Fraction = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.value < 0 or self.exp < 1:
            raise ValueError("epsilon must be non-negative")
        eff = self.exp if self.exact else self.exp * (1 + COMPARISON_MARGIN)
        object.__setattr__(self, "effective", eff)

    @classmethod
    def of(cls, epsilon) -> "Epsilon":
        if isinstance(epsilon, Epsilon):
            return epsilon
        value = float(epsilon)
        if not math.isfinite(value):
            raise ValueError("epsilon must be finite")
        if value == 0:
            return cls(0.0, Fraction(1), exact=True)
        return cls(value, _exp_fraction(value))

    @classmethod
    def from_ratio(cls, ratio) -> "Epsilon":
        ratio = Fraction(ratio)
        return cls(ratio_to_epsilon(ratio), ratio, exact=True)

    def allows(self, small, large) -> bool:
        """True when e^epsilon * small >= large."""
        return self.effective * small >= large

    def __str__(self):
        if self.exact and self.value:
            return f"ln({self.exp})"
        return repr(self.value)


_LN = re.compile(r"^\s*ln\s*(?:\(\s*([^()]+?)\s*\)|:\s*(\S+))\s*$")


def parse_epsilon(text) -> Epsilon:
    """Accept a float (`1.8`) or an exact log ratio (`ln(7)`, `ln:7`, `ln(8/3)`)."""
    if isinstance(text, (int, float, Epsilon)):
        return Epsilon.of(text)
    m = _LN.match(str(text))
    try:
        if m:
            return Epsilon.from_ratio(Fraction(m.group(1) or m.group(2)))
        return Epsilon.of(float(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad epsilon {text!r}: {exc}") from None


def ratio_to_epsilon(ratio) -> float:
    if ratio is None:
        return math.inf
    ratio = Fraction(ratio)
    return max(0.0, math.log(ratio.numerator) - math.log(ratio.denominator))


@dataclass(frozen=True)
class IterativeState:
    pr: Mapping = field(default_factory=dict)  # coin -> Fraction
    joint: Mapping = field(default_factory=dict)  # (rs order, coin) -> Fraction
    rings: tuple = ()

    def pr_spent(self, coin) -> Fraction:
        return self.pr.get(coin, Fraction(0))

    def __len__(self):
        return len(self.rings)


def creation_degrees(rs_set: RelatedRsSet) -> list[int]:
    """|r_i| minus the number of earlier rings contained in r_i."""
    rings = [rs.members for rs in rs_set]
    return [
        len(r) - sum(1 for earlier in rings[:i] if earlier <= r)
        for i, r in enumerate(rings)
    ]


def update_iterative(state: IterativeState, rs, degree: int) -> IterativeState:
    if degree < 1:
        raise ValueError(f"ring degree must be at least 1, got {degree}")
    members = rs.members if isinstance(rs, RingSignature) else frozenset(rs)
    order = len(state.rings) + 1
    pr = dict(state.pr)
    joint = dict(state.joint)
    for coin in members:
        before = pr.get(coin, Fraction(0))
        share = (1 - before) / degree
        joint[(order, coin)] = share
        pr[coin] = before + share
    return IterativeState(pr, joint, state.rings + (members,))


def iterative_states(rs_set: RelatedRsSet) -> list[IterativeState]:
    """States after 0, 1, ..., m rings; the caller guarantees DS order."""
    states = [IterativeState()]
    for rs, d in zip(rs_set, creation_degrees(rs_set)):
        states.append(update_iterative(states[-1], rs, d))
    return states


def conditional_pr(state: IterativeState, rs_order: int, coin) -> Fraction:
    """Pr_i(r_j | c) as joint over marginal."""
    if not 1 <= rs_order <= len(state.rings) or coin not in state.rings[rs_order - 1]:
        raise KeyError(f"coin {coin} is not in ring {rs_order}")
    marginal = state.pr_spent(coin)
    if marginal == 0:
        raise InvariantViolation(f"coin {coin} of ring {rs_order} has zero spent probability")
    return state.joint[(rs_order, coin)] / marginal


@dataclass(frozen=True)
class CiReport:
    epsilon_required: float
    ratio: Fraction | None  # None means unbounded
    satisfied: bool
    worst_pair: tuple

    @classmethod
    def from_conditionals(cls, conditionals: Mapping, epsilon) -> "CiReport":
        eps = Epsilon.of(epsilon)
        coins = sorted(conditionals)
        hi = max(coins, key=lambda c: conditionals[c])
        lo = min(coins, key=lambda c: conditionals[c])
        top, bottom = conditionals[hi], conditionals[lo]
        ratio = None if bottom == 0 else top / bottom
        return cls(ratio_to_epsilon(ratio), ratio, eps.allows(bottom, top), (hi, lo))


def _oracle_conditionals(rs_set: RelatedRsSet, leaf_cap: int) -> list[dict]:
    probs = build_tree(rs_set, leaf_cap).probabilities
    out = []
    for k, rs in enumerate(rs_set, start=1):
        conds = {}
        for coin in rs.members:
            marginal = probs.pr_spent[coin]
            if marginal == 0:
                raise InvariantViolation(f"coin {coin} of ring {rs.rs_id} is never spent")
            conds[coin] = probs.pr_in_rs[(coin, k)] / marginal
        out.append(conds)
    return out


def check_ci_full(rs_set: RelatedRsSet, rs_order: int, epsilon, leaf_cap: int = DEFAULT_LEAF_CAP,
                  method: str = "oracle") -> CiReport:
    """Max pairwise conditional ratio of one ring against the whole set."""
    rs = rs_set[rs_order]
    if method == "oracle":
        conds = _oracle_conditionals(rs_set, leaf_cap)[rs_order - 1]
    elif method == "iterative":
        from .modules import require_ds
        require_ds(rs_set)
        state = iterative_states(rs_set)[-1]
        conds = {c: conditional_pr(state, rs_order, c) for c in rs.members}
    else:
        raise ValueError(f"unknown method {method!r}")
    return CiReport.from_conditionals(conds, epsilon)


def check_cik(rs_set: RelatedRsSet, new_rs, epsilon, leaf_cap: int = DEFAULT_LEAF_CAP) -> bool:
    """Append `new_rs` and require every ring of the result to stay epsilon-CI."""
    members = new_rs.members if isinstance(new_rs, RingSignature) else frozenset(new_rs)
    extended = rs_set.append(members, getattr(new_rs, "rs_id", None))
    eps = Epsilon.of(epsilon)
    return all(
        CiReport.from_conditionals(conds, eps).satisfied
        for conds in _oracle_conditionals(extended, leaf_cap)
    )


def _ring_factor(p: Fraction, degree: int) -> Fraction:
    # Pr(new ring | c) for a member whose spent probability was p beforehand
    return (1 - p) / ((degree - 1) * p + 1)


def _check_extremes(pr_max, pr_min):
    if not 0 <= pr_min <= pr_max <= 1:
        raise ValueError(f"need 0 <= pr_min <= pr_max <= 1, got {pr_min}, {pr_max}")


def check_cik_fast(pr_max, pr_min, degree: int, epsilon) -> bool:
    """O(1) check of a superset-composed ring from its members' extreme probabilities."""
    pr_max, pr_min = Fraction(pr_max), Fraction(pr_min)
    _check_extremes(pr_max, pr_min)
    if degree < 1:
        raise ValueError("degree must be at least 1")
    eps = Epsilon.of(epsilon)
    return eps.allows(_ring_factor(pr_max, degree), _ring_factor(pr_min, degree))


def new_ring_ratio(pr_max, pr_min, degree: int) -> Fraction | None:
    """Largest conditional ratio inside a freshly appended composed ring."""
    low = _ring_factor(Fraction(pr_max), degree)
    if low == 0:
        return None
    return _ring_factor(Fraction(pr_min), degree) / low


def degree_cap(pr_max, pr_min, epsilon) -> int | None:
    """Largest degree passing check_cik_fast for these extremes; None when unbounded."""
    pr_max, pr_min = Fraction(pr_max), Fraction(pr_min)
    _check_extremes(pr_max, pr_min)
    e = Epsilon.of(epsilon).effective
    x = e * pr_min * (1 - pr_max) - pr_max * (1 - pr_min)
    if x >= 0:
        return None
    y = (e - 1) * (1 - pr_max) * (pr_min - 1)
    return int(y // x)


def posterior_bound(prior: Mapping, rs, epsilon, coin) -> Fraction:
    members = rs.members if isinstance(rs, RingSignature) else frozenset(rs)
    if coin not in members:
        raise KeyError(f"coin {coin} is not in the ring")
    weights = {c: Fraction(prior.get(c, 0)) for c in members}
    if any(w < 0 for w in weights.values()):
        raise ValueError("prior weights must be non-negative")
    total = sum(weights.values())
    if total == 0:
        raise ValueError("prior is zero on every ring member")
    return min(Fraction(1), Epsilon.of(epsilon).exp * weights[coin] / total)


def ring_ratios(rs_set: RelatedRsSet, leaf_cap: int = DEFAULT_LEAF_CAP) -> list:
    """Oracle max conditional ratio of every ring (None = unbounded)."""
    return [CiReport.from_conditionals(c, 0).ratio for c in _oracle_conditionals(rs_set, leaf_cap)]
