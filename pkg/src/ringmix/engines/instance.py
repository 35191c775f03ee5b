"""Problem instances, results, and the eligibility rule shared by all engines."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from ..ci import Epsilon, degree_cap, new_ring_ratio, ratio_to_epsilon
from ..errors import InvariantViolation, PreconditionError
from ..modules import ModuleSummary, o_bounds

__all__ = ["ProblemInstance", "Composition", "SelectionResult", "make_result"]


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    modules: tuple
    target: str
    budget: int
    epsilon: Epsilon
    o_max: int = field(init=False)
    o_min: int = field(init=False)
    by_id: dict = field(init=False, repr=False)
    _caps: dict = field(init=False, repr=False)

    def __post_init__(self):
        mods = tuple(sorted(self.modules, key=lambda m: m.module_id))
        object.__setattr__(self, "modules", mods)
        object.__setattr__(self, "epsilon", Epsilon.of(self.epsilon))
        by_id = {m.module_id: m for m in mods}
        if len(by_id) != len(mods):
            raise InvariantViolation("duplicate module ids")
        seen = set()
        for m in mods:
            if not seen.isdisjoint(m.coins):
                raise InvariantViolation(f"module {m.module_id} overlaps another module")
            seen |= m.coins
        if self.target not in by_id:
            raise PreconditionError(f"target module {self.target} is not in the instance")
        if self.budget < max(by_id[self.target].size, 2):
            raise PreconditionError(
                f"budget {self.budget} is below max(|target|, 2) = {max(by_id[self.target].size, 2)}"
            )
        object.__setattr__(self, "by_id", by_id)
        o_max, o_min = o_bounds(mods)
        object.__setattr__(self, "o_max", o_max)
        object.__setattr__(self, "o_min", o_min)
        object.__setattr__(self, "_caps", {})

    @property
    def target_module(self) -> ModuleSummary:
        return self.by_id[self.target]

    @property
    def max_module_size(self) -> int:
        return max(m.size for m in self.modules)

    def cap(self, pr_max, pr_min) -> int | None:
        key = (pr_max, pr_min)
        if key not in self._caps:
            self._caps[key] = degree_cap(pr_max, pr_min, self.epsilon)
        return self._caps[key]

    def admits(self, size: int, degree: int, pr_max, pr_min) -> bool:
        """Budget, non-trivial ring, and the fast CI-keeping inequality."""
        if size > self.budget or size < 2 or degree < 1:
            return False
        cap = self.cap(pr_max, pr_min)
        return cap is None or degree <= cap

    def compose(self, ids: Iterable[str]) -> "Composition":
        return Composition.of(self.by_id[i] for i in ids)

    def is_eligible(self, ids: Iterable[str]) -> bool:
        c = self.compose(ids)
        return self.admits(c.size, c.degree, c.pr_max, c.pr_min)


@dataclass(frozen=True)
class Composition:
    ids: frozenset
    size: int
    degree: int
    txs: frozenset
    pr_max: Fraction
    pr_min: Fraction

    @classmethod
    def of(cls, modules: Iterable[ModuleSummary]) -> "Composition":
        modules = list(modules)
        txs = set()
        for m in modules:
            txs |= m.txs
        return cls(
            frozenset(m.module_id for m in modules),
            sum(m.size for m in modules),
            sum(m.degree for m in modules),
            frozenset(txs),
            max((m.pr_max for m in modules), default=Fraction(0)),
            min((m.pr_min for m in modules), default=Fraction(0)),
        )

    @property
    def diversity(self) -> int:
        return len(self.txs)


@dataclass(frozen=True)
class SelectionResult:
    chosen: frozenset
    diversity: int
    size: int
    degree: int
    eligible: bool
    engine: str
    elapsed: float = 0.0
    rounds: int | None = None
    pr_max: Fraction = Fraction(0)
    pr_min: Fraction = Fraction(0)
    epsilon_required: float = 0.0

    def coins(self, instance: ProblemInstance) -> list[str]:
        return sorted(c for mid in self.chosen for c in instance.by_id[mid].coins)


def make_result(instance: ProblemInstance, ids: Iterable[str], engine: str, elapsed: float = 0.0,
                rounds: int | None = None) -> SelectionResult:
    ids = frozenset(ids) | {instance.target}
    c = instance.compose(ids)
    eligible = instance.admits(c.size, c.degree, c.pr_max, c.pr_min)
    required = ratio_to_epsilon(new_ring_ratio(c.pr_max, c.pr_min, c.degree)) if c.degree >= 1 else float("inf")
    return SelectionResult(
        ids, c.diversity, c.size, c.degree, eligible, engine, elapsed, rounds,
        c.pr_max, c.pr_min, required,
    )
