"""Block batching and the spend loop: extract modules, select, guard, commit."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping

from .chain import Block, ChainTrace, RelatedRsSet, RingSignature
from .ci import iterative_states
from .engines import ProblemInstance, SelectionResult, make_result, run_engine
from .errors import (
    BatchSpanError,
    FreshGuardError,
    InvariantViolation,
    NoEligibleRingError,
    PreconditionError,
)
from .modules import FRESH_COIN, extract_modules, require_ds

__all__ = [
    "Batch",
    "build_batches",
    "partition_batches",
    "select_in_batch",
    "commit",
    "spend",
    "append_ring_to_trace",
]


@dataclass(frozen=True)
class Batch:
    batch_id: int
    universe: frozenset
    rs_set: RelatedRsSet
    coin_tx: Mapping
    lam: int
    lambda_prime: int
    heights: tuple
    partial: bool = False

    def __post_init__(self):
        if len(self.rs_set) > len(self.universe):
            raise InvariantViolation(f"batch {self.batch_id} holds more rings than coins")

    @property
    def fresh(self) -> frozenset:
        return self.universe - self.rs_set.coins()


def partition_batches(trace: ChainTrace, lam: int, strict: bool = True) -> tuple[list, list]:
    """Batches plus the rings dropped for spanning two batches (only when strict=False)."""
    if lam < 2:
        raise PreconditionError("lambda must be at least 2")
    lambda_prime = max((len(b.coin_ids()) for b in trace.blocks), default=0)
    groups, coins, heights = [], [], []
    for block in trace.blocks:
        ids = block.coin_ids()
        if not ids:
            continue
        coins.extend(ids)
        heights.append(block.height)
        if len(coins) >= lam:
            groups.append((coins, heights, False))
            coins, heights = [], []
    if coins:
        groups.append((coins, heights, True))

    home = {c: k for k, (ids, _, _) in enumerate(groups) for c in ids}
    rings = [[] for _ in groups]
    dropped = []
    for rs in trace.ring_signatures():
        where = {home[c] for c in rs.members}
        if len(where) == 1:
            rings[where.pop()].append(rs)
        elif strict:
            raise BatchSpanError(f"ring {rs.rs_id} spans batches {sorted(where)}")
        else:
            dropped.append(rs.rs_id)

    batches = []
    for k, (ids, hs, partial) in enumerate(groups):
        rs_set = RelatedRsSet(tuple(
            RingSignature(rs.rs_id, rs.members, i) for i, rs in enumerate(rings[k], start=1)
        ))
        batches.append(Batch(
            k, frozenset(ids), rs_set, {c: trace.coin_tx[c] for c in ids},
            lam, lambda_prime, (hs[0], hs[-1]), partial,
        ))
    return batches, dropped


def build_batches(trace: ChainTrace, lam: int, strict: bool = True) -> list[Batch]:
    return partition_batches(trace, lam, strict)[0]


def _fresh_after(batch: Batch, instance: ProblemInstance, ids) -> int:
    taken = sum(1 for i in ids if instance.by_id[i].kind == FRESH_COIN)
    return len(batch.fresh) - taken


def _guard(batch: Batch, instance: ProblemInstance, result: SelectionResult,
           engine: str, delta: float, seed: int) -> SelectionResult:
    """Repair a selection that would leave exactly one fresh coin in the batch.

    Order: add one fresh coin, drop one chosen fresh coin, re-run the engine
    without the spare fresh coins, fall back to the existence rings (m_tau
    alone, or m_tau with fresh coins), and only then give up.
    """
    ids = set(result.chosen)
    if _fresh_after(batch, instance, ids) != 1:
        return result
    spare = [m for m in instance.modules if m.kind == FRESH_COIN and m.module_id not in ids]
    txs = instance.compose(ids).txs
    spare.sort(key=lambda m: (-len(m.txs - txs), m.module_id))
    for m in spare:
        if instance.is_eligible(ids | {m.module_id}):
            return make_result(instance, ids | {m.module_id}, result.engine, result.elapsed, result.rounds)
    removable = sorted(
        i for i in ids if i != instance.target and instance.by_id[i].kind == FRESH_COIN
    )
    options = []
    for i in removable:
        rest = ids - {i}
        if instance.is_eligible(rest):
            options.append((-instance.compose(rest).diversity, i))
    if options:
        _, i = min(options)
        return make_result(instance, ids - {i}, result.engine, result.elapsed, result.rounds)

    target = instance.target_module
    pool = [m for m in instance.modules if m.kind != FRESH_COIN or m.module_id == instance.target]
    if len(pool) < len(instance.modules):
        narrowed = ProblemInstance(tuple(pool), instance.target, instance.budget, instance.epsilon)
        try:
            retry = run_engine(engine, narrowed, delta=delta, seed=seed)
        except NoEligibleRingError:
            retry = None
        if retry is not None and retry.eligible and _fresh_after(batch, instance, retry.chosen) != 1:
            return make_result(instance, retry.chosen, result.engine, result.elapsed, result.rounds)

    fresh = sorted(m.module_id for m in instance.modules
                   if m.kind == FRESH_COIN and m.module_id != instance.target)
    fallbacks = [{instance.target}]
    if target.kind == FRESH_COIN:
        fallbacks = [{instance.target, *fresh}] + [{instance.target, f} for f in fresh]
    for ring in fallbacks:
        if instance.is_eligible(ring) and _fresh_after(batch, instance, ring) != 1:
            return make_result(instance, ring, result.engine, result.elapsed, result.rounds)
    raise FreshGuardError(
        "every admissible repair leaves exactly one fresh coin in the batch"
    )


def select_in_batch(batch: Batch, spend_coin: str, budget: int, epsilon, engine: str = "progressive",
                    delta: float = 0.1, seed: int = 0) -> tuple[SelectionResult, ProblemInstance]:
    if spend_coin not in batch.universe:
        raise PreconditionError(f"coin {spend_coin} is not in batch {batch.batch_id}")
    if iterative_states_final(batch).pr_spent(spend_coin) == 1:
        raise PreconditionError(f"coin {spend_coin} is already spent in every assignment")
    modules = extract_modules(batch.rs_set, batch.universe, batch.coin_tx)
    target = next(m.module_id for m in modules if spend_coin in m.coins)
    instance = ProblemInstance(tuple(modules), target, budget, epsilon)
    result = run_engine(engine, instance, delta=delta, seed=seed)
    if not result.eligible:
        raise NoEligibleRingError(f"engine {engine} found no eligible ring for {spend_coin}")
    return _guard(batch, instance, result, engine, delta, seed), instance


def iterative_states_final(batch: Batch):
    require_ds(batch.rs_set)
    return iterative_states(batch.rs_set)[-1]


def commit(batch: Batch, coins, rs_id: str | None = None) -> Batch:
    """Append the ring over `coins` to the batch, re-checking DS order and the fresh guard."""
    coins = frozenset(coins)
    if not coins <= batch.universe:
        raise PreconditionError("ring uses coins outside the batch")
    order = len(batch.rs_set) + 1
    rs_set = batch.rs_set.append(coins, rs_id or f"b{batch.batch_id}.r{order}")
    require_ds(rs_set)
    updated = replace(batch, rs_set=rs_set)
    if len(updated.fresh) == 1:
        raise FreshGuardError("committing this ring would leave exactly one fresh coin")
    return updated


def spend(batch: Batch, spend_coin: str, budget: int, epsilon, engine: str = "progressive",
          delta: float = 0.1, seed: int = 0, rs_id: str | None = None):
    """Select and commit in one step; returns (new batch, result, coins)."""
    result, instance = select_in_batch(batch, spend_coin, budget, epsilon, engine, delta, seed)
    coins = result.coins(instance)
    return commit(batch, coins, rs_id), result, coins


def append_ring_to_trace(trace: ChainTrace, coins, rs_id: str) -> ChainTrace:
    """Record a committed ring in a new block after the last one."""
    order = max((rs.order_index for rs in trace.ring_signatures()), default=0) + 1
    height = trace.blocks[-1].height + 1 if trace.blocks else 0
    block = Block(height, (), (RingSignature(rs_id, frozenset(coins), order),))
    return ChainTrace(trace.coins, trace.blocks + (block,))
