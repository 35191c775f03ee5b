"""Independent brute-force references used across the test suite."""
from __future__ import annotations

import itertools
from collections import Counter
from fractions import Fraction

import numpy as np

from ringmix.chain import Block, ChainTrace, Coin, RelatedRsSet
from ringmix.ci import Epsilon
from ringmix.datagen import random_ds_history
from ringmix.engines import ProblemInstance
from ringmix.modules import extract_modules


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def example3() -> RelatedRsSet:
    return RelatedRsSet.from_members([["c1", "c2"], ["c1", "c2", "c3"], ["c1", "c2", "c3", "c4"]])


def example1() -> RelatedRsSet:
    return RelatedRsSet.from_members([["c1", "c2", "c3"], ["c1", "c2"], ["c1", "c2"]])


def nested_example() -> RelatedRsSet:
    return RelatedRsSet.from_members([["c1", "c2"], ["c1", "c2", "c3"], ["c1", "c2", "c3"], ["c4", "c5"]])


def example2() -> RelatedRsSet:
    return RelatedRsSet.from_members([["c1", "c2"], ["c1", "c3"]])


# --- permutation enumeration by Cartesian product --------------------------

def brute_leaves(rs_set) -> list[tuple]:
    rings = [sorted(rs.members) for rs in rs_set]
    return [p for p in itertools.product(*rings) if len(set(p)) == len(p)]


def brute_probs(rs_set):
    """(joint[(coin, order)], spent[coin]) from the full Cartesian product."""
    leaves = brute_leaves(rs_set)
    n = len(leaves)
    counts = Counter()
    for leaf in leaves:
        for k, c in enumerate(leaf, start=1):
            counts[(c, k)] += 1
    joint = {(c, rs.order_index): Fraction(counts[(c, rs.order_index)], n)
             for rs in rs_set for c in rs.members}
    spent = Counter()
    for (c, _), p in joint.items():
        spent[c] += p
    return joint, dict(spent)


def brute_conditionals(rs_set, order):
    joint, spent = brute_probs(rs_set)
    return {c: (joint[(c, order)] / spent[c] if spent[c] else None) for c in rs_set[order].members}


def max_ratio(conds):
    vals = list(conds.values())
    if any(v is None for v in vals):
        return None
    lo, hi = min(vals), max(vals)
    return None if lo == 0 else hi / lo


# --- eligibility and exhaustive optimum -------------------------------------

def fast_ok(pr_max, pr_min, degree, epsilon) -> bool:
    """e^eps (1-pmax)/((d-1)pmax+1) >= (1-pmin)/((d-1)pmin+1), evaluated directly."""
    e = Epsilon.of(epsilon).effective
    return e * (1 - pr_max) * ((degree - 1) * pr_min + 1) >= (1 - pr_min) * ((degree - 1) * pr_max + 1)


def composition(modules):
    return {
        "size": sum(m.size for m in modules),
        "degree": sum(m.degree for m in modules),
        "pr_max": max(m.pr_max for m in modules),
        "pr_min": min(m.pr_min for m in modules),
        "txs": frozenset().union(*(m.txs for m in modules)),
    }


def eligible(instance, modules) -> bool:
    c = composition(modules)
    return (2 <= c["size"] <= instance.budget and c["degree"] >= 1
            and fast_ok(c["pr_max"], c["pr_min"], c["degree"], instance.epsilon))


def brute_optimum(instance):
    """(best diversity, lexicographically smallest id tuple) over all subsets containing the target."""
    t = instance.target_module
    others = [m for m in instance.modules if m.module_id != t.module_id]
    best = (-1, None)
    for r in range(len(others) + 1):
        for combo in itertools.combinations(others, r):
            mods = (t,) + combo
            if not eligible(instance, mods):
                continue
            div = len(composition(mods)["txs"])
            key = tuple(sorted(m.module_id for m in mods))
            if div > best[0] or (div == best[0] and key < best[1]):
                best = (div, key)
    return best


def history_instance(seed: int, max_modules: int = 10, **kw):
    """Small instance whose module probabilities come from a real DS history."""
    rng = rng_for(seed)
    while True:
        rs_set, universe, coin_tx = random_ds_history(rng, **kw)
        mods = extract_modules(rs_set, universe, coin_tx)
        if 2 <= len(mods) <= max_modules:
            break
    target = mods[int(rng.integers(len(mods)))]
    budget = max(target.size, 2) + int(rng.integers(0, sum(m.size for m in mods)))
    eps = float(rng.uniform(0.2, 3.0))
    return ProblemInstance(tuple(mods), target.module_id, budget, eps), rs_set


# --- traces -----------------------------------------------------------------

def block_trace(block_sizes, tx_width: int = 1) -> ChainTrace:
    """One tx of `tx_width` coins at a time; block k holds block_sizes[k] coins."""
    coins, blocks, k, t = [], [], 0, 0
    for h, size in enumerate(block_sizes):
        outs, left = [], size
        while left:
            t += 1
            w = min(tx_width, left)
            ids = tuple(f"c{k + j:04d}" for j in range(1, w + 1))
            k += w
            left -= w
            coins.extend(Coin(c, f"t{t:04d}") for c in ids)
            outs.append(ids)
        blocks.append(Block(h, tuple(outs)))
    return ChainTrace(tuple(coins), tuple(blocks))


def random_trace(rng) -> ChainTrace:
    """A few blocks (some empty) of 1-3 txs with 1-3 outputs each, no rings."""
    coins, blocks, k, t = [], [], 0, 0
    for h in range(int(rng.integers(2, 7))):
        outs = []
        for _ in range(int(rng.integers(0, 4))):
            t += 1
            ids = []
            for _ in range(int(rng.integers(1, 4))):
                k += 1
                ids.append(f"c{k:03d}")
                coins.append(Coin(ids[-1], f"t{t:03d}"))
            outs.append(tuple(ids))
        blocks.append(Block(h, tuple(outs)))
    return ChainTrace(tuple(coins), tuple(blocks))
