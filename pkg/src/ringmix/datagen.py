"""Instance generators: synthetic modules, real-shaped modules, DS histories."""
from __future__ import annotations

import json
import warnings
from collections import defaultdict
from dataclasses import dataclass, fields, replace
from fractions import Fraction
from importlib import resources

import numpy as np

from .chain import Block, ChainTrace, Coin, RelatedRsSet, RingSignature, load_trace, write_atomic
from .ci import Epsilon, parse_epsilon
from .engines.instance import ProblemInstance
from .errors import PreconditionError
from .modules import SUPER_RS, ModuleSummary, fresh_coin_module

__all__ = [
    "SyntheticParams",
    "RealParams",
    "SYNTHETIC_GRID",
    "REAL_GRID",
    "pr_min_from_ci",
    "gen_synthetic",
    "gen_real_shaped",
    "history_trace",
    "random_ds_history",
    "monero_shaped_trace",
    "bundled_trace",
    "make_rng",
    "params_from_dict",
    "instance_to_dict",
    "instance_from_dict",
    "save_instance",
    "load_instance",
]

PR_GRID = 10**6  # pr_max is drawn on a 1e-6 grid so instance files stay readable


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class SyntheticParams:
    n: int = 50
    o: int = 70
    budget: int = 150
    epsilon: float = 1.8
    degree_range: tuple = (1, 9)
    size_range: tuple = (14, 18)
    pr_max_range: tuple = (0.1, 0.5)
    seed: int = 0

    def __post_init__(self):
        _check_common(self)
        if self.n < 1 or self.o < 1:
            raise ValueError("n and o must be positive")
        lo, hi = self.size_range
        if not 1 <= lo <= hi:
            raise ValueError("size range must satisfy 1 <= lo <= hi")
        if self.degree_range[0] > hi:
            raise ValueError("every degree would exceed every size")


@dataclass(frozen=True)
class RealParams:
    budget: int = 80
    epsilon: float = 1.5
    degree_range: tuple = (1, 7)
    pr_max_range: tuple = (0.1, 0.6)
    rings: int = 57
    ring_size: int = 11
    seed: int = 0

    def __post_init__(self):
        _check_common(self)
        if self.degree_range[1] > self.ring_size:
            raise ValueError("degree range exceeds the ring size")


def _check_common(p):
    object.__setattr__(p, "degree_range", tuple(p.degree_range))
    object.__setattr__(p, "pr_max_range", tuple(p.pr_max_range))
    if hasattr(p, "size_range"):
        object.__setattr__(p, "size_range", tuple(p.size_range))
    d_lo, d_hi = p.degree_range
    if not 1 <= d_lo <= d_hi:
        raise ValueError("degree range must satisfy 1 <= lo <= hi")
    pm_lo, pm_hi = p.pr_max_range
    if not 0 <= pm_lo <= pm_hi <= 1:
        raise ValueError("pr_max range must lie inside [0, 1]")
    if p.epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    if d_hi == 1:
        warnings.warn("degree range [1,1]: every module has all coins spent already", stacklevel=3)


SYNTHETIC_GRID = {
    "n": [50, 60, 70, 80, 90],
    "o": [50, 60, 70, 80, 90],
    "budget": [110, 130, 150, 170, 190],
    "epsilon": [1.6, 1.7, 1.8, 1.9, 2.0],
    "degree_range": [(1, 9), (1, 8), (1, 7), (1, 6), (1, 5)],
    "size_range": [(11, 15), (14, 18), (17, 21), (20, 24), (23, 27)],
    "pr_max_range": [(0.1, 0.2), (0.1, 0.35), (0.1, 0.5), (0.1, 0.65), (0.1, 0.8)],
}

REAL_GRID = {
    "budget": [40, 60, 80, 100, 120],
    "epsilon": [1.3, 1.4, 1.5, 1.6, 1.7],
    "degree_range": [(1, 9), (1, 8), (1, 7), (1, 6), (1, 5)],
    "pr_max_range": [(0.1, 0.5), (0.1, 0.55), (0.1, 0.6), (0.1, 0.65), (0.1, 0.7)],
}


def pr_min_from_ci(pr_max, degree: int, epsilon) -> Fraction:
    """Smallest spent probability that keeps a module exactly at the epsilon-CI boundary."""
    pr_max = Fraction(pr_max)
    if not 0 <= pr_max <= 1 or degree < 1:
        raise ValueError("need 0 <= pr_max <= 1 and degree >= 1")
    a = Epsilon.of(epsilon).exp * (1 - pr_max) / ((degree - 1) * pr_max + 1)
    return max(Fraction(0), (1 - a) / (1 + a * (degree - 1)))


def _draw_pr_max(rng, lo, hi) -> Fraction:
    return Fraction(int(rng.integers(round(lo * PR_GRID), round(hi * PR_GRID) + 1)), PR_GRID)


def _fabricated(module_id, coins, txs_of, degree, pr_max, epsilon) -> ModuleSummary:
    pr_min = min(pr_min_from_ci(pr_max, degree, epsilon), pr_max)
    tx_of = dict(zip(coins, txs_of))
    return ModuleSummary(
        module_id, SUPER_RS, frozenset(coins), frozenset(txs_of),
        len(coins) - degree, degree, pr_max, pr_min, tx_of,
    )


def gen_synthetic(params: SyntheticParams) -> ProblemInstance:
    rng = make_rng(params.seed)
    width = len(str(params.n - 1))
    tx_width = len(str(params.o - 1))
    modules = []
    for k in range(params.n):
        mid = f"m{k:0{width}d}"
        size = int(rng.integers(params.size_range[0], params.size_range[1] + 1))
        degree = int(rng.integers(params.degree_range[0], params.degree_range[1] + 1))
        while degree > size:
            degree = int(rng.integers(params.degree_range[0], params.degree_range[1] + 1))
        pr_max = _draw_pr_max(rng, *params.pr_max_range)
        coins = [f"{mid}.c{j}" for j in range(size)]
        txs = [f"t{int(t):0{tx_width}d}" for t in rng.integers(0, params.o, size)]
        modules.append(_fabricated(mid, coins, txs, degree, pr_max, params.epsilon))
    target = modules[int(rng.integers(params.n))].module_id
    return ProblemInstance(tuple(modules), target, params.budget, Epsilon.of(params.epsilon))


def gen_real_shaped(trace: ChainTrace, params: RealParams = RealParams()) -> ProblemInstance:
    need = params.rings * params.ring_size
    coins = sorted(trace.coin_tx)
    if len(coins) < need:
        raise PreconditionError(f"trace has {len(coins)} coins, {need} needed")
    rng = make_rng(params.seed)
    order = [coins[i] for i in rng.permutation(len(coins))]
    width = len(str(params.rings - 1))
    modules = []
    for k in range(params.rings):
        picked = order[k * params.ring_size:(k + 1) * params.ring_size]
        degree = int(rng.integers(params.degree_range[0], params.degree_range[1] + 1))
        pr_max = _draw_pr_max(rng, *params.pr_max_range)
        modules.append(_fabricated(
            f"s{k:0{width}d}", picked, [trace.coin_tx[c] for c in picked], degree, pr_max, params.epsilon
        ))
    for coin in order[need:]:
        modules.append(fresh_coin_module(coin, trace.coin_tx[coin]))
    target = sorted(m.module_id for m in modules)[int(rng.integers(len(modules)))]
    return ProblemInstance(tuple(modules), target, params.budget, Epsilon.of(params.epsilon))


def history_trace(instance: ProblemInstance) -> ChainTrace:
    """A DS trace whose extracted modules have the instance's coins, sizes and degrees.

    Each super-ring module becomes a chain of nested rings over a growing
    prefix of its coins; spent probabilities then follow from that history
    rather than from the fabricated values.
    """
    by_tx = defaultdict(list)
    for m in instance.modules:
        for c in sorted(m.coins):
            by_tx[m.tx_of[c]].append(c)
    coins = [Coin(c, tx) for tx in sorted(by_tx) for c in by_tx[tx]]
    outputs = tuple(tuple(by_tx[tx]) for tx in sorted(by_tx))
    rings, order = [], 0
    for m in instance.modules:
        if m.kind != SUPER_RS:
            continue
        members = sorted(m.coins)
        if m.degree < 1:
            raise PreconditionError(f"module {m.module_id} has degree 0; no history reproduces it")
        for j in range(m.ns):
            order += 1
            size = m.degree + 1 + j
            rid = m.module_id if j == m.ns - 1 else f"{m.module_id}.h{j}"
            rings.append(RingSignature(rid, frozenset(members[:size]), order))
    return ChainTrace(tuple(coins), (Block(0, outputs, ()), Block(1, (), tuple(rings))))


def random_ds_history(rng: np.random.Generator, max_rings: int = 12, max_coins: int = 24,
                      max_leaves: int = 2000, fresh_weight: float = 0.5):
    """Random ordered disjoint-superset ring set built by composing modules.

    Returns (rs_set, universe, coin_tx). Every ring has degree >= 1 and the
    product of creation degrees (the leaf count) stays within `max_leaves`.
    """
    n_coins = int(rng.integers(2, max_coins + 1))
    n_txs = int(rng.integers(1, n_coins + 1))
    universe = [f"c{k}" for k in range(n_coins)]
    coin_tx = {c: f"t{int(rng.integers(n_txs))}" for c in universe}
    # modules as (coins, residual degree)
    modules = [(frozenset([c]), 1) for c in universe]
    rings = []
    leaves = 1
    target = int(rng.integers(1, max_rings + 1))
    attempts = 0
    while len(rings) < target and attempts < 50:
        attempts += 1
        k = int(rng.integers(1, min(len(modules), 4) + 1))
        weights = np.array([fresh_weight if len(m[0]) == 1 else 1.0 for m in modules])
        picked = rng.choice(len(modules), size=k, replace=False, p=weights / weights.sum())
        coins = frozenset().union(*(modules[i][0] for i in picked))
        degree = sum(modules[i][1] for i in picked)
        if degree < 1 or leaves * degree > max_leaves or len(coins) < 2:
            continue
        leaves *= degree
        rings.append(coins)
        modules = [m for i, m in enumerate(modules) if i not in set(picked)]
        modules.append((coins, degree - 1))
    return RelatedRsSet.from_members(rings), frozenset(universe), coin_tx


def monero_shaped_trace(seed: int = 2028242) -> ChainTrace:
    """32 blocks, 285 transactions, 633 coins and 57 disjoint rings of 11 coins.

    Shape targets: one coinbase output per block, mostly 2-output
    transactions, four 16-output transactions, a 77-coin block and a block
    holding only its coinbase.
    """
    rng = make_rng(seed)
    heights = list(range(2028242, 2028274))
    lonely, busy = 2028252, 2028247
    sizes = [16] * 3 + [3] * 39 + [2] * 180
    rng.shuffle(sizes)
    per_block = {h: [] for h in heights}
    others = [h for h in heights if h not in (lonely, busy)]
    for s in sizes:
        per_block[others[int(rng.integers(len(others)))]].append(s)
    per_block[busy] = [16] + [2] * 30

    coins, blocks = [], []
    tx_n = 0
    for h in heights:
        outputs = []
        for s in [1] + per_block[h]:
            tx_n += 1
            tx = f"tx{tx_n:03d}"
            ids = [f"c{len(coins) + j + 1:03d}" for j in range(s)]
            coins.extend(Coin(c, tx) for c in ids)
            outputs.append(tuple(ids))
        blocks.append([h, outputs])
    perm = rng.permutation(len(coins))
    rings = tuple(
        RingSignature(f"rs{k + 1:02d}", frozenset(coins[i].coin_id for i in perm[k * 11:(k + 1) * 11]), k + 1)
        for k in range(57)
    )
    built = [Block(h, tuple(out), ()) for h, out in blocks]
    built[-1] = replace(built[-1], ring_signatures=rings)
    return ChainTrace(tuple(coins), tuple(built))


def bundled_trace() -> ChainTrace:
    ref = resources.files("ringmix") / "data" / "monero_shaped_trace.json"
    with resources.as_file(ref) as path:
        return load_trace(path)


def params_from_dict(cls, doc: dict):
    """Build SyntheticParams/RealParams from a mapping; unknown keys are an error."""
    known = {f.name for f in fields(cls)}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown parameter(s) {sorted(unknown)} for {cls.__name__}")
    return cls(**doc)


def instance_to_dict(instance: ProblemInstance) -> dict:
    """Plain JSON form; probabilities are written as exact "p/q" strings."""
    return {
        "target": instance.target,
        "budget": instance.budget,
        "epsilon": str(instance.epsilon),
        "o_max": instance.o_max,
        "o_min": instance.o_min,
        "modules": [
            {
                "module_id": m.module_id,
                "kind": m.kind,
                "coins": {c: m.tx_of[c] for c in sorted(m.coins)},
                "ns": m.ns,
                "degree": m.degree,
                "dive": m.dive,
                "pr_max": str(m.pr_max),
                "pr_min": str(m.pr_min),
            }
            for m in instance.modules
        ],
    }


def instance_from_dict(doc: dict) -> ProblemInstance:
    try:
        modules = []
        for d in doc["modules"]:
            coins = dict(d["coins"])
            modules.append(ModuleSummary(
                d["module_id"], d["kind"], frozenset(coins), frozenset(coins.values()),
                int(d["ns"]), int(d["degree"]), Fraction(d["pr_max"]), Fraction(d["pr_min"]), coins,
            ))
        instance = ProblemInstance(
            tuple(modules), doc["target"], int(doc["budget"]), parse_epsilon(doc["epsilon"])
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise PreconditionError(f"malformed instance: {exc}") from exc
    for key in ("o_max", "o_min"):
        if key in doc and doc[key] != getattr(instance, key):
            raise PreconditionError(f"stored {key} disagrees with the modules")
    return instance


def save_instance(instance: ProblemInstance, path):
    write_atomic(path, json.dumps(instance_to_dict(instance), indent=1) + "\n")


def load_instance(path) -> ProblemInstance:
    try:
        doc = json.loads(open(path).read())
    except (OSError, ValueError) as exc:
        raise PreconditionError(f"cannot read instance {path}: {exc}") from exc
    return instance_from_dict(doc)
