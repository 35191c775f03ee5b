"""Best-response dynamics over each pair window.

Every windowed module is a player choosing in (True) or out (False). All
players share one utility: the composed ring's diversity divided by the
player count when the ring is admissible, else zero. That shared utility is
also the potential, so best responses always terminate.
"""
from __future__ import annotations

import time
from collections import Counter
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from ..errors import GameDidNotConverge, NoEligibleRingError
from .instance import ProblemInstance, SelectionResult, make_result
from .pairs import PairWindow, pair_windows

__all__ = ["PairGame", "game", "game_equilibria", "make_rng"]


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


class PairGame:
    def __init__(self, window: PairWindow, budget: int):
        self.window = window
        self.budget = budget
        self.players = list(window.candidates)

    def __len__(self):
        return len(self.players)

    def _admissible(self, size, degree):
        return self.window.fits(size, degree, self.budget)

    def potential(self, config: Sequence[bool]) -> Fraction:
        size, degree = self.window.core_size, self.window.core_degree
        txs = set(self.window.core_txs)
        for p, on in zip(self.players, config):
            if on:
                size += p.size
                degree += p.degree
                txs |= p.txs
        if not self._admissible(size, degree):
            return Fraction(0)
        return Fraction(len(txs), max(len(self.players), 1))

    def utility(self, player: int, config: Sequence[bool]) -> Fraction:
        # the player's own payoff: share of the diversity of the ring it helps build
        chosen = [p for p, on in zip(self.players, config) if on]
        size = self.window.core_size + sum(p.size for p in chosen)
        degree = self.window.core_degree + sum(p.degree for p in chosen)
        if not self._admissible(size, degree):
            return Fraction(0)
        txs = self.window.core_txs.union(*(p.txs for p in chosen))
        return Fraction(len(txs), len(self.players))

    def is_nash(self, config: Sequence[bool]) -> bool:
        config = list(config)
        for k in range(len(self.players)):
            flipped = config.copy()
            flipped[k] = not flipped[k]
            if self.utility(k, flipped) > self.utility(k, config):
                return False
        return True

    def play(self, initial: Sequence[bool], max_sweeps: int | None = None) -> tuple[list, int]:
        """Sweep players in id order until nobody moves; return (config, sweeps)."""
        if max_sweeps is None:
            max_sweeps = len(self.players) ** 2 + 1
        config = [bool(x) for x in initial]
        holders = Counter(self.window.core_txs)
        size, degree = self.window.core_size, self.window.core_degree
        for p, on in zip(self.players, config):
            if on:
                holders.update(p.txs)
                size += p.size
                degree += p.degree
        diversity = len(holders)

        for sweep in range(1, max_sweeps + 1):
            moved = False
            for k, p in enumerate(self.players):
                if config[k]:
                    in_div, in_ok = diversity, self._admissible(size, degree)
                    out_div = diversity - sum(1 for t in p.txs if holders[t] == 1)
                    out_ok = self._admissible(size - p.size, degree - p.degree)
                else:
                    out_div, out_ok = diversity, self._admissible(size, degree)
                    in_div = diversity + sum(1 for t in p.txs if holders[t] == 0)
                    in_ok = self._admissible(size + p.size, degree + p.degree)
                join = (in_div if in_ok else 0) > (out_div if out_ok else 0)
                if join == config[k]:
                    continue
                moved = True
                config[k] = join
                sign = 1 if join else -1
                size += sign * p.size
                degree += sign * p.degree
                if join:
                    holders.update(p.txs)
                else:
                    holders.subtract(p.txs)
                    for t in p.txs:
                        if holders[t] == 0:
                            del holders[t]
                diversity = len(holders)
            if not moved:
                return config, sweep
        raise GameDidNotConverge(f"no equilibrium after {max_sweeps} sweeps in pair {self.window.index}")


def game_equilibria(instance: ProblemInstance, seed: int, max_sweeps: int | None = None
                    ) -> Iterator[tuple[PairGame, list, int]]:
    """Play every pair window; yields (game, equilibrium config, sweeps)."""
    rng = make_rng(seed)
    n = len(instance.modules)
    for window in pair_windows(instance):
        g = PairGame(window, instance.budget)
        start = rng.random(len(g)) < 0.5
        bound = max_sweeps if max_sweeps is not None else len(g) * n + 1
        config, sweeps = g.play(start, bound)
        yield g, config, sweeps


def game(instance: ProblemInstance, seed: int = 0, max_sweeps: int | None = None) -> SelectionResult:
    start = time.perf_counter()
    best_ids, best_div, total_sweeps = None, -1, 0
    for g, config, sweeps in game_equilibria(instance, seed, max_sweeps):
        total_sweeps += sweeps
        ids = set(g.window.core) | {p.module_id for p, on in zip(g.players, config) if on}
        div = len(g.window.core_txs.union(*(p.txs for p, on in zip(g.players, config) if on)))
        if div > best_div:
            best_ids, best_div = ids, div
    if best_ids is None:
        raise NoEligibleRingError("no eligible ring exists for this target, budget and epsilon")
    return make_result(instance, best_ids, "game", time.perf_counter() - start, total_sweeps)
