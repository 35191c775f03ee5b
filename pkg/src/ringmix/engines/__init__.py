"""Selection engines for composing a new ring from modules."""
from .baselines import EXHAUSTIVE_CAP, exhaustive, greedy, random_baseline
from .game import PairGame, game, game_equilibria
from .instance import Composition, ProblemInstance, SelectionResult, make_result
from .knapsack import KnapsackItem, delta_kp
from .pairs import PairWindow, pair_windows
from .progressive import progressive

ENGINES = ("progressive", "game", "greedy", "random", "exhaustive")


def run_engine(name: str, instance: ProblemInstance, delta: float = 0.1, seed: int = 0) -> SelectionResult:
    if name == "progressive":
        return progressive(instance, delta)
    if name == "game":
        return game(instance, seed)
    if name == "greedy":
        return greedy(instance)
    if name == "random":
        return random_baseline(instance, seed)
    if name == "exhaustive":
        return exhaustive(instance)
    raise ValueError(f"unknown engine {name!r}; choose from {', '.join(ENGINES)}")


__all__ = [
    "ENGINES", "EXHAUSTIVE_CAP", "Composition", "KnapsackItem", "PairGame", "PairWindow",
    "ProblemInstance", "SelectionResult", "delta_kp", "exhaustive", "game", "game_equilibria",
    "greedy", "make_result", "pair_windows", "progressive", "random_baseline", "run_engine",
]
