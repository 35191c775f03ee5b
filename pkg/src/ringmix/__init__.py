"""Mixin selection for ring signatures with epsilon coin indistinguishability."""
from .chain import ChainTrace, RelatedRsSet, RingSignature, load_trace, save_trace
from .ci import Epsilon, check_ci_full, check_cik, check_cik_fast, parse_epsilon
from .engines import ENGINES, ProblemInstance, SelectionResult, run_engine
from .errors import RingmixError
from .framework import build_batches, select_in_batch
from .modules import extract_modules
from .oracle import build_tree

__version__ = "0.1.0"

__all__ = [
    "ChainTrace", "RelatedRsSet", "RingSignature", "load_trace", "save_trace",
    "Epsilon", "check_ci_full", "check_cik", "check_cik_fast", "parse_epsilon",
    "ENGINES", "ProblemInstance", "SelectionResult", "run_engine", "RingmixError",
    "build_batches", "select_in_batch", "extract_modules", "build_tree",
]
