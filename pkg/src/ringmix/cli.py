"""`ringmix` command line: oracle, verify, modules, select, batch, spend, gen, bench."""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import fmt
from .bench import default_specs, emit_results, load_spec, run_sweep
from .chain import ChainTrace, load_trace, save_trace, write_atomic
from .ci import check_ci_full, parse_epsilon
from .datagen import (
    RealParams,
    SyntheticParams,
    bundled_trace,
    gen_real_shaped,
    gen_synthetic,
    history_trace,
    load_instance,
    save_instance,
)
from .engines import ENGINES, run_engine
from .errors import PreconditionError, RingmixError
from .framework import Batch, append_ring_to_trace, commit, partition_batches, select_in_batch
from .modules import extract_modules, require_ds
from .oracle import DEFAULT_LEAF_CAP, build_tree

__all__ = ["main", "build_parser"]


class Output:
    """Collects stdout text so that nothing is printed if the command fails midway."""

    def __init__(self, style: str):
        self.style = style
        self.parts: list[str] = []

    def record(self, items: dict):
        if self.style == "csv":
            self.table(list(items), [list(items.values())])
        else:
            self.parts.extend(f"{k}={_cell(v)}" for k, v in items.items())

    def table(self, columns, rows):
        if self.style == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(columns)
            w.writerows([_cell(v) for v in row] for row in rows)
            self.parts.append(buf.getvalue().rstrip("\n"))
            return
        cells = [list(columns)] + [[_cell(v) for v in row] for row in rows]
        widths = [max(len(r[k]) for r in cells) for k in range(len(columns))]
        for r in cells:
            self.parts.append("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip())

    def text(self) -> str:
        return "\n".join(self.parts) + "\n" if self.parts else ""


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "none"
    if isinstance(v, (list, tuple, frozenset, set)):
        return ",".join(sorted(map(str, v)) if isinstance(v, (set, frozenset)) else map(str, v))
    if isinstance(v, (Fraction, int)):
        return fmt.exact(v)
    if isinstance(v, float):
        return fmt.real(v)
    return str(v)


# --- argument types ---------------------------------------------------------

def _epsilon(text):
    try:
        return parse_epsilon(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _positive(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1: {text}")
    return v


def _delta(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError("delta must lie in (0, 1)")
    return v


def _range(kind):
    def parse(text):
        parts = text.replace(":", ",").split(",")
        if len(parts) != 2:
            raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}")
        try:
            lo, hi = (kind(p) for p in parts)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad range {text!r}")
        return (lo, hi)
    return parse


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("RINGMIX_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise PreconditionError(f"RINGMIX_SEED is not an integer: {env!r}")


def _elapsed_ms(args, seconds: float) -> float:
    return 0.0 if args.no_timing else 1000.0 * seconds


# --- shared helpers ---------------------------------------------------------

def _rings(trace: ChainTrace, prefix: int | None):
    from .chain import RelatedRsSet, RingSignature

    rings = trace.ring_signatures()
    if prefix is not None:
        rings = rings[:prefix]
    return RelatedRsSet(tuple(RingSignature(r.rs_id, r.members, k) for k, r in enumerate(rings, 1)))


def _order_of(rs_set, rs_id: str) -> int:
    for rs in rs_set:
        if rs.rs_id == rs_id:
            return rs.order_index
    raise PreconditionError(f"no ring named {rs_id!r}")


def _whole_trace_batch(trace: ChainTrace) -> Batch:
    total = len(trace.coin_tx)
    sizes = [len(b.coin_ids()) for b in trace.blocks]
    heights = tuple(b.height for b in trace.blocks if b.coin_ids())
    return Batch(0, frozenset(trace.coin_tx), _rings(trace, None), dict(trace.coin_tx),
                 max(total, 2), max(sizes, default=0), (heights[0], heights[-1]), False)


def _batch_for(trace: ChainTrace, coin: str, lam: int | None, drop_spanning: bool) -> Batch:
    if coin not in trace.coin_tx:
        raise PreconditionError(f"unknown coin {coin!r}")
    if lam is None:
        return _whole_trace_batch(trace)
    batches, _ = partition_batches(trace, lam, strict=not drop_spanning)
    return next(b for b in batches if coin in b.universe)


def _result_record(args, result, instance) -> dict:
    return {
        "engine": result.engine,
        "target": instance.target,
        "chosen": sorted(result.chosen),
        "coins": result.coins(instance),
        "size": result.size,
        "degree": result.degree,
        "diversity": result.diversity,
        "eligible": result.eligible,
        "pr_max": result.pr_max,
        "pr_min": result.pr_min,
        "epsilon": str(instance.epsilon),
        "epsilon_required": result.epsilon_required,
        "rounds": result.rounds,
        "elapsed_ms": _elapsed_ms(args, result.elapsed),
    }


# --- subcommands ------------------------------------------------------------

def cmd_oracle(args, out: Output):
    trace = load_trace(args.trace)
    rs_set = _rings(trace, args.prefix)
    tree = build_tree(rs_set, args.leaf_cap)
    probs = tree.probabilities
    if out.style == "csv":
        rows = [(c, rs.rs_id, p.numerator, p.denominator)
                for rs in rs_set for c in sorted(rs.members)
                for p in [probs.pr_in_rs[(c, rs.order_index)]]]
        rows += [(c, "*", p.numerator, p.denominator)
                 for c in sorted(rs_set.coins()) for p in [probs.pr_spent[c]]]
        out.table(("coin_id", "rs_id", "numerator", "denominator"), rows)
        return
    out.record({"rings": len(rs_set), "leaves": len(tree.leaves), "level_sizes": list(tree.level_sizes)})
    rows = []
    for rs in rs_set:
        for c in sorted(rs.members):
            rows.append((rs.order_index, rs.rs_id, c, probs.pr_in_rs.get((c, rs.order_index), Fraction(0))))
    for c in sorted(rs_set.coins()):
        rows.append(("-", "spent", c, probs.pr_spent.get(c, Fraction(0))))
    out.table(("order", "ring", "coin", "pr"), rows)


def cmd_verify(args, out: Output):
    trace = load_trace(args.trace)
    rs_set = _rings(trace, args.prefix)
    targets = [_order_of(rs_set, args.ring)] if args.ring else [rs.order_index for rs in rs_set]
    reports = [(o, check_ci_full(rs_set, o, args.epsilon, args.leaf_cap, args.method)) for o in targets]
    if args.ring:
        (o, rep), = reports
        out.record({
            "ring": rs_set[o].rs_id, "method": args.method, "epsilon": str(args.epsilon),
            "epsilon_required": rep.epsilon_required, "max_ratio": rep.ratio,
            "satisfied": rep.satisfied, "worst_pair": list(rep.worst_pair),
        })
    else:
        out.table(
            ("ring", "epsilon_required", "max_ratio", "satisfied"),
            [(rs_set[o].rs_id, r.epsilon_required, r.ratio, r.satisfied) for o, r in reports],
        )
    if args.strict and not all(r.satisfied for _, r in reports):
        return 1
    return 0


def cmd_modules(args, out: Output):
    trace = load_trace(args.trace)
    if args.lam is None:
        batch = _whole_trace_batch(trace)
    else:
        batches, _ = partition_batches(trace, args.lam, strict=not args.drop_spanning)
        if not 0 <= args.batch < len(batches):
            raise PreconditionError(f"batch {args.batch} does not exist ({len(batches)} batches)")
        batch = batches[args.batch]
    require_ds(batch.rs_set)
    mods = extract_modules(batch.rs_set, batch.universe, batch.coin_tx)
    out.table(
        ("module_id", "kind", "size", "ns", "degree", "dive", "pr_max", "pr_min"),
        [(m.module_id, m.kind, m.size, m.ns, m.degree, m.dive, m.pr_max, m.pr_min) for m in mods],
    )


def cmd_select(args, out: Output):
    seed = _seed(args)
    if args.instance:
        instance = load_instance(args.instance)
        if args.budget is not None or args.epsilon is not None or args.target is not None:
            from .engines import ProblemInstance
            instance = ProblemInstance(
                instance.modules,
                args.target or instance.target,
                args.budget if args.budget is not None else instance.budget,
                args.epsilon if args.epsilon is not None else instance.epsilon,
            )
        result = run_engine(args.engine, instance, delta=args.delta, seed=seed)
    else:
        if args.coin is None or args.budget is None or args.epsilon is None:
            raise PreconditionError("--trace needs --coin, --budget and --epsilon")
        trace = load_trace(args.trace)
        batch = _batch_for(trace, args.coin, args.lam, args.drop_spanning)
        result, instance = select_in_batch(
            batch, args.coin, args.budget, args.epsilon, args.engine, args.delta, seed
        )
    out.record(_result_record(args, result, instance))
    return 0 if result.eligible else 1


def cmd_batch(args, out: Output):
    trace = load_trace(args.trace)
    batches, dropped = partition_batches(trace, args.lam, strict=not args.drop_spanning)
    if out.style != "csv":
        out.record({
            "lambda": args.lam,
            "lambda_prime": batches[0].lambda_prime if batches else 0,
            "batches": len(batches),
            "dropped_rings": len(dropped),
        })
    out.table(
        ("batch", "first_height", "last_height", "coins", "rings", "fresh", "partial"),
        [(b.batch_id, b.heights[0], b.heights[1], len(b.universe), len(b.rs_set), len(b.fresh), b.partial)
         for b in batches],
    )


def _fresh_rs_id(trace: ChainTrace, coin: str) -> str:
    taken = {rs.rs_id for rs in trace.ring_signatures()}
    base = f"rs-{coin}"
    rid, k = base, 1
    while rid in taken:
        k += 1
        rid = f"{base}-{k}"
    return rid


def cmd_spend(args, out: Output):
    seed = _seed(args)
    trace = load_trace(args.trace)
    batch = _batch_for(trace, args.coin, args.lam, args.drop_spanning)
    result, instance = select_in_batch(
        batch, args.coin, args.budget, args.epsilon, args.engine, args.delta, seed
    )
    coins = result.coins(instance)
    rs_id = args.rs_id or _fresh_rs_id(trace, args.coin)
    commit(batch, coins, rs_id)  # re-checks DS order and the fresh guard
    save_trace(append_ring_to_trace(trace, coins, rs_id), args.out)
    record = _result_record(args, result, instance)
    record["rs_id"] = rs_id
    record["out"] = str(args.out)
    out.record(record)


def cmd_gen(args, out: Output):
    seed = _seed(args)
    common = {
        k: v for k, v in {
            "budget": args.budget, "epsilon": args.epsilon_value,
            "degree_range": args.degree_range, "pr_max_range": args.pr_max_range,
        }.items() if v is not None
    }
    try:
        if args.mode == "synthetic":
            extra = {k: v for k, v in {"n": args.n, "o": args.o, "size_range": args.size_range}.items()
                     if v is not None}
            instance = gen_synthetic(SyntheticParams(**common, **extra, seed=seed))
        else:
            if args.n is not None or args.o is not None or args.size_range is not None:
                raise PreconditionError("--n, --o and --size-range apply to synthetic mode only")
            trace = load_trace(args.trace) if args.trace else bundled_trace()
            instance = gen_real_shaped(trace, RealParams(**common, seed=seed))
    except ValueError as exc:
        raise PreconditionError(str(exc)) from exc
    history = history_trace(instance) if args.with_history else None
    save_instance(instance, args.out)
    if history is not None:
        save_trace(history, args.with_history)
    out.record({
        "mode": args.mode, "seed": seed, "modules": len(instance.modules), "target": instance.target,
        "budget": instance.budget, "epsilon": str(instance.epsilon),
        "o_max": instance.o_max, "o_min": instance.o_min, "out": str(args.out),
    })


def cmd_bench(args, out: Output):
    seed = _seed(args)
    if args.spec:
        specs = [load_spec(args.spec)]
        if args.seed is not None or "RINGMIX_SEED" in os.environ:
            specs = [_with(specs[0], seed_base=seed)]
    else:
        specs = default_specs(args.grid, seed_base=seed)
    if args.samples is not None:
        specs = [_with(s, samples=args.samples) for s in specs]
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    tables = [(s, run_sweep(s, workers=args.workers)) for s in specs]
    rows = []
    for spec, table in tables:
        path = outdir / f"{spec.mode}_{spec.param}.csv"
        emit_results(table, path, timing=not args.no_timing, plot=args.plot)
        rows.append((spec.mode, spec.param, len(spec.values), spec.samples, spec.seed_base, path.name))
    out.table(("mode", "param", "values", "samples", "seed_base", "file"), rows)


def _with(spec, **changes):
    from dataclasses import replace
    return replace(spec, **changes)


# --- parser -----------------------------------------------------------------

def _add_common(parser, suppress: bool):
    def d(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--seed", type=int, default=d(None),
                        help="RNG seed (default: $RINGMIX_SEED, else 0)")
    parser.add_argument("--leaf-cap", type=_positive, default=d(DEFAULT_LEAF_CAP),
                        help="largest permutation-tree level allowed before giving up")
    parser.add_argument("--delta", type=_delta, default=d(0.1), help="knapsack precision in (0, 1)")
    parser.add_argument("--format", choices=("text", "csv"), default=d("text"))
    parser.add_argument("--no-timing", action="store_true", default=d(False),
                        help="report every timing field as 0 for byte-stable output")


def build_parser() -> argparse.ArgumentParser:
    # global options may go before or after the subcommand; subparsers use
    # suppressed defaults so they never overwrite a value given up front
    p = argparse.ArgumentParser(prog="ringmix",
                                description="Ring-signature mixin selection with coin indistinguishability.")
    _add_common(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help_text):
        sp = sub.add_parser(name, help=help_text, description=help_text)
        _add_common(sp, suppress=True)
        sp.set_defaults(func=func)
        return sp

    o = add("oracle", cmd_oracle, "enumerate the spent-coin permutation tree of a trace")
    o.add_argument("--trace", required=True)
    o.add_argument("--prefix", type=_positive, default=None, help="use only the first K rings")

    v = add("verify", cmd_verify, "check epsilon coin indistinguishability of rings")
    v.add_argument("--trace", required=True)
    v.add_argument("--ring", "--rs", dest="ring", default=None, help="ring id (default: every ring)")
    v.add_argument("--epsilon", type=_epsilon, required=True)
    v.add_argument("--method", choices=("oracle", "iterative"), default="oracle")
    v.add_argument("--fast", dest="method", action="store_const", const="iterative",
                   help="same as --method iterative")
    v.add_argument("--prefix", type=_positive, default=None)
    v.add_argument("--strict", action="store_true", default=False,
                   help="exit 1 when any checked ring is not satisfied")

    m = add("modules", cmd_modules, "list super-ring and fresh-coin modules")
    m.add_argument("--trace", required=True)
    m.add_argument("--lambda", dest="lam", type=_positive, default=None)
    m.add_argument("--batch", type=int, default=0)
    m.add_argument("--drop-spanning", action="store_true", default=False)

    s = add("select", cmd_select, "choose a ring for one spend")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--trace")
    src.add_argument("--instance")
    s.add_argument("--coin", "--spend", dest="coin", default=None)
    s.add_argument("--target", default=None, help="override the instance's target module")
    s.add_argument("--engine", choices=ENGINES, default="progressive")
    s.add_argument("--budget", type=_positive, default=None)
    s.add_argument("--epsilon", type=_epsilon, default=None)
    s.add_argument("--lambda", dest="lam", type=_positive, default=None)
    s.add_argument("--drop-spanning", action="store_true", default=False)

    b = add("batch", cmd_batch, "split a trace into coin batches")
    b.add_argument("--trace", required=True)
    b.add_argument("--lambda", dest="lam", type=_positive, required=True)
    b.add_argument("--drop-spanning", action="store_true", default=False)

    sp = add("spend", cmd_spend, "select a ring and append it to a copy of the trace")
    sp.add_argument("--trace", required=True)
    sp.add_argument("--coin", "--spend", dest="coin", required=True)
    sp.add_argument("--lambda", dest="lam", type=_positive, required=True)
    sp.add_argument("--budget", type=_positive, required=True)
    sp.add_argument("--epsilon", type=_epsilon, required=True)
    sp.add_argument("--engine", choices=ENGINES, default="progressive")
    sp.add_argument("--out", required=True)
    sp.add_argument("--rs-id", default=None)
    sp.add_argument("--drop-spanning", action="store_true", default=False)

    g = add("gen", cmd_gen, "generate a synthetic or real-shaped instance file")
    g.add_argument("--mode", choices=("synthetic", "real"), default="synthetic")
    g.add_argument("--out", required=True)
    g.add_argument("--n", type=_positive, default=None)
    g.add_argument("--o", type=_positive, default=None)
    g.add_argument("--budget", type=_positive, default=None)
    g.add_argument("--epsilon", dest="epsilon_value", type=float, default=None)
    g.add_argument("--degree-range", type=_range(int), default=None, metavar="LO:HI")
    g.add_argument("--size-range", type=_range(int), default=None, metavar="LO:HI")
    g.add_argument("--pr-max-range", type=_range(float), default=None, metavar="LO:HI")
    g.add_argument("--trace", default=None, help="real mode: source trace (default: bundled)")
    g.add_argument("--with-history", default=None, metavar="TRACE_OUT",
                   help="also write a DS trace consistent with the modules")

    be = add("bench", cmd_bench, "run parameter sweeps and write CSVs")
    which = be.add_mutually_exclusive_group(required=True)
    which.add_argument("--spec")
    which.add_argument("--grid", choices=("synthetic", "real"))
    be.add_argument("--out", required=True)
    be.add_argument("--samples", type=_positive, default=None)
    be.add_argument("--workers", type=_positive, default=1)
    be.add_argument("--plot", action="store_true", default=False)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Output(args.format)
    try:
        status = args.func(args, out) or 0
    except RingmixError as exc:
        print(f"error: {exc.kind}: {_one_line(exc)}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__.lower()}: {_one_line(exc)}", file=sys.stderr)
        return 1
    sys.stdout.write(out.text())
    return status


def _one_line(exc) -> str:
    return " ".join(str(exc).split())


if __name__ == "__main__":
    sys.exit(main())
