"""Parameter sweeps over generated instances, averaged per engine."""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path

from . import fmt
from .chain import write_atomic
from .datagen import (
    REAL_GRID,
    SYNTHETIC_GRID,
    RealParams,
    SyntheticParams,
    bundled_trace,
    gen_real_shaped,
    gen_synthetic,
)
from .engines import ENGINES, run_engine
from .errors import PreconditionError, RingmixError

__all__ = [
    "SweepSpec",
    "SweepRow",
    "CSV_COLUMNS",
    "BENCH_ENGINES",
    "load_spec",
    "default_specs",
    "run_sweep",
    "emit_results",
    "render_csv",
]

CSV_COLUMNS = ("param", "value", "engine", "mean_diversity", "mean_time_ms", "samples", "seed_base")
BENCH_ENGINES = ("progressive", "game", "greedy", "random")
_PARAMS = {"synthetic": SyntheticParams, "real": RealParams}
_RANGES = {"degree_range", "size_range", "pr_max_range"}


def _swept_names(mode: str) -> set:
    return {f.name for f in fields(_PARAMS[mode])} - {"seed"}


@dataclass(frozen=True)
class SweepSpec:
    param: str
    values: tuple
    mode: str = "synthetic"
    fixed: dict = field(default_factory=dict)
    engines: tuple = BENCH_ENGINES
    samples: int = 50
    seed_base: int = 0
    delta: float = 0.1

    def __post_init__(self):
        if self.mode not in _PARAMS:
            raise PreconditionError(f"unknown mode {self.mode!r}")
        names = _swept_names(self.mode)
        if self.param not in names:
            raise PreconditionError(f"{self.param!r} is not a {self.mode} parameter")
        bad = set(self.fixed) - names
        if bad:
            raise PreconditionError(f"unknown fixed parameter {sorted(bad)[0]!r}")
        if self.param in self.fixed:
            raise PreconditionError(f"{self.param!r} is both swept and fixed")
        if not self.values:
            raise PreconditionError("a sweep needs at least one value")
        unknown = [e for e in self.engines if e not in ENGINES]
        if unknown or not self.engines:
            raise PreconditionError(f"unknown engine {unknown[0] if unknown else '(none)'!r}")
        if self.samples < 1:
            raise PreconditionError("samples must be positive")
        if not 0 < self.delta < 1:
            raise PreconditionError("delta must lie in (0, 1)")
        object.__setattr__(self, "values", tuple(_norm(self.param, v) for v in self.values))
        object.__setattr__(self, "fixed", {k: _norm(k, v) for k, v in self.fixed.items()})
        object.__setattr__(self, "engines", tuple(self.engines))

    def params(self, value, seed: int):
        return _PARAMS[self.mode](**{**self.fixed, self.param: value, "seed": seed})


def _norm(name, value):
    return tuple(value) if name in _RANGES else value


@dataclass(frozen=True)
class SweepRow:
    param: str
    value: object
    engine: str
    mean_diversity: Fraction
    mean_time_ms: float
    samples: int
    seed_base: int


def load_spec(path) -> SweepSpec:
    """Read a JSON sweep file: {"mode", "sweep": {name: [values]}, "fixed", "engines", "samples", "seed_base"}."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise PreconditionError(f"cannot read sweep spec {path}: {exc}") from exc
    sweep = doc.get("sweep")
    if not isinstance(sweep, dict) or len(sweep) != 1:
        raise PreconditionError("a sweep spec must vary exactly one parameter")
    (param, values), = sweep.items()
    known = {"mode", "sweep", "fixed", "engines", "samples", "seed_base", "delta"}
    extra = set(doc) - known
    if extra:
        raise PreconditionError(f"unknown sweep spec key {sorted(extra)[0]!r}")
    return SweepSpec(
        param=param,
        values=tuple(values),
        mode=doc.get("mode", "synthetic"),
        fixed=dict(doc.get("fixed", {})),
        engines=tuple(doc.get("engines", BENCH_ENGINES)),
        samples=int(doc.get("samples", 50)),
        seed_base=int(doc.get("seed_base", 0)),
        delta=float(doc.get("delta", 0.1)),
    )


def default_specs(mode: str = "synthetic", samples: int = 50, seed_base: int = 0) -> list[SweepSpec]:
    grid = SYNTHETIC_GRID if mode == "synthetic" else REAL_GRID
    return [SweepSpec(name, tuple(values), mode, samples=samples, seed_base=seed_base)
            for name, values in grid.items()]


_TRACE = None


def _instance(spec: SweepSpec, value, seed: int):
    global _TRACE
    params = spec.params(value, seed)
    if spec.mode == "synthetic":
        return gen_synthetic(params)
    if _TRACE is None:
        _TRACE = bundled_trace()
    return gen_real_shaped(_TRACE, params)


def _run_sample(task):
    spec, value, sample = task
    seed = spec.seed_base + sample
    instance = _instance(spec, value, seed)
    out = []
    for engine in spec.engines:
        try:
            result = run_engine(engine, instance, delta=spec.delta, seed=seed)
        except RingmixError as exc:
            raise type(exc)(f"{spec.param}={value} seed={seed} engine={engine}: {exc}") from exc
        out.append((result.diversity, result.elapsed))
    return out


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[SweepRow]:
    """Rows per (value, engine) in spec order.

    Sample s of every value uses seed `seed_base + s`, so the values of one
    sweep are compared on common random numbers.
    """
    tasks = [(spec, v, s) for v in spec.values for s in range(spec.samples)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_sample, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        outcomes = [_run_sample(t) for t in tasks]

    rows = []
    for k, value in enumerate(spec.values):
        chunk = outcomes[k * spec.samples:(k + 1) * spec.samples]
        for e, engine in enumerate(spec.engines):
            div = sum(o[e][0] for o in chunk)
            secs = sum(o[e][1] for o in chunk)
            rows.append(SweepRow(
                spec.param, value, engine, Fraction(div, spec.samples),
                1000.0 * secs / spec.samples, spec.samples, spec.seed_base,
            ))
    return rows


def _value_text(value) -> str:
    if isinstance(value, tuple):
        return "-".join(fmt.real(v) for v in value)
    return fmt.real(value)


def render_csv(rows, timing: bool = True) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([
            r.param, _value_text(r.value), r.engine, fmt.real(r.mean_diversity),
            fmt.real(r.mean_time_ms) if timing else "0", r.samples, r.seed_base,
        ])
    return buf.getvalue()


def emit_results(rows, path, timing: bool = True, plot: bool = False) -> list[Path]:
    """Write the CSV (and a PNG next to it when `plot`); returns the written paths."""
    path = Path(path)
    write_atomic(path, render_csv(rows, timing))
    written = [path]
    if plot and rows:
        written.append(_plot(rows, path.with_suffix(".png")))
    return written


def _plot(rows, png: Path) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    values = list(dict.fromkeys(r.value for r in rows))
    ticks = [_value_text(v) for v in values]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for engine in dict.fromkeys(r.engine for r in rows):
        ys = [float(r.mean_diversity) for r in rows if r.engine == engine]
        ax.plot(range(len(values)), ys, marker="o", label=engine)
    ax.set_xticks(range(len(values)), ticks)
    ax.set_xlabel(rows[0].param)
    ax.set_ylabel("mean diversity")
    ax.legend()
    fig.tight_layout()
    tmp = png.with_name(f".tmp-{png.name}")
    fig.savefig(tmp, format="png", metadata={"Software": None})
    plt.close(fig)
    tmp.replace(png)
    return png
