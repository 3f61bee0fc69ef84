"""Replicated experiment grids and Table-style reports.

A grid is the product of methods, functions, dimensions and noise flags.
Replicate ``r`` of every cell runs with seed ``base_seed + r``, so cells
are paired across methods. Raw per-replicate results are always written
next to the aggregates.

Config files are flat ``key = value`` text; ``#`` starts a comment.
Lists are comma separated. Keys::

    methods, functions, dims, noisy (true | false | both), replicates,
    seed, generations, budget, target, out, format (csv | markdown | both)

Any other key of the form ``<method>.<field>[.<field>...]`` overrides a
field of that method's config, e.g. ``dafhea.policy.k = 1`` or
``prefrank.kernel = gaussian variance=0.01``.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import itertools
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .benchmarks import FUNCTIONS, make_problem
from .evolution import PopulationConfig
from .kernels import KernelSpec
from .optimizers import METHODS, DafheaConfig, Dafhea2Config, PrefRankConfig

CSV_COLUMNS = ("method", "function", "dim", "noisy", "replicates", "mean_best_fitness",
               "std_best_fitness", "mean_true_evals", "mean_generations", "wall_ms")
RAW_COLUMNS = ("method", "function", "dim", "noisy", "replicate", "seed", "status",
               "best_fitness", "mean_fitness", "true_evals", "generations", "termination",
               "wall_ms", "error")
FORMATS = ("csv", "markdown", "both")


class ConfigError(ValueError):
    pass


Cell = Tuple[str, str, int, bool]


@dataclass
class ExperimentConfig:
    cells: List[Cell]
    replicates: int = 10
    base_seed: int = 0
    generations: Optional[int] = None  # overrides every method's max_generations
    budget: Optional[int] = None
    target: Optional[float] = None
    overrides: Dict[str, Dict[str, str]] = field(default_factory=dict)
    out: Optional[str] = None
    format: str = "both"
    jobs: int = 1

    def validate(self) -> None:
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if self.format not in FORMATS:
            raise ConfigError(f"unknown format {self.format!r}")
        if not self.cells:
            raise ConfigError("experiment has no cells")
        for method, function, dim, _ in self.cells:
            if method not in METHODS:
                raise ConfigError(f"unknown method {method!r}")
            if function not in FUNCTIONS:
                raise ConfigError(f"unknown function {function!r}")
            if int(dim) < 1:
                raise ConfigError(f"dimension must be >= 1, got {dim}")
        for method in self.overrides:
            if method not in METHODS:
                raise ConfigError(f"override for unknown method {method!r}")
            # building each config once surfaces bad keys before any run starts
            method_config(self, method)


@dataclass
class ReportRow:
    method: str
    function: str
    dim: int
    noisy: bool
    replicates: int
    mean_best_fitness: float
    std_best_fitness: float
    mean_true_evals: float
    mean_generations: float
    wall_ms: float
    failed: int = 0


# -- method configs --------------------------------------------------------

def _default_config(method: str):
    return {
        "canonical": PopulationConfig,
        "dafhea": DafheaConfig,
        "dafhea2": Dafhea2Config,
        "prefrank": PrefRankConfig,
    }[method]()


def _coerce(text: str, current: Any, name: str):
    text = text.strip()
    if isinstance(current, KernelSpec) or name.endswith("kernel"):
        return None if text.lower() == "none" else KernelSpec.parse(text)
    if text.lower() == "none":
        return None
    if isinstance(current, bool):
        return _parse_bool(text)
    if isinstance(current, int) and not isinstance(current, bool):
        return int(text)
    if isinstance(current, float):
        return float(text)
    if current is None:
        for conv in (int, float):
            try:
                return conv(text)
            except ValueError:
                pass
    return text


def apply_override(obj, dotted: str, text: str):
    """Return a copy of dataclass ``obj`` with the dotted field set from ``text``."""
    head, _, rest = dotted.partition(".")
    names = {f.name for f in dataclasses.fields(obj)}
    if head not in names:
        raise ConfigError(f"{type(obj).__name__} has no field {head!r}")
    current = getattr(obj, head)
    if rest:
        if not dataclasses.is_dataclass(current):
            raise ConfigError(f"{head!r} is not a nested config")
        return dataclasses.replace(obj, **{head: apply_override(current, rest, text)})
    try:
        value = _coerce(text, current, head)
        return dataclasses.replace(obj, **{head: value})
    except (TypeError, ValueError, KeyError, IndexError) as exc:
        raise ConfigError(f"bad value {text!r} for {dotted!r}: {exc}") from None


def method_config(cfg: ExperimentConfig, method: str):
    conf = _default_config(method)
    for key, text in cfg.overrides.get(method, {}).items():
        conf = apply_override(conf, key, text)
    if cfg.generations is not None:
        if isinstance(conf, PopulationConfig):
            conf = dataclasses.replace(conf, max_generations=cfg.generations)
        else:
            conf = dataclasses.replace(
                conf, population=dataclasses.replace(conf.population,
                                                     max_generations=cfg.generations))
    return conf


# -- config files ----------------------------------------------------------

def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _split(text: str) -> List[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def read_config_file(path: str) -> Dict[str, str]:
    try:
        with open(path) as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None


def parse_config_text(text: str) -> Dict[str, str]:
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


GLOBAL_KEYS = ("methods", "functions", "dims", "noisy", "replicates", "seed", "generations",
               "budget", "target", "out", "format", "jobs")


def config_from_mapping(kv: Dict[str, str]) -> ExperimentConfig:
    """Build an ExperimentConfig from flat key/value strings."""
    overrides: Dict[str, Dict[str, str]] = {}
    for key, value in kv.items():
        if key in GLOBAL_KEYS:
            continue
        method, dot, rest = key.partition(".")
        if not dot or not rest:
            raise ConfigError(f"unknown key {key!r}")
        overrides.setdefault(method, {})[rest] = value
    try:
        methods = _split(kv.get("methods", ""))
        functions = _split(kv.get("functions", ""))
        dims = [int(d) for d in _split(kv.get("dims", "5"))]
        noisy_text = kv.get("noisy", "false").strip().lower()
        noisy = [False, True] if noisy_text == "both" else [_parse_bool(noisy_text)]

        def opt(name, conv):
            v = kv.get(name, "").strip()
            return None if v in ("", "none") else conv(v)

        cfg = ExperimentConfig(
            cells=[(m, f, d, z) for m, f, d, z in itertools.product(methods, functions, dims,
                                                                     noisy)],
            replicates=int(kv.get("replicates", "10")),
            base_seed=int(kv.get("seed", "0")),
            generations=opt("generations", int),
            budget=opt("budget", int),
            target=opt("target", float),
            overrides=overrides,
            out=opt("out", str),
            format=kv.get("format", "both").strip(),
            jobs=int(kv.get("jobs", "1")),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cfg.validate()
    return cfg


# -- running ---------------------------------------------------------------

def _run_one(task):
    cfg, (method, function, dim, noisy), r = task
    seed = cfg.base_seed + r
    started = time.perf_counter()
    row = dict(method=method, function=function, dim=dim, noisy=noisy, replicate=r, seed=seed)
    try:
        spec = make_problem(function, dim, noisy=noisy)
        result = METHODS[method](spec, method_config(cfg, method), seed=seed,
                                 budget=cfg.budget, target=cfg.target)
        row.update(status="ok", best_fitness=result.best_fitness,
                   mean_fitness=result.mean_fitness, true_evals=result.true_evals,
                   generations=result.generations, termination=result.termination, error="")
    except Exception as exc:  # one failed replicate never aborts the grid
        row.update(status="failed", best_fitness=math.nan, mean_fitness=math.nan,
                   true_evals=0, generations=0, termination="error",
                   error=f"{type(exc).__name__}: {exc}")
    row["wall_ms"] = (time.perf_counter() - started) * 1e3
    return row


def aggregate(raw: Sequence[dict], cells: Sequence[Cell]) -> List[ReportRow]:
    rows = []
    for cell in cells:
        mine = [r for r in raw if (r["method"], r["function"], r["dim"], r["noisy"]) == cell]
        ok = [r for r in mine if r["status"] == "ok"]
        best = np.array([r["best_fitness"] for r in ok], dtype=float)
        rows.append(ReportRow(
            method=cell[0], function=cell[1], dim=cell[2], noisy=cell[3],
            replicates=len(ok),
            mean_best_fitness=float(best.mean()) if len(ok) else math.nan,
            std_best_fitness=float(best.std()) if len(ok) else math.nan,
            mean_true_evals=float(np.mean([r["true_evals"] for r in ok])) if ok else math.nan,
            mean_generations=float(np.mean([r["generations"] for r in ok])) if ok else math.nan,
            wall_ms=float(sum(r["wall_ms"] for r in mine)),
            failed=len(mine) - len(ok),
        ))
    return rows


def run_experiment(cfg: ExperimentConfig) -> Tuple[List[ReportRow], List[dict]]:
    """Run every replicate of every cell; returns aggregate rows and raw rows.

    When ``cfg.out`` is set, ``report.csv`` / ``report.md`` and ``raw.csv``
    are written into that directory.
    """
    cfg.validate()
    tasks = [(cfg, cell, r) for cell in cfg.cells for r in range(cfg.replicates)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            raw = list(pool.map(_run_one, tasks))
    else:
        raw = [_run_one(t) for t in tasks]
    rows = aggregate(raw, cfg.cells)
    if cfg.out:
        write_outputs(cfg.out, rows, raw, cfg.format)
    return rows, raw


def write_outputs(out: str, rows: List[ReportRow], raw: List[dict], fmt: str) -> None:
    os.makedirs(out, exist_ok=True)
    if fmt in ("csv", "both"):
        with open(os.path.join(out, "report.csv"), "w", newline="") as fh:
            fh.write(render_table(rows, "csv"))
    if fmt in ("markdown", "both"):
        with open(os.path.join(out, "report.md"), "w") as fh:
            fh.write(render_table(rows, "markdown"))
    with open(os.path.join(out, "raw.csv"), "w", newline="") as fh:
        fh.write(render_raw(raw))


def read_raw(path: str) -> List[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["dim"] = int(r["dim"])
        r["noisy"] = r["noisy"] == "true"
        for k in ("replicate", "seed", "true_evals", "generations"):
            r[k] = int(r[k])
        for k in ("best_fitness", "mean_fitness", "wall_ms"):
            r[k] = float(r[k])
    return rows


# -- rendering -------------------------------------------------------------

def _cells(row: ReportRow) -> List[str]:
    return [
        row.method, row.function, str(row.dim), "true" if row.noisy else "false",
        str(row.replicates), "%.3e" % row.mean_best_fitness, "%.3e" % row.std_best_fitness,
        "%.1f" % row.mean_true_evals, "%.1f" % row.mean_generations, "%.0f" % row.wall_ms,
    ]


def render_table(rows: Sequence[ReportRow], format: str = "csv") -> str:
    """CSV in the documented column order, or the same cells as a markdown table."""
    if format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in rows:
            w.writerow(_cells(row))
        return buf.getvalue()
    if format == "markdown":
        lines = ["| " + " | ".join(CSV_COLUMNS) + " |",
                 "|" + "|".join("---" for _ in CSV_COLUMNS) + "|"]
        lines += ["| " + " | ".join(_cells(row)) + " |" for row in rows]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {format!r}")


def render_raw(raw: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RAW_COLUMNS)
    for r in raw:
        vals = []
        for k in RAW_COLUMNS:
            v = r[k]
            if isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            vals.append(v)
        w.writerow(vals)
    return buf.getvalue()
