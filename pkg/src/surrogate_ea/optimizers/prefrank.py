"""GA driven by a learned ranking of candidates rather than predicted fitness.

A ranking SVM is trained on truly evaluated points; only the order it
induces is used. Every ``validation_period`` generations the candidate it
ranks first is truly evaluated and added to the training set.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from ..benchmarks import ProblemSpec, known_optimum
from ..control import BudgetExhausted
from ..evolution import (SURROGATE, FitnessRecord, Individual, PopulationConfig,
                         evolve_one_generation)
from ..kernels import KernelSpec
from ..ordinal import InconsistentPairWarning, RankingModel, train_ordinal
from ._common import Tracker, make_ledger, streams
from .result import RunResult

log = logging.getLogger(__name__)

SAMPLING_MODES = ("population_centered", "paper_origin_centered")

DEFAULT_KERNELS: Dict[str, KernelSpec] = {
    "sphere": KernelSpec.polynomial(2, 1.0),
    "ellipsoidal": KernelSpec.polynomial(2, 1.0),
    "schwefel": KernelSpec.polynomial(2, 1.0),
    "rosenbrock": KernelSpec.polynomial(4, 1.0),
    "rastrigin": KernelSpec.gaussian(0.01),
}


@dataclass
class PrefRankConfig:
    population: PopulationConfig = field(default_factory=PopulationConfig)
    kernel: Optional[KernelSpec] = None  # per-function default when unset
    C: float = 1.0e6
    initial_size: int = 60
    validation_period: float = 2.0  # math.inf disables updates
    zoom_kernel: KernelSpec = field(default_factory=lambda: KernelSpec.gaussian(0.01))
    zoom_trigger: float = 0.01  # population std per coordinate, as a fraction of range
    sampling: str = "population_centered"
    pair_strategy: str = "adjacent"

    def __post_init__(self):
        if self.initial_size < 2:
            raise ValueError("initial_size must be >= 2")
        if not self.validation_period >= 1:
            raise ValueError("validation_period must be >= 1")
        if self.sampling not in SAMPLING_MODES:
            raise ValueError(f"unknown sampling mode {self.sampling!r}")

    def kernel_for(self, function_id: str) -> KernelSpec:
        return self.kernel if self.kernel is not None else DEFAULT_KERNELS[function_id]


def initial_samples(spec: ProblemSpec, size: int, mode: str, centre_pop: np.ndarray,
                    rng: np.random.Generator) -> np.ndarray:
    """Standard normal points around the population mean or the known optimum."""
    if mode == "paper_origin_centered":
        centre = known_optimum(spec)[0]
    else:
        centre = centre_pop.mean(axis=0)
    return spec.clip(centre + rng.standard_normal((size, spec.dimension)))


def zoomed(X: np.ndarray, spec: ProblemSpec, trigger: float) -> bool:
    return bool(np.all(X.std(axis=0) < trigger * spec.span))


def run_prefrank(spec: ProblemSpec, cfg: PrefRankConfig = None, seed: int = 0,
                 budget: Optional[int] = None, target: Optional[float] = None,
                 objective: Optional[Callable] = None) -> RunResult:
    cfg = cfg or PrefRankConfig()
    pcfg = cfg.population.resolved(spec.dimension)
    rng, _ = streams(spec, seed)
    ledger = make_ledger(spec, seed, budget, objective)
    track = Tracker(spec, ledger, target)
    kernel = cfg.kernel_for(spec.function_id)
    meta = {"sampling": cfg.sampling, "kernel": kernel.describe(), "rank_errors": [],
            "zoom_generation": None, "inconsistent_pairs": 0}

    pop = [Individual(g) for g in spec.lower_bound + rng.random((pcfg.pop_size, spec.dimension))
           * spec.span]
    start = initial_samples(spec, cfg.initial_size, cfg.sampling,
                            np.array([ind.genome for ind in pop]), rng)
    termination = "max_generations"
    try:
        for x in start:
            ledger.evaluate(x, 0)
    except BudgetExhausted:
        termination = "budget"
    if ledger.exhausted and termination == "max_generations":
        termination = "budget"
    track.from_ledger()
    track.record(0)

    def train() -> Optional[RankingModel]:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", InconsistentPairWarning)
            try:
                model = train_ordinal(ledger.points, ledger.values, kernel, cfg.C,
                                      cfg.pair_strategy)
            except ValueError as exc:
                log.warning("ranking model not trained: %s", exc)
                return None
        for w in caught:
            if issubclass(w.category, InconsistentPairWarning):
                meta["inconsistent_pairs"] += 1
                log.warning("%s", w.message)
        return model

    model = train() if ledger.count >= 2 else None

    def score(genomes) -> np.ndarray:
        X = np.array(genomes)
        return model.scores(X) if model is not None else np.zeros(len(X))

    def ranked(genomes):
        return [FitnessRecord(-float(s), SURROGATE) for s in score(genomes)]

    for ind, rec in zip(pop, ranked([ind.genome for ind in pop])):
        ind.fitness = rec
    if termination == "max_generations" and track.hit_target:
        termination = "target"

    gen = 0
    while termination == "max_generations" and gen < pcfg.max_generations:
        gen += 1
        pop = evolve_one_generation(pop, spec, pcfg, ranked, rng)
        G = np.array([ind.genome for ind in pop])
        if math.isfinite(cfg.validation_period) and gen % int(cfg.validation_period) == 0:
            s = score(G)
            # the best-ranked member that has not been evaluated yet
            order = np.argsort(-s, kind="stable")
            pick = next((i for i in order if ledger.lookup(G[i]) is None), order[0])
            ref_scores = score(ledger.points) if ledger.count else np.empty(0)
            try:
                value = ledger.evaluate(G[pick], gen)
            except BudgetExhausted:
                termination = "budget"
                break
            true_rank = int(np.sum(ledger.values[:-1] < value))
            est_rank = int(np.sum(ref_scores > s[pick]))
            meta["rank_errors"].append(abs(true_rank - est_rank))
            if meta["zoom_generation"] is None and zoomed(G, spec, cfg.zoom_trigger):
                kernel = cfg.zoom_kernel
                meta["zoom_generation"] = gen
            model = train() or model
            for ind, rec in zip(pop, ranked(G)):
                ind.fitness = rec
            track.from_ledger()
        track.record(gen, -float(min(ind.fitness.value for ind in pop)))
        if track.hit_target:
            termination = "target"
        elif ledger.exhausted:
            termination = "budget"
    meta["final_kernel"] = kernel.describe()
    return track.result("prefrank", seed, pop, gen, termination, **meta)
