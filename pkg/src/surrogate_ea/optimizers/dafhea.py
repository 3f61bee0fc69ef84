"""DAFHEA: GA with an SVR fitness surrogate under cluster-based evolution control."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional

import numpy as np

from ..benchmarks import ProblemSpec
from ..control import (BudgetExhausted, Cluster, MeritWeights, UpdatePolicy,
                       adapt_cluster_count, cluster_population, merit,
                       min_distances_to_archive, step_six_update)
from ..evolution import (SURROGATE, FitnessRecord, Individual, PopulationConfig,
                         best_of, evolve_one_generation, init_oversampled, select_top)
from ..svr import ConvergenceError, SurrogateModel, SvrConfig, train_svr
from ._common import Tracker, make_ledger, streams
from .result import RunResult

log = logging.getLogger(__name__)


@dataclass
class DafheaConfig:
    population: PopulationConfig = field(default_factory=PopulationConfig)
    svr: SvrConfig = field(default_factory=lambda: SvrConfig(target_transform="log-minmax"))
    weights: MeritWeights = field(default_factory=MeritWeights)
    policy: UpdatePolicy = field(default_factory=lambda: UpdatePolicy(k=1, max_expansion_steps=3))
    retune_period: int = 1
    initial_clusters: Optional[int] = None  # max(2, round(sqrt(N_a / 2))) when unset
    train_window: Optional[int] = None  # archive points used for training; N_c when unset
    train_selection: str = "recent"  # latest evaluations, or "nearest" to the incumbent
    tune_fraction: float = 0.2  # kernel width is tuned on this best fraction of the training set

    def __post_init__(self):
        if self.retune_period < 1:
            raise ValueError("retune_period must be >= 1")


class SolverAbort(RuntimeError):
    pass


class _Surrogate:
    """Owns the current SVR model, its kernel and the retraining rules."""

    def __init__(self, cfg: SvrConfig, window: int, selection: str = "recent",
                 tune_fraction: float = 1.0):
        if selection not in ("nearest", "recent"):
            raise ValueError(f"unknown training selection {selection!r}")
        self.cfg = cfg
        self.window = window
        self.selection = selection
        self.tune_fraction = tune_fraction
        self.kernel = None
        self.model: Optional[SurrogateModel] = None
        self.retrains = 0
        self.relaxed = 0

    def fit(self, ledger, retune: bool) -> SurrogateModel:
        X, y = training_set(ledger, self.window, self.selection)
        if self.kernel is None or retune:
            top = np.argsort(y, kind="stable")[:max(2, int(len(y) * self.tune_fraction))]
            self.kernel = self.cfg.kernel_for(X[top])
        cfg = replace(self.cfg, kernel=self.kernel)
        try:
            self.model = train_svr(X, y, cfg)
        except ConvergenceError as first:
            self.relaxed += 1
            log.warning("SVR did not converge (%s); retrying with relaxed tolerance", first)
            try:
                self.model = train_svr(X, y, replace(cfg, tol=cfg.tol * 1e3))
            except ConvergenceError as second:
                raise SolverAbort(str(second)) from second
        self.retrains += 1
        return self.model

    def predict_many(self, X) -> np.ndarray:
        return self.model.predict_many(X)

    def predict(self, x) -> float:
        return float(self.model.predict_many(np.asarray(x)[None, :])[0])


def training_set(ledger, size: int, selection: str = "recent"):
    """Archive subset the surrogate is fitted on.

    ``recent`` keeps the latest ``size`` evaluations; ``nearest`` keeps the
    ``size`` archived points closest to the best true point.
    """
    if selection == "recent" or ledger.count <= size:
        return ledger.recent(size)
    X, y = ledger.points, ledger.values
    d = ((X - X[int(np.argmin(y))]) ** 2).sum(1)
    idx = np.sort(np.argsort(d, kind="stable")[:size])
    return X[idx], y[idx]


def default_cluster_count(pop_size: int) -> int:
    return max(2, int(round(math.sqrt(pop_size / 2))))


def form_clusters(pop: List[Individual], m: int, weights: MeritWeights,
                  rng: np.random.Generator, n: int) -> List[Cluster]:
    """Cluster, then grow to m + (clusters over the spread threshold) if needed."""
    m = min(m, len(pop))
    clusters = cluster_population(pop, m, rng, n)
    grown = min(adapt_cluster_count(clusters, weights), len(pop))
    if grown > len(clusters):
        clusters = cluster_population(pop, grown, rng, n)
    return clusters


def assign_merits(pop: List[Individual], clusters: List[Cluster], predicted: np.ndarray,
                  ledger, spec: ProblemSpec, weights: MeritWeights) -> None:
    """Give every member a surrogate record carrying its merit.

    Predicted values and their cluster spreads enter the merit after
    min-max scaling over the population so the four terms are commensurate.
    """
    lo, hi = float(predicted.min()), float(predicted.max())
    width = hi - lo if hi > lo else 1.0
    scaled = (predicted - lo) / width
    d = min_distances_to_archive(np.array([ind.genome for ind in pop]), ledger, spec.diagonal)
    for c in clusters:
        sigma = float(scaled[c.members].std())
        for j in c.members:
            pop[j].fitness = FitnessRecord(
                float(predicted[j]), SURROGATE,
                merit(scaled[j], sigma, d[j], c.sparseness, weights))


def run_dafhea(spec: ProblemSpec, cfg: DafheaConfig = None, seed: int = 0,
               budget: Optional[int] = None, target: Optional[float] = None,
               objective: Optional[Callable] = None) -> RunResult:
    cfg = cfg or DafheaConfig()
    pcfg = cfg.population.resolved(spec.dimension)
    rng, _ = streams(spec, seed)
    ledger = make_ledger(spec, seed, budget, objective)
    track = Tracker(spec, ledger, target)
    n = spec.dimension
    m0 = cfg.initial_clusters or default_cluster_count(pcfg.pop_size)
    surrogate = _Surrogate(cfg.svr, cfg.train_window or pcfg.n_candidates, cfg.train_selection,
                           cfg.tune_fraction)
    meta = {}

    # Steps One to Three
    pool = init_oversampled(spec, pcfg, rng)
    evaluated = []
    termination = "max_generations"
    try:
        for ind in pool:
            ind.fitness = FitnessRecord(ledger.evaluate(ind.genome, 0))
            evaluated.append(ind)
    except BudgetExhausted:
        termination = "budget"
    if ledger.exhausted and termination == "max_generations":
        termination = "budget"
    track.from_ledger()
    if not evaluated:
        return track.result("dafhea", seed, [], 0, termination)
    pop = [ind.copy() for ind in select_top(evaluated, min(pcfg.pop_size, len(evaluated)))]
    track.record(0)
    if termination != "max_generations" or len(evaluated) < 2:
        return track.result("dafhea", seed, pop, 0, termination)
    if track.hit_target:
        return track.result("dafhea", seed, pop, 0, "target")
    try:
        surrogate.fit(ledger, retune=True)
    except SolverAbort as exc:
        return track.result("dafhea", seed, pop, 0, "aborted", diagnostic=str(exc))

    def surrogate_fitness(genomes):
        return [FitnessRecord(float(v), SURROGATE) for v in surrogate.predict_many(np.array(genomes))]

    gen = 0
    while gen < pcfg.max_generations:
        gen += 1
        # Step Four: variation; Step Five: approximate evaluation, clusters, merit
        pop = evolve_one_generation(pop, spec, pcfg, surrogate_fitness, rng)
        predicted = np.array([ind.fitness.value for ind in pop])
        clusters = form_clusters(pop, m0, cfg.weights, rng, n)
        assign_merits(pop, clusters, predicted, ledger, spec, cfg.weights)
        # Step Six: true evaluations per the update policy, then retrain
        try:
            step_six_update(clusters, pop, spec, ledger, cfg.policy, surrogate.predict, gen)
        except BudgetExhausted:
            termination = "budget"
        try:
            surrogate.fit(ledger, retune=gen % cfg.retune_period == 0)
        except SolverAbort as exc:
            termination = "aborted"
            meta["diagnostic"] = str(exc)
            track.from_ledger()
            track.record(gen)
            break
        predicted = surrogate.predict_many(np.array([ind.genome for ind in pop]))
        assign_merits(pop, clusters, predicted, ledger, spec, cfg.weights)
        track.from_ledger()
        track.record(gen, float(predicted.min()))
        # Step Seven
        if termination == "budget":
            break
        if track.hit_target:
            termination = "target"
            break
        if ledger.exhausted:
            termination = "budget"
            break
    # the reported optimum is confirmed with a true evaluation
    try:
        ledger.evaluate(best_of(pop).genome, gen)
    except BudgetExhausted:
        pass
    track.from_ledger()
    meta.update(retrains=surrogate.retrains, relaxed_retrains=surrogate.relaxed)
    return track.result("dafhea", seed, pop, gen, termination, **meta)
