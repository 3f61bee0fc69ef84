"""Baseline elitist GA in which every fitness is a true evaluation."""

from __future__ import annotations

from typing import Callable, Optional

from ..benchmarks import ProblemSpec
from ..control import BudgetExhausted
from ..evolution import (FitnessRecord, PopulationConfig, best_of, evolve_one_generation,
                         init_oversampled, select_top)
from ._common import Tracker, make_ledger, streams
from .result import RunResult


def run_canonical_ga(spec: ProblemSpec, cfg: PopulationConfig = PopulationConfig(),
                     seed: int = 0, budget: Optional[int] = None,
                     target: Optional[float] = None,
                     objective: Optional[Callable] = None) -> RunResult:
    cfg = cfg.resolved(spec.dimension)
    rng, _ = streams(spec, seed)
    ledger = make_ledger(spec, seed, budget, objective)
    track = Tracker(spec, ledger, target)

    def incumbent(pop):
        if spec.noisy:
            best = best_of(pop)
            track.set_incumbent(best.genome, best.fitness.value)
        else:
            track.from_ledger()

    pool = init_oversampled(spec, cfg, rng)
    evaluated = []
    termination = "max_generations"
    try:
        for ind in pool:
            ind.fitness = FitnessRecord(ledger.evaluate(ind.genome, 0))
            evaluated.append(ind)
    except BudgetExhausted:
        termination = "budget"
    if not evaluated:
        return track.result("canonical", seed, [], 0, termination)
    pop = select_top(evaluated, min(cfg.pop_size, len(evaluated)))
    incumbent(pop)
    track.record(0)
    gen = 0
    if termination == "max_generations" and track.hit_target:
        termination = "target"

    def true_fitness(genomes):
        return [FitnessRecord(ledger.evaluate(g, gen)) for g in genomes]

    while termination == "max_generations" and gen < cfg.max_generations:
        gen += 1
        try:
            pop = evolve_one_generation(pop, spec, cfg, true_fitness, rng)
        except BudgetExhausted:
            gen -= 1
            termination = "budget"
            break
        incumbent(pop)
        track.record(gen)
        if track.hit_target:
            termination = "target"
        elif ledger.exhausted:
            termination = "budget"
    return track.result("canonical", seed, pop, gen, termination)
