from __future__ import annotations

import math
from typing import Callable, List, Optional

import numpy as np

from ..benchmarks import ProblemSpec
from ..control import EvaluationLedger
from ..evolution import Individual
from .result import RunResult, TraceRow, clean_score


def streams(spec: ProblemSpec, seed: int):
    """Independent GA and noise generators for one run."""
    ga = np.random.default_rng([seed, 0])
    noise = spec.noise.stream(seed) if spec.noisy else None
    return ga, noise


def make_ledger(spec: ProblemSpec, seed: int, budget: Optional[int],
                objective: Optional[Callable] = None) -> EvaluationLedger:
    _, noise = streams(spec, seed)
    return EvaluationLedger(spec, budget=budget, objective=objective, noise_rng=noise)


class Tracker:
    """Per-generation trace plus termination bookkeeping."""

    def __init__(self, spec: ProblemSpec, ledger: EvaluationLedger, target: Optional[float]):
        self.spec = spec
        self.ledger = ledger
        self.target = target
        self.trace: List[TraceRow] = []
        self.best_x: Optional[np.ndarray] = None
        self.best_value = math.inf
        self.best_fitness = math.inf

    def set_incumbent(self, x, value: float) -> None:
        self.best_x = np.array(x, dtype=float)
        self.best_value = float(value)
        self.best_fitness = clean_score(self.spec, self.best_x)

    def from_ledger(self) -> None:
        if self.ledger.count:
            x, v = self.ledger.best()
            if v < self.best_value or self.best_x is None or self.spec.noisy:
                self.set_incumbent(x, v)

    def record(self, generation: int, best_predicted: float = math.nan) -> None:
        self.trace.append(TraceRow(generation, self.best_fitness, float(best_predicted),
                                   self.ledger.count))

    @property
    def hit_target(self) -> bool:
        return self.target is not None and self.best_fitness <= self.target

    def result(self, method: str, seed: int, pop: List[Individual], generations: int,
               termination: str, **metadata) -> RunResult:
        if pop:
            mean = float(np.mean([clean_score(self.spec, ind.genome) for ind in pop]))
        else:
            mean = math.nan
        return RunResult(
            method=method,
            function=self.spec.function_id,
            dimension=self.spec.dimension,
            noisy=self.spec.noisy,
            seed=seed,
            best_x=self.best_x,
            best_value=self.best_value,
            best_fitness=self.best_fitness,
            mean_fitness=mean,
            true_evals=self.ledger.count,
            generations=generations,
            termination=termination,
            trace=list(self.trace),
            metadata=dict(metadata),
        )
