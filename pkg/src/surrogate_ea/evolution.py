"""Real-coded genetic algorithm primitives shared by every optimizer."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .benchmarks import ProblemSpec

TRUE_EVAL = "true_eval"
SURROGATE = "surrogate"


@dataclass
class FitnessRecord:
    value: float
    source: str = TRUE_EVAL
    merit: Optional[float] = None

    def __post_init__(self):
        if self.source not in (TRUE_EVAL, SURROGATE):
            raise ValueError(f"unknown fitness source {self.source!r}")
        if self.merit is not None and self.source != SURROGATE:
            raise ValueError("merit is only defined for surrogate fitness")

    @property
    def selection_key(self) -> float:
        """Key used by parent selection: merit when present, else value."""
        return self.value if self.merit is None else self.merit

    @property
    def is_true(self) -> bool:
        return self.source == TRUE_EVAL


@dataclass
class Individual:
    genome: np.ndarray
    fitness: Optional[FitnessRecord] = None

    def copy(self) -> "Individual":
        fit = None if self.fitness is None else replace(self.fitness)
        return Individual(self.genome.copy(), fit)


@dataclass
class PopulationConfig:
    """GA settings. ``None`` sizes and rates are resolved against the dimension."""

    pop_size: Optional[int] = None  # N_a, 10n when unset
    oversampling: int = 5
    recombination_rate: float = 0.9
    mutation_rate: Optional[float] = None  # 1/n when unset
    mutation_scale: float = 0.1
    blend_alpha: float = 0.5
    tournament_size: int = 3
    elite_count: Optional[int] = None  # max(1, N_a // 10) when unset
    max_generations: int = 1000
    seed: int = 0

    def resolved(self, n: int) -> "PopulationConfig":
        pop_size = 10 * n if self.pop_size is None else self.pop_size
        cfg = replace(
            self,
            pop_size=pop_size,
            mutation_rate=1.0 / n if self.mutation_rate is None else self.mutation_rate,
            elite_count=max(1, pop_size // 10) if self.elite_count is None else self.elite_count,
        )
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.pop_size is not None and self.pop_size < 2:
            raise ValueError("pop_size must be >= 2")
        if self.oversampling < 1:
            raise ValueError("oversampling must be >= 1")
        for name in ("recombination_rate", "mutation_rate"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")
        if self.elite_count is not None and (
                self.elite_count < 0
                or (self.pop_size is not None and self.elite_count >= self.pop_size)):
            raise ValueError("elite_count must be in [0, pop_size)")
        if self.max_generations < 0:
            raise ValueError("max_generations must be >= 0")

    @property
    def n_candidates(self) -> int:
        """N_c, the size of the oversampled initial pool."""
        return self.oversampling * self.pop_size


def init_oversampled(spec: ProblemSpec, cfg: PopulationConfig,
                     rng: np.random.Generator) -> List[Individual]:
    cfg = cfg.resolved(spec.dimension)
    X = rng.uniform(spec.lower_bound, spec.upper_bound,
                    size=(cfg.n_candidates, spec.dimension))
    return [Individual(x) for x in X]


def _key(ind: Individual, by: str) -> float:
    if ind.fitness is None:
        raise ValueError("individual has no fitness")
    return ind.fitness.value if by == "value" else ind.fitness.selection_key


def select_top(pool: Sequence[Individual], k: int, by: str = "value") -> List[Individual]:
    """The ``k`` lowest-keyed individuals; ties keep pool order."""
    if k > len(pool):
        raise ValueError(f"cannot select {k} individuals from a pool of {len(pool)}")
    keys = np.array([_key(ind, by) for ind in pool])
    order = np.argsort(keys, kind="stable")[:k]
    return [pool[i] for i in order]


def best_of(pool: Sequence[Individual], by: str = "value") -> Individual:
    return select_top(pool, 1, by)[0]


def tournament_select(pop: Sequence[Individual], cfg: PopulationConfig,
                      rng: np.random.Generator) -> Individual:
    """Uniform tournament with replacement; lower selection key wins."""
    if len(pop) == 0:
        raise RuntimeError("tournament on an empty population")
    t = cfg.tournament_size
    if t >= len(pop):
        contenders = np.arange(len(pop))
    else:
        contenders = rng.integers(0, len(pop), size=t)
    keys = [_key(pop[i], "selection") for i in contenders]
    return pop[contenders[int(np.argmin(keys))]]


def recombine(p1: Individual, p2: Individual, cfg: PopulationConfig,
              rng: np.random.Generator, spec: Optional[ProblemSpec] = None
              ) -> Tuple[Individual, Individual]:
    """BLX-alpha blend crossover applied with probability ``recombination_rate``."""
    a, b = p1.genome, p2.genome
    if rng.random() >= cfg.recombination_rate:
        return Individual(a.copy()), Individual(b.copy())
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    d = hi - lo
    lo = lo - cfg.blend_alpha * d
    hi = hi + cfg.blend_alpha * d
    c1 = lo + rng.random(a.shape) * (hi - lo)
    c2 = lo + rng.random(a.shape) * (hi - lo)
    if spec is not None:
        c1, c2 = spec.clip(c1), spec.clip(c2)
    return Individual(c1), Individual(c2)


def mutate(ind: Individual, spec: ProblemSpec, cfg: PopulationConfig,
           rng: np.random.Generator) -> Individual:
    """Per-gene Gaussian perturbation, clamped to the box."""
    rate = 1.0 / spec.dimension if cfg.mutation_rate is None else cfg.mutation_rate
    mask = rng.random(spec.dimension) < rate
    if not mask.any():
        return Individual(ind.genome.copy(), ind.fitness)
    step = rng.normal(0.0, 1.0, spec.dimension) * cfg.mutation_scale * spec.span
    g = spec.clip(np.where(mask, ind.genome + step, ind.genome))
    return Individual(g)


def make_offspring(pop: Sequence[Individual], count: int, spec: ProblemSpec,
                   cfg: PopulationConfig, rng: np.random.Generator) -> List[Individual]:
    children: List[Individual] = []
    while len(children) < count:
        p1 = tournament_select(pop, cfg, rng)
        p2 = tournament_select(pop, cfg, rng)
        for c in recombine(p1, p2, cfg, rng, spec):
            children.append(mutate(c, spec, cfg, rng))
    return children[:count]


FitnessFn = Callable[[List[np.ndarray]], List[FitnessRecord]]


def evolve_one_generation(pop: Sequence[Individual], spec: ProblemSpec,
                          cfg: PopulationConfig, fitness_fn: FitnessFn,
                          rng: np.random.Generator) -> List[Individual]:
    """Elitist generational step.

    The ``elite_count`` best individuals (by value) are carried over
    untouched; the rest are fresh children scored by ``fitness_fn``,
    which receives the list of child genomes and returns one
    FitnessRecord per genome.
    """
    cfg = cfg.resolved(spec.dimension)
    elites = [ind.copy() for ind in select_top(pop, cfg.elite_count)]
    children = make_offspring(pop, len(pop) - len(elites), spec, cfg, rng)
    records = fitness_fn([c.genome for c in children])
    if len(records) != len(children):
        raise ValueError("fitness_fn returned the wrong number of records")
    for c, r in zip(children, records):
        c.fitness = r
    return elites + children
