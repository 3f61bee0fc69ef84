"""Scalable benchmark functions and their noisy variants.

Every objective call made by the optimizers goes through :func:`evaluate_clean`
or :func:`evaluate_noisy`, which is what makes evaluation counting exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

FUNCTIONS = ("sphere", "ellipsoidal", "schwefel", "rosenbrock", "rastrigin")

DEFAULT_BOUNDS = {
    "sphere": (-5.12, 5.12),
    "ellipsoidal": (-5.12, 5.12),
    "rastrigin": (-5.12, 5.12),
    "rosenbrock": (-2.048, 2.048),
    "schwefel": (-65.536, 65.536),
}


class OutOfDomainError(ValueError):
    """A point with a component outside the search box was evaluated."""


@dataclass(frozen=True)
class NoiseSpec:
    """Additive Gaussian observation noise ``N(mean, variance)``."""

    mean: float = 0.0
    variance: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError(f"noise variance must be > 0, got {self.variance}")

    @property
    def std(self) -> float:
        return float(np.sqrt(self.variance))

    def pdf(self, x):
        """Density of the noise distribution."""
        x = np.asarray(x, dtype=float)
        return np.exp(-((x - self.mean) ** 2) / (2 * self.variance)) / (
            self.std * np.sqrt(2 * np.pi)
        )

    def stream(self, run_seed: Optional[int] = None) -> np.random.Generator:
        """Noise stream, independent of any GA stream seeded with the same run seed."""
        if run_seed is None:
            return np.random.default_rng([self.seed, 0x5EED])
        return np.random.default_rng([run_seed, self.seed, 0x5EED])


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    function_id: str
    dimension: int
    lower_bound: np.ndarray = field(default=None)
    upper_bound: np.ndarray = field(default=None)
    noise: Optional[NoiseSpec] = None

    def __post_init__(self):
        if self.function_id not in FUNCTIONS:
            raise ValueError(
                f"unknown function {self.function_id!r}; expected one of {FUNCTIONS}"
            )
        if int(self.dimension) < 1:
            raise ValueError("dimension must be >= 1")
        lo, hi = DEFAULT_BOUNDS[self.function_id]
        lower = lo if self.lower_bound is None else self.lower_bound
        upper = hi if self.upper_bound is None else self.upper_bound
        lower = np.broadcast_to(np.asarray(lower, dtype=float), (self.dimension,)).copy()
        upper = np.broadcast_to(np.asarray(upper, dtype=float), (self.dimension,)).copy()
        if np.any(lower >= upper):
            raise ValueError("lower_bound must be < upper_bound in every coordinate")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "dimension", int(self.dimension))
        object.__setattr__(self, "lower_bound", lower)
        object.__setattr__(self, "upper_bound", upper)
        x_opt, _ = known_optimum(self)
        if np.any(x_opt < lower) or np.any(x_opt > upper):
            raise ValueError("known optimum lies outside the bounds")

    @property
    def n(self) -> int:
        return self.dimension

    @property
    def span(self) -> np.ndarray:
        return self.upper_bound - self.lower_bound

    @property
    def diagonal(self) -> float:
        """Length of the search box diagonal."""
        return float(np.linalg.norm(self.span))

    @property
    def noisy(self) -> bool:
        return self.noise is not None

    def clip(self, x):
        return np.clip(x, self.lower_bound, self.upper_bound)

    def without_noise(self) -> "ProblemSpec":
        return ProblemSpec(self.function_id, self.dimension,
                           self.lower_bound, self.upper_bound, None)


def sphere(x):
    return float(np.sum(x * x))


def ellipsoidal(x):
    i = np.arange(1, x.shape[0] + 1)
    return float(np.sum(i * x * x))


def schwefel(x):
    # Schwefel 1.2 (double sum)
    return float(np.sum(np.cumsum(x) ** 2))


def rosenbrock(x):
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))


def rastrigin(x):
    return float(10.0 * x.shape[0] + np.sum(x * x - 10.0 * np.cos(2 * np.pi * x)))


_IMPL = {
    "sphere": sphere,
    "ellipsoidal": ellipsoidal,
    "schwefel": schwefel,
    "rosenbrock": rosenbrock,
    "rastrigin": rastrigin,
}


def _check_point(spec: ProblemSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != spec.dimension:
        raise ValueError(
            f"expected a point of dimension {spec.dimension}, got shape {x.shape}"
        )
    if np.any(x < spec.lower_bound) or np.any(x > spec.upper_bound):
        raise OutOfDomainError(f"point outside bounds of {spec.function_id}: {x}")
    return x


def evaluate_clean(spec: ProblemSpec, x) -> float:
    """Noise-free objective value at ``x`` (minimisation, optimum value 0)."""
    x = _check_point(spec, x)
    return _IMPL[spec.function_id](x)


def evaluate_noisy(spec: ProblemSpec, x, rng: Optional[np.random.Generator] = None) -> float:
    """Clean value plus one fresh draw of the spec's Gaussian noise.

    ``rng`` is the run's noise stream; a throwaway stream from the
    NoiseSpec seed is used when it is omitted.
    """
    if spec.noise is None:
        raise RuntimeError("evaluate_noisy called on a ProblemSpec without noise")
    if rng is None:
        rng = spec.noise.stream()
    return evaluate_clean(spec, x) + float(rng.normal(spec.noise.mean, spec.noise.std))


def known_optimum(spec: ProblemSpec):
    """Analytic minimiser and minimum of the clean function."""
    if spec.function_id == "rosenbrock":
        x = np.ones(spec.dimension)
    else:
        x = np.zeros(spec.dimension)
    return x, 0.0


def make_problem(function_id: str, dimension: int, noisy: bool = False,
                 noise: Optional[NoiseSpec] = None, **bounds) -> ProblemSpec:
    if noisy and noise is None:
        noise = NoiseSpec()
    return ProblemSpec(function_id, dimension, noise=noise if noisy else None, **bounds)
