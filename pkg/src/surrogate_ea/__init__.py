"""Surrogate-assisted evolutionary optimization on a shared real-coded GA.

Benchmarks, GA primitives, SVR and ranking-SVM surrogates, DAFHEA-style
evolution control and the optimizers built from them.
"""

from .benchmarks import (DEFAULT_BOUNDS, FUNCTIONS, NoiseSpec, OutOfDomainError, ProblemSpec,
                         evaluate_clean, evaluate_noisy, known_optimum, make_problem)
from .control import EvaluationLedger, MeritWeights, UpdatePolicy
from .evolution import FitnessRecord, Individual, PopulationConfig
from .kernels import KernelSpec, gram
from .ordinal import RankingModel, kendall_tau, rank, train_ordinal
from .svr import SurrogateModel, SvrConfig, load_model, predict, train_svr

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_BOUNDS", "FUNCTIONS", "EvaluationLedger", "FitnessRecord", "Individual",
    "KernelSpec", "MeritWeights", "NoiseSpec", "OutOfDomainError", "PopulationConfig",
    "ProblemSpec", "RankingModel", "SurrogateModel", "SvrConfig", "UpdatePolicy",
    "evaluate_clean", "evaluate_noisy", "gram", "kendall_tau", "known_optimum", "load_model",
    "make_problem", "predict", "rank", "train_ordinal", "train_svr",
]
