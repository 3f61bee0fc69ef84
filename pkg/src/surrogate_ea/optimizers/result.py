from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, TextIO

import numpy as np

from ..benchmarks import ProblemSpec, evaluate_clean


@dataclass(frozen=True)
class TraceRow:
    generation: int
    best_fitness: float  # clean value at the incumbent
    best_predicted: float  # nan when the method has no regression surrogate
    ledger_count: int


@dataclass
class RunResult:
    method: str
    function: str
    dimension: int
    noisy: bool
    seed: int
    best_x: np.ndarray
    best_value: float  # value the optimizer observed for best_x
    best_fitness: float  # clean value at best_x
    mean_fitness: float  # mean clean value over the final population
    true_evals: int
    generations: int
    termination: str  # "max_generations" | "budget" | "target"
    trace: List[TraceRow] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def truncated(self) -> bool:
        return self.termination == "budget"

    def evals_to_reach(self, target: float) -> Optional[int]:
        """Ledger count at the first generation whose incumbent met ``target``."""
        for row in self.trace:
            if row.best_fitness <= target:
                return row.ledger_count
        return None

    def same_as(self, other: "RunResult") -> bool:
        """Deep equality with exact array comparison and nan == nan."""
        return _eq(asdict(self), asdict(other))

    def trace_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh)
        w.writerow(["generation", "best_true_fitness", "best_predicted", "ledger_count"])
        for r in self.trace:
            w.writerow([r.generation, repr(r.best_fitness), repr(r.best_predicted), r.ledger_count])


def _eq(a, b) -> bool:
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(_eq(a[k], b[k]) for k in a)
    if isinstance(a, (list, tuple)) and isinstance(b, (list, tuple)):
        return len(a) == len(b) and all(_eq(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return np.array_equal(a, b)
    if isinstance(a, float) and isinstance(b, float) and math.isnan(a) and math.isnan(b):
        return True
    return a == b


def clean_score(spec: ProblemSpec, x) -> float:
    """Noise-free value used for reporting; not an optimizer evaluation."""
    return evaluate_clean(spec, x)
