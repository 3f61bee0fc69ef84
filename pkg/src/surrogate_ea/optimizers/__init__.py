"""End-to-end optimizers sharing the GA core: canonical GA, DAFHEA, DAFHEA-II, PrefRank."""

from .canonical import run_canonical_ga
from .dafhea import DafheaConfig, SolverAbort, run_dafhea
from .dafhea2 import Dafhea2Config, assign_model, fit_multi_model, run_dafhea2
from .prefrank import PrefRankConfig, run_prefrank
from .result import RunResult, TraceRow, clean_score

METHODS = {
    "canonical": run_canonical_ga,
    "dafhea": run_dafhea,
    "dafhea2": run_dafhea2,
    "prefrank": run_prefrank,
}

__all__ = [
    "METHODS", "DafheaConfig", "Dafhea2Config", "PrefRankConfig", "RunResult", "SolverAbort",
    "TraceRow", "assign_model", "clean_score", "fit_multi_model", "run_canonical_ga",
    "run_dafhea", "run_dafhea2", "run_prefrank",
]
