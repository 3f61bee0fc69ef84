"""
DAFHEA-II on noisy objectives
=============================

Every observation carries N(0, 1) noise. DAFHEA-II scores offspring with
a set of SVR models and pays for a full true evaluation of the population
only every few generations. Reported fitness is the clean value at the
returned point.
"""

import logging

from surrogate_ea import make_problem
from surrogate_ea.evolution import PopulationConfig
from surrogate_ea.optimizers import Dafhea2Config, run_canonical_ga, run_dafhea2

logging.basicConfig(level=logging.WARNING)

for fid, target in (("sphere", 1e-1), ("rastrigin", 5.0)):
    spec = make_problem(fid, 5, noisy=True)
    for seed in range(2):
        ga = run_canonical_ga(spec, PopulationConfig(), seed=seed, target=target)
        d2 = run_dafhea2(spec, Dafhea2Config(), seed=seed, target=target)
        print("%-9s seed %d  GA %6s  DAFHEA-II %6s evaluations to %g" % (
            fid, seed, ga.evals_to_reach(target), d2.evals_to_reach(target), target))
    print("  models per refit:", d2.metadata["model_counts"][:12])
