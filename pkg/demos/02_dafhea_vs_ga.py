"""
DAFHEA against the canonical GA
===============================

Both optimizers chase the same target on sphere(5) from the same seed.
DAFHEA truly evaluates only the points its evolution control asks for
and lets the SVR score everything else.
"""

import logging

from surrogate_ea import make_problem
from surrogate_ea.evolution import PopulationConfig
from surrogate_ea.optimizers import DafheaConfig, run_canonical_ga, run_dafhea

logging.basicConfig(level=logging.WARNING)
spec = make_problem("sphere", 5)
target = 1e-4

for seed in range(3):
    ga = run_canonical_ga(spec, PopulationConfig(), seed=seed, target=target)
    daf = run_dafhea(spec, DafheaConfig(), seed=seed, target=target)
    print("seed %d  GA %5s evaluations   DAFHEA %5s evaluations  (%d generations)" % (
        seed, ga.evals_to_reach(target), daf.evals_to_reach(target), daf.generations))

# The trace holds the incumbent and the ledger count per generation
print("DAFHEA trace, every 10th generation:")
for row in daf.trace[::10]:
    print("  gen %3d  best %.2e  evaluations %d" % (row.generation, row.best_fitness,
                                                   row.ledger_count))
print("surrogate refits:", daf.metadata["retrains"])
