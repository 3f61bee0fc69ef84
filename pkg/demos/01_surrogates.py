"""
Fitting the two surrogates
==========================

An epsilon-SVR regresses fitness values; a ranking SVM only learns their
order. Both are trained here on points sampled from sphere(2).
"""

import io

import numpy as np

from surrogate_ea import KernelSpec, SvrConfig, make_problem, train_svr
from surrogate_ea.benchmarks import evaluate_clean
from surrogate_ea.ordinal import kendall_tau, train_ordinal

rng = np.random.default_rng(0)
spec = make_problem("sphere", 2)
X = rng.uniform(-2, 2, (60, 2))
y = np.array([evaluate_clean(spec, x) for x in X])

# Regression surrogate: gaussian kernel, variance from the median heuristic
model = train_svr(X, y, SvrConfig())
Q = rng.uniform(-2, 2, (200, 2))
truth = np.array([evaluate_clean(spec, q) for q in Q])
err = np.abs(model.predict_many(Q) - truth)
print("SVR kernel:", model.kernel.describe())
print("support vectors: %d of %d" % (len(model.support), len(X)))
print("held-out abs error: median %.3f, max %.3f" % (np.median(err), err.max()))

# The plain-text dump is what the README documents
buf = io.StringIO()
model.dump(buf)
print("first dump lines:")
print("\n".join(buf.getvalue().splitlines()[:6]))

# Ranking surrogate: degree-2 polynomial kernel, adjacent-rank pairs
ranker = train_ordinal(X, y, KernelSpec.polynomial(2, 1.0))
print("ranking pairs:", len(ranker.pairs))
print("training Kendall tau: %.3f" % kendall_tau(ranker.scores(X), -y))
print("held-out Kendall tau: %.3f" % kendall_tau(ranker.scores(Q), -truth))
