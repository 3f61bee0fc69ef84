"""Kernel ordinal regression (ranking SVM) over preference pairs.

A pair ``(i, j, r)`` states that point ``i`` is preferred over point ``j``
when ``r = +1`` (lower objective) and the reverse when ``r = -1``. The
2-norm soft margin is handled by adding ``I / C`` to the pair Gram matrix
and solving the resulting hard-margin dual, a non-negative QP, with an
active-set method.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .kernels import KernelSpec, cross_gram, gram

Pair = Tuple[int, int, int]


class InconsistentPairWarning(UserWarning):
    """Identical points were given different ranks; the pair was dropped."""


@dataclass(frozen=True)
class RankingModel:
    kernel: KernelSpec
    points: np.ndarray
    pairs: Tuple[Pair, ...]
    dual: np.ndarray
    C: float
    expansion: np.ndarray  # per-point coefficient of k(x_p, .)

    def scores(self, X) -> np.ndarray:
        """Utility of each row of X; higher is better. Only the order is meaningful."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        uniq, inverse = np.unique(X, axis=0, return_inverse=True)
        s = cross_gram(self.kernel, uniq, self.points) @ self.expansion
        return s[np.ravel(inverse)]


def build_pairs(fitness: Sequence[float], strategy: str = "adjacent") -> List[Pair]:
    """Preference pairs from objective values (lower is better).

    ``adjacent`` links consecutive rank levels after sorting (m - 1 pairs
    without ties); ``full`` emits every strictly ordered pair. Pairs depend
    on the order of ``fitness`` only.
    """
    f = np.asarray(fitness, dtype=float)
    m = f.shape[0]
    pairs: List[Pair] = []
    if strategy == "full":
        for i in range(m):
            for j in range(i + 1, m):
                if f[i] < f[j]:
                    pairs.append((i, j, 1))
                elif f[i] > f[j]:
                    pairs.append((i, j, -1))
        return pairs
    if strategy != "adjacent":
        raise ValueError(f"unknown pair strategy {strategy!r}")
    order = np.argsort(f, kind="stable")
    levels: List[List[int]] = []
    for idx in order:
        if levels and f[levels[-1][0]] == f[idx]:
            levels[-1].append(int(idx))
        else:
            levels.append([int(idx)])
    for better, worse in zip(levels, levels[1:]):
        for i in better:
            for j in worse:
                pairs.append((i, j, 1))
    return pairs


def _drop_inconsistent(X: np.ndarray, pairs: List[Pair]) -> List[Pair]:
    kept = []
    for i, j, r in pairs:
        if np.array_equal(X[i], X[j]):
            warnings.warn(f"points {i} and {j} are identical but ranked differently; "
                          "pair dropped", InconsistentPairWarning, stacklevel=3)
            continue
        kept.append((i, j, r))
    return kept


def _nonneg_qp(A: np.ndarray, tol: float = 1e-10, max_iter: int = None) -> np.ndarray:
    """argmin 0.5 b'Ab - sum(b) subject to b >= 0, for positive definite A.

    A primal-dual active set pass swaps many coordinates per solve and
    usually settles in a handful of iterations. If it cycles, Lawson-Hanson
    takes over from the best feasible point it reached.
    """
    beta, start = _pdas(A, tol)
    return beta if beta is not None else _lawson_hanson(A, tol, max_iter, start)


def _objective(A, beta) -> float:
    return 0.5 * float(beta @ A @ beta) - float(beta.sum())


def _pdas(A: np.ndarray, tol: float, max_iter: int = 50):
    p = A.shape[0]
    ones = np.ones(p)
    scale = max(1.0, float(np.abs(np.diag(A)).max()))
    free = np.ones(p, dtype=bool)
    seen = set()
    start, start_obj = np.zeros(p), 0.0
    for _ in range(max_iter):
        beta = np.zeros(p)
        F = np.flatnonzero(free)
        if F.size:
            try:
                beta[F] = np.linalg.solve(A[np.ix_(F, F)], ones[F])
            except np.linalg.LinAlgError:
                break
        grad = A @ beta - ones
        new = (free & (beta > 0)) | (~free & (grad < -tol * scale))
        if np.array_equal(new, free):
            return beta, None
        clipped = np.maximum(beta, 0.0)
        obj = _objective(A, clipped)
        if obj < start_obj:
            start, start_obj = clipped, obj
        key = new.tobytes()
        if key in seen:
            break
        seen.add(key)
        free = new
    return None, start


def _lawson_hanson(A: np.ndarray, tol: float = 1e-10, max_iter: int = None,
                   start: np.ndarray = None) -> np.ndarray:
    """Grow the free set with the most violated coordinate, solve the
    equality-constrained subproblem, and step back to the feasible
    boundary when a free coordinate goes negative. ``start`` is any
    feasible (non-negative) point to begin from."""
    p = A.shape[0]
    max_iter = max_iter or 10 * p + 50
    beta = np.zeros(p) if start is None else np.array(start, dtype=float)
    free = beta > 0
    ones = np.ones(p)
    scale = max(1.0, float(np.abs(np.diag(A)).max()))
    pending = bool(free.any())  # a warm start first settles its own free set
    for _ in range(max_iter):
        if not pending:
            grad = A @ beta - ones
            cand = np.where(~free, grad, np.inf)
            t = int(np.argmin(cand))
            if cand[t] >= -tol * scale:
                break
            free[t] = True
        pending = False
        while True:
            F = np.flatnonzero(free)
            sub = A[np.ix_(F, F)]
            try:
                s = np.linalg.solve(sub, ones[F])
            except np.linalg.LinAlgError:
                s = np.linalg.lstsq(sub, ones[F], rcond=None)[0]
            if np.all(s > 0):
                beta[:] = 0.0
                beta[F] = s
                break
            neg = s <= 0
            step = np.min(beta[F][neg] / (beta[F][neg] - s[neg]))
            beta[F] = beta[F] + step * (s - beta[F])
            zero = F[beta[F] <= 1e-15]
            beta[zero] = 0.0
            free[zero] = False
            if not free.any():
                break
    return beta


def train_ordinal(points, fitness, kernel: KernelSpec, C: float = 1.0e6,
                  pair_strategy: str = "adjacent") -> RankingModel:
    """Fit a ranking function whose order agrees with ``fitness`` (lower is better).

    Only the order of ``fitness`` is used, so any strictly increasing
    transform of it yields the same model.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    f = np.asarray(fitness, dtype=float)
    if X.shape[0] != f.shape[0]:
        raise ValueError("points and fitness have different lengths")
    if not C > 0:
        raise ValueError("C must be > 0")
    pairs = _drop_inconsistent(X, build_pairs(f, pair_strategy))
    if not pairs:
        raise ValueError("no preference pairs: all ranks tied")
    P = len(pairs)
    D = np.zeros((P, X.shape[0]))
    for k, (i, j, r) in enumerate(pairs):
        D[k, i] += r
        D[k, j] -= r
    K = gram(kernel, X)
    A = D @ K @ D.T + np.eye(P) / C
    A = 0.5 * (A + A.T)
    beta = _nonneg_qp(A)
    return RankingModel(kernel, X.copy(), tuple(pairs), beta, float(C), D.T @ beta)


def rank(model: RankingModel, candidates) -> np.ndarray:
    """Permutation of candidate indices, best (highest score) first."""
    return rank_by_scores(model.scores(candidates))


def rank_by_scores(scores) -> np.ndarray:
    return np.argsort(-np.asarray(scores, dtype=float), kind="stable")


def kendall_tau(a, b) -> float:
    """Kendall tau-a between two score vectors (same orientation)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = a.shape[0]
    if n < 2:
        return 1.0
    da = np.sign(a[:, None] - a[None, :])
    db = np.sign(b[:, None] - b[None, :])
    iu = np.triu_indices(n, 1)
    return float((da[iu] * db[iu]).sum() / len(iu[0]))
