"""Evolution control for DAFHEA: true-evaluation ledger, population
clustering, the merit function and the model-update policy."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, TextIO, Tuple

import numpy as np

from .benchmarks import ProblemSpec, evaluate_clean, evaluate_noisy
from .evolution import FitnessRecord, Individual, TRUE_EVAL


class BudgetExhausted(RuntimeError):
    """Raised when a true evaluation would exceed the ledger budget.

    ``partial`` carries whatever (point, value) pairs the interrupted
    operation had already committed.
    """

    def __init__(self, message: str = "true-evaluation budget exhausted", partial=None):
        super().__init__(message)
        self.partial = list(partial or [])


class EvaluationLedger:
    """Counts and archives every true evaluation of one run.

    On clean problems a point that was already evaluated is served from
    the archive without a new call (and without counting). Noisy problems
    never cache: every request is a fresh draw.
    """

    def __init__(self, spec: ProblemSpec, budget: Optional[int] = None,
                 objective: Optional[Callable[[np.ndarray], float]] = None,
                 noise_rng: Optional[np.random.Generator] = None,
                 cache: Optional[bool] = None):
        if budget is not None and budget < 0:
            raise ValueError("budget must be >= 0")
        self.spec = spec
        self.budget = budget
        if objective is None:
            if spec.noisy:
                rng = noise_rng if noise_rng is not None else spec.noise.stream()
                objective = lambda x: evaluate_noisy(spec, x, rng)  # noqa: E731
            else:
                objective = lambda x: evaluate_clean(spec, x)  # noqa: E731
        self._objective = objective
        self.cache = (not spec.noisy) if cache is None else cache
        self._points: List[np.ndarray] = []
        self._values: List[float] = []
        self._generations: List[int] = []
        self._index: Dict[bytes, int] = {}
        self._stack: Optional[np.ndarray] = None

    @property
    def count(self) -> int:
        return len(self._values)

    def __len__(self) -> int:
        return self.count

    @property
    def remaining(self) -> float:
        return math.inf if self.budget is None else self.budget - self.count

    @property
    def exhausted(self) -> bool:
        return self.remaining <= 0

    @property
    def points(self) -> np.ndarray:
        if self._stack is None or self._stack.shape[0] != self.count:
            self._stack = (np.array(self._points) if self._points
                           else np.empty((0, self.spec.dimension)))
        return self._stack

    @property
    def values(self) -> np.ndarray:
        return np.array(self._values)

    @property
    def generations(self) -> np.ndarray:
        return np.array(self._generations, dtype=int)

    def lookup(self, x) -> Optional[float]:
        if not self.cache:
            return None
        i = self._index.get(np.asarray(x, dtype=float).tobytes())
        return None if i is None else self._values[i]

    def evaluate(self, x, generation: int = -1) -> float:
        x = np.array(x, dtype=float)
        hit = self.lookup(x)
        if hit is not None:
            return hit
        if self.exhausted:
            raise BudgetExhausted()
        value = float(self._objective(x))
        self._index.setdefault(x.tobytes(), len(self._values))
        self._points.append(x)
        self._values.append(value)
        self._generations.append(int(generation))
        return value

    def best(self) -> Tuple[np.ndarray, float]:
        if not self._values:
            raise RuntimeError("ledger is empty")
        i = int(np.argmin(self._values))
        return self._points[i].copy(), self._values[i]

    def recent(self, size: int) -> Tuple[np.ndarray, np.ndarray]:
        """The last ``size`` archived points and values."""
        return self.points[-size:], self.values[-size:]

    def to_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh)
        w.writerow([f"x{i}" for i in range(self.spec.dimension)] + ["value", "generation"])
        for x, v, g in zip(self._points, self._values, self._generations):
            w.writerow([repr(float(c)) for c in x] + [repr(v), g])


@dataclass
class Cluster:
    members: np.ndarray
    centroid: np.ndarray
    sigma: float
    sparseness: float
    values: np.ndarray = field(repr=False, default=None)


@dataclass
class MeritWeights:
    rho1: float = 1.0
    rho2: float = 1.0
    rho3: float = 1.0
    sigma_threshold: Optional[float] = None  # None: std of all predicted values

    def __post_init__(self):
        if min(self.rho1, self.rho2, self.rho3) < 0:
            raise ValueError("merit weights must be non-negative")


@dataclass
class UpdatePolicy:
    k: int = 5
    delta_threshold: float = 5.0  # percent
    max_expansion_steps: int = 8
    base_step: float = 0.01  # first probe offset, fraction of the probe scale
    probe_scale: str = "population"  # "population": per-coordinate spread; "range": box width
    evaluate_raw_centroid: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not self.delta_threshold > 0:
            raise ValueError("delta_threshold must be > 0")
        if self.max_expansion_steps < 1:
            raise ValueError("max_expansion_steps must be >= 1")


def _kmeans_pp(X: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
    centers = [X[int(rng.integers(len(X)))]]
    d2 = ((X - centers[0]) ** 2).sum(1)
    for _ in range(1, m):
        total = d2.sum()
        if total <= 0:
            break
        idx = int(rng.choice(len(X), p=d2 / total))
        centers.append(X[idx])
        d2 = np.minimum(d2, ((X - X[idx]) ** 2).sum(1))
    return np.array(centers)


def kmeans(X, m: int, rng: np.random.Generator, max_iter: int = 50) -> np.ndarray:
    """Lloyd's algorithm with k-means++ seeding; returns a label per row.

    Fewer than ``m`` clusters come back only when X has fewer than ``m``
    distinct rows.
    """
    X = np.asarray(X, dtype=float)
    if m > len(X):
        raise ValueError(f"cannot form {m} clusters from {len(X)} points")
    centers = _kmeans_pp(X, m, rng)
    labels = np.full(len(X), -1)
    for _ in range(max_iter):
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(2)
        new = np.argmin(d2, axis=1)
        # refill empty clusters with the point farthest from its centre
        for c in range(len(centers)):
            if not np.any(new == c):
                far = int(np.argmax(d2[np.arange(len(X)), new]))
                if d2[far, new[far]] <= 0:
                    continue
                new[far] = c
                centers[c] = X[far]
        if np.array_equal(new, labels):
            break
        labels = new
        for c in range(len(centers)):
            sel = labels == c
            if sel.any():
                centers[c] = X[sel].mean(0)
    _, labels = np.unique(labels, return_inverse=True)
    return labels.ravel()


def cluster_population(pop: Sequence[Individual], m: int, rng: np.random.Generator,
                       dimension: Optional[int] = None) -> List[Cluster]:
    """Partition the population into ``m`` Euclidean clusters.

    Each cluster's sigma is the standard deviation of its members'
    fitness values (the surrogate predictions in DAFHEA).
    """
    if m > len(pop):
        raise ValueError(f"cannot form {m} clusters from {len(pop)} individuals")
    X = np.array([ind.genome for ind in pop])
    vals = np.array([ind.fitness.value for ind in pop])
    n = dimension or X.shape[1]
    labels = kmeans(X, m, rng)
    clusters = []
    for c in range(labels.max() + 1):
        idx = np.flatnonzero(labels == c)
        v = vals[idx]
        clusters.append(Cluster(idx, X[idx].mean(0), float(v.std()), sparseness_of(len(idx), n), v))
    return clusters


def sparseness_of(size: int, n: int) -> float:
    if n < 1:
        raise ValueError("dimension must be >= 1")
    return size / n


def sparseness(cluster: Cluster, n: int) -> float:
    """Members per problem dimension."""
    return sparseness_of(len(cluster.members), n)


def default_sigma_threshold(clusters: Sequence[Cluster]) -> float:
    vals = np.concatenate([c.values for c in clusters])
    return float(vals.std())


def adapt_cluster_count(clusters: Sequence[Cluster], weights: MeritWeights) -> int:
    """Current count plus one per cluster whose spread reaches the threshold."""
    thr = weights.sigma_threshold
    if thr is None:
        thr = default_sigma_threshold(clusters)
    extra = sum(1 for c in clusters if c.sigma > 0 and c.sigma >= thr)
    return len(clusters) + extra


def min_distance_to_archive(x, archive, normalization: float) -> float:
    """Distance to the nearest archived point over the normalising length."""
    pts = archive.points if isinstance(archive, EvaluationLedger) else np.asarray(archive)
    if len(pts) == 0:
        raise RuntimeError("archive is empty")
    d = np.sqrt(((pts - np.asarray(x, dtype=float)) ** 2).sum(1).min())
    return float(min(d / normalization, 1.0))


def min_distances_to_archive(X, archive, normalization: float) -> np.ndarray:
    pts = archive.points if isinstance(archive, EvaluationLedger) else np.asarray(archive)
    if len(pts) == 0:
        raise RuntimeError("archive is empty")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    d2 = (X * X).sum(1)[:, None] + (pts * pts).sum(1)[None, :] - 2 * X @ pts.T
    d = np.sqrt(np.maximum(d2.min(1), 0.0))
    return np.minimum(d / normalization, 1.0)


def merit(f_a: float, sigma: float, d: float, s: float, weights: MeritWeights) -> float:
    return f_a - weights.rho1 * sigma - weights.rho2 * d - weights.rho3 * s


def accuracy_delta(a_true: float, a_pred: float, return_flag: bool = False):
    """Percentage error of a prediction.

    At a true value of exactly zero the ratio is undefined; the absolute
    error times 100 is returned instead and the flag (when requested) is set.
    """
    if a_true == 0:
        delta, guarded = abs(a_pred) * 100.0, True
    else:
        delta, guarded = abs((a_true - a_pred) / a_true) * 100.0, False
    return (delta, guarded) if return_flag else delta


def _nearest(X: np.ndarray, i: int, k: int) -> np.ndarray:
    d = ((X - X[i]) ** 2).sum(1)
    d[i] = np.inf
    return np.argsort(d, kind="stable")[:k]


def probe_scale(X: np.ndarray, spec: ProblemSpec, policy: UpdatePolicy) -> np.ndarray:
    """Per-coordinate length that expansion probe offsets are multiples of."""
    if policy.probe_scale == "range":
        return spec.span.copy()
    spread = X.max(0) - X.min(0)
    return np.where(spread > 0, spread, 1e-9 * spec.span)


def step_six_update(clusters: Sequence[Cluster], pop: List[Individual], spec: ProblemSpec,
                    ledger: EvaluationLedger, policy: UpdatePolicy,
                    predict: Callable[[np.ndarray], float],
                    generation: int = -1) -> List[Tuple[np.ndarray, float]]:
    """True-evaluate the points the update policy asks for.

    Population members that get evaluated have their fitness replaced by
    the true value. Returns every (point, value) pair requested this call,
    for retraining. On budget exhaustion the pairs committed so far ride on
    the raised BudgetExhausted.
    """
    X = np.array([ind.genome for ind in pop])
    values = np.array([ind.fitness.value for ind in pop])
    new: List[Tuple[np.ndarray, float]] = []
    seen = set()

    def true_eval_member(i: int) -> None:
        if i in seen:
            return
        seen.add(i)
        v = ledger.evaluate(X[i], generation)
        pop[i].fitness = FitnessRecord(v, TRUE_EVAL)
        new.append((X[i].copy(), v))

    def true_eval_point(x: np.ndarray) -> float:
        v = ledger.evaluate(x, generation)
        new.append((x.copy(), v))
        return v

    try:
        best = int(np.argmin(values))
        home = next(ci for ci, c in enumerate(clusters) if best in c.members)
        true_eval_member(best)
        for j in _nearest(X, best, policy.k):
            true_eval_member(int(j))
        for ci, c in enumerate(clusters):
            if ci == home:
                continue
            d = ((X[c.members] - c.centroid) ** 2).sum(1)
            rep = int(c.members[int(np.argmin(d))])
            if policy.evaluate_raw_centroid:
                true_eval_point(spec.clip(c.centroid))
            true_eval_member(rep)
            for j in _nearest(X, rep, policy.k):
                true_eval_member(int(j))
        origin = X[best]
        scale = probe_scale(X, spec, policy)
        for dim in range(spec.dimension):
            for step in range(policy.max_expansion_steps):
                offset = policy.base_step * (2 ** step) * scale[dim]
                probe = origin.copy()
                if probe[dim] + offset <= spec.upper_bound[dim]:
                    probe[dim] += offset
                else:
                    probe[dim] -= offset
                probe = spec.clip(probe)
                truth = true_eval_point(probe)
                if accuracy_delta(truth, predict(probe)) <= policy.delta_threshold:
                    break
    except BudgetExhausted as exc:
        raise BudgetExhausted(str(exc), partial=new) from None
    return new
