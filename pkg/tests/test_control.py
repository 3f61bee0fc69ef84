import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from surrogate_ea.benchmarks import evaluate_clean, make_problem
from surrogate_ea.control import (BudgetExhausted, Cluster, EvaluationLedger, MeritWeights,
                                  UpdatePolicy, accuracy_delta, adapt_cluster_count,
                                  cluster_population, merit, min_distance_to_archive,
                                  min_distances_to_archive, sparseness, sparseness_of,
                                  step_six_update)
from surrogate_ea.evolution import SURROGATE, FitnessRecord, Individual

from oracles import nearest_distance_scan


def surrogate_pop(X, values=None):
    values = np.zeros(len(X)) if values is None else values
    return [Individual(np.asarray(x, float), FitnessRecord(float(v), SURROGATE))
            for x, v in zip(X, values)]


def blobs(rng, per=5, sep=4.0, n=2):
    a = rng.normal(0, 0.05, (per, n)) - sep / 2
    b = rng.normal(0, 0.05, (per, n)) + sep / 2
    return np.vstack([a, b])


# merit, sparseness and accuracy arithmetic

def test_merit_hand_value():
    assert merit(5.0, 1.0, 0.5, 2.0, MeritWeights(1, 1, 1)) == 1.5


def test_merit_weights_off():
    assert merit(3.25, 9.0, 0.4, 7.0, MeritWeights(0, 0, 0)) == 3.25


def test_merit_all_zero():
    assert merit(0.0, 0.0, 0.0, 0.0, MeritWeights(2.0, 3.0, 4.0)) == 0.0


def test_negative_weights_rejected():
    with pytest.raises(ValueError):
        MeritWeights(rho1=-1.0)


def test_sparseness_values():
    assert sparseness_of(10, 5) == 2.0
    assert sparseness_of(1, 20) == 0.05
    assert sparseness_of(0, 3) == 0.0
    c = Cluster(np.arange(10), np.zeros(5), 0.0, 2.0)
    assert sparseness(c, 5) == 2.0


def test_accuracy_delta_values():
    assert accuracy_delta(100, 90) == 10.0
    assert accuracy_delta(3.7, 3.7) == 0.0
    assert accuracy_delta(-50, -55) == 10.0


def test_accuracy_delta_zero_guard():
    assert accuracy_delta(0.0, 0.02, return_flag=True) == (2.0, True)
    assert accuracy_delta(1.0, 0.5, return_flag=True) == (50.0, False)


# distance to archive

def test_distance_to_own_point_is_zero():
    assert min_distance_to_archive([1.0, 2.0], [[1.0, 2.0], [0.0, 0.0]], 3.0) == 0.0


def test_distance_hand_value():
    assert min_distance_to_archive([5.0], [[0.0]], 10.0) == 0.5


def test_distance_empty_archive():
    with pytest.raises(RuntimeError):
        min_distance_to_archive([0.0], np.empty((0, 1)), 1.0)


def test_distance_matches_linear_scan_on_random_queries():
    rng = np.random.default_rng(0)
    spec = make_problem("sphere", 4)
    archive = rng.uniform(-5.12, 5.12, (200, 4))
    Q = rng.uniform(-5.12, 5.12, (1000, 4))
    vec = min_distances_to_archive(Q, archive, spec.diagonal)
    for q, v in zip(Q, vec):
        ref = nearest_distance_scan(q, archive) / spec.diagonal
        assert v == pytest.approx(ref, abs=1e-12)
        assert min_distance_to_archive(q, archive, spec.diagonal) == pytest.approx(ref, abs=1e-12)


# clustering

def test_two_blobs_two_clusters(rng):
    X = blobs(rng)
    cl = cluster_population(surrogate_pop(X), 2, rng)
    groups = sorted(sorted(c.members.tolist()) for c in cl)
    assert groups == [list(range(5)), list(range(5, 10))]


def test_single_cluster_centroid_is_mean(rng):
    X = rng.normal(size=(9, 3))
    (c,) = cluster_population(surrogate_pop(X), 1, rng)
    assert np.allclose(c.centroid, X.mean(0))


def test_singleton_clusters(rng):
    X = rng.normal(size=(6, 2))
    cl = cluster_population(surrogate_pop(X, rng.normal(size=6)), 6, rng)
    assert len(cl) == 6 and all(c.sigma == 0.0 for c in cl)


def test_too_many_clusters(rng):
    with pytest.raises(ValueError):
        cluster_population(surrogate_pop(rng.normal(size=(3, 2))), 4, rng)


def _clusters_with_sigmas(sigmas):
    return [Cluster(np.array([i]), np.zeros(2), s, 1.0, np.array([0.0])) for i, s in
            enumerate(sigmas)]


def test_adapt_no_cluster_over_threshold():
    cl = _clusters_with_sigmas([0.1, 0.2, 0.3])
    assert adapt_cluster_count(cl, MeritWeights(sigma_threshold=1.0)) == 3


def test_adapt_two_of_five():
    cl = _clusters_with_sigmas([0.1, 2.0, 0.3, 1.5, 0.2])
    assert adapt_cluster_count(cl, MeritWeights(sigma_threshold=1.0)) == 7


def test_adapt_singletons_do_not_split(rng):
    X = rng.normal(size=(5, 2))
    cl = cluster_population(surrogate_pop(X, rng.normal(size=5)), 5, rng)
    assert adapt_cluster_count(cl, MeritWeights(sigma_threshold=0.0)) == 5


@given(st.integers(0, 2**32 - 1), st.integers(2, 40), st.integers(1, 6))
def test_clusters_partition_population(seed, size, m):
    rng = np.random.default_rng(seed)
    m = min(m, size)
    pop = surrogate_pop(rng.normal(size=(size, 3)), rng.normal(size=size))
    cl = cluster_population(pop, m, rng)
    members = np.concatenate([c.members for c in cl])
    assert sorted(members.tolist()) == list(range(size))
    for c in cl:
        assert c.sigma >= 0
        assert c.sparseness == len(c.members) / 3


@given(st.integers(0, 2**32 - 1))
def test_merit_is_monotone_in_prediction(seed):
    rng = np.random.default_rng(seed)
    w = MeritWeights(*rng.uniform(0, 3, 3))
    sigma, d, s = rng.uniform(0, 1, 3)
    a, b = np.sort(rng.normal(size=2))
    assert merit(a, sigma, d, s, w) <= merit(b, sigma, d, s, w)


# ledger

def test_ledger_counts_and_archives():
    spec = make_problem("sphere", 2)
    led = EvaluationLedger(spec, budget=3)
    led.evaluate([1.0, 0.0], 0)
    led.evaluate([1.0, 0.0], 0)  # clean repeat served from the archive
    led.evaluate([0.0, 2.0], 1)
    assert led.count == 2 == len(led.points) == len(led.values)
    led.evaluate([0.5, 0.5], 1)
    assert led.exhausted
    with pytest.raises(BudgetExhausted):
        led.evaluate([0.1, 0.1], 2)
    assert led.count == 3


def test_noisy_ledger_never_caches():
    spec = make_problem("sphere", 2, noisy=True)
    led = EvaluationLedger(spec, noise_rng=spec.noise.stream(0))
    a = led.evaluate([1.0, 0.0])
    b = led.evaluate([1.0, 0.0])
    assert led.count == 2 and a != b


def test_ledger_csv():
    spec = make_problem("sphere", 2)
    led = EvaluationLedger(spec)
    led.evaluate([1.0, 2.0], 4)
    buf = io.StringIO()
    led.to_csv(buf)
    assert buf.getvalue().splitlines() == ["x0,x1,value,generation", "1.0,2.0,5.0,4"]


# step six

def _step_six_setup(rng, k=1, budget=None, steps=1):
    spec = make_problem("sphere", 2)
    X = blobs(rng, per=5, sep=4.0)
    vals = np.array([evaluate_clean(spec, x) for x in X])
    pop = surrogate_pop(X, vals)
    clusters = cluster_population(pop, 2, rng)
    ledger = EvaluationLedger(spec, budget=budget)
    ledger.evaluate(np.array([5.0, 5.0]))  # seed archive
    policy = UpdatePolicy(k=k, max_expansion_steps=steps)
    return spec, pop, clusters, ledger, policy


def test_step_six_minimum_evaluations(rng):
    spec, pop, clusters, ledger, policy = _step_six_setup(rng)
    before = ledger.count
    new = step_six_update(clusters, pop, spec, ledger, policy,
                          lambda x: evaluate_clean(spec, x), generation=1)
    probes = spec.dimension  # exact predictor: one probe per dimension
    assert len(new) - probes >= 4
    assert ledger.count - before == len(new)


def test_exact_surrogate_one_probe_per_dimension(rng):
    spec, pop, clusters, ledger, _ = _step_six_setup(rng)
    policy = UpdatePolicy(k=1, max_expansion_steps=8)
    new = step_six_update(clusters, pop, spec, ledger, policy, lambda x: evaluate_clean(spec, x))
    members = {tuple(ind.genome) for ind in pop}
    assert sum(tuple(x) not in members for x, _ in new) == spec.dimension


def test_step_six_budget_is_exact(rng):
    spec, pop, clusters, ledger, policy = _step_six_setup(rng, budget=3)
    with pytest.raises(BudgetExhausted) as info:
        step_six_update(clusters, pop, spec, ledger, policy, lambda x: 0.0)
    assert ledger.count == 3
    assert len(info.value.partial) == 2


def test_step_six_marks_members_true(rng):
    spec, pop, clusters, ledger, policy = _step_six_setup(rng)
    step_six_update(clusters, pop, spec, ledger, policy, lambda x: evaluate_clean(spec, x))
    best = int(np.argmin([evaluate_clean(spec, ind.genome) for ind in pop]))
    assert pop[best].fitness.is_true


def test_update_policy_validation():
    with pytest.raises(ValueError):
        UpdatePolicy(k=0)
    with pytest.raises(ValueError):
        UpdatePolicy(delta_threshold=0.0)


@given(st.integers(0, 2**32 - 1), st.integers(1, 30))
def test_budget_never_exceeded_in_step_six(seed, budget):
    rng = np.random.default_rng(seed)
    spec, pop, clusters, ledger, policy = _step_six_setup(rng, k=3, budget=budget, steps=8)
    start = ledger.count
    try:
        step_six_update(clusters, pop, spec, ledger, policy, lambda x: 1e9)
    except BudgetExhausted:
        pass
    assert ledger.count <= budget
