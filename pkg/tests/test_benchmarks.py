import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from surrogate_ea.benchmarks import (DEFAULT_BOUNDS, FUNCTIONS, NoiseSpec, OutOfDomainError,
                                     ProblemSpec, evaluate_clean, evaluate_noisy,
                                     known_optimum, make_problem)


def test_sphere_optimum_is_zero():
    assert evaluate_clean(make_problem("sphere", 5), np.zeros(5)) == 0.0


def test_rosenbrock_optimum_is_zero():
    assert evaluate_clean(make_problem("rosenbrock", 5), np.ones(5)) == 0.0


def test_sphere_hand_value():
    assert evaluate_clean(make_problem("sphere", 2), [1.0, 2.0]) == 5.0


def test_ellipsoidal_weights_coordinates_by_index():
    assert evaluate_clean(make_problem("ellipsoidal", 2), [1.0, 1.0]) == 3.0


def test_schwefel_is_cumulative_sum_form():
    # (1)^2 + (1+2)^2 + (1+2+3)^2
    assert evaluate_clean(make_problem("schwefel", 3), [1.0, 2.0, 3.0]) == 46.0


def test_rastrigin_at_half():
    # 10n + sum(x^2 - 10 cos(2 pi x)) with x = 0.5: cos(pi) = -1
    v = evaluate_clean(make_problem("rastrigin", 2), [0.5, 0.5])
    assert v == pytest.approx(20 + 2 * (0.25 + 10))


def test_rosenbrock_hand_value():
    # 100 (x2 - x1^2)^2 + (1 - x1)^2 at (0, 0)
    assert evaluate_clean(make_problem("rosenbrock", 2), [0.0, 0.0]) == 1.0


def test_dimension_mismatch_is_invalid_argument():
    with pytest.raises(ValueError):
        evaluate_clean(make_problem("sphere", 3), np.zeros(2))


def test_out_of_bounds_is_out_of_domain():
    spec = make_problem("sphere", 2)
    with pytest.raises(OutOfDomainError):
        evaluate_clean(spec, [6.0, 0.0])


def test_noisy_without_noise_spec_is_invalid_state():
    with pytest.raises(RuntimeError):
        evaluate_noisy(make_problem("sphere", 2), np.zeros(2))


def test_default_bounds():
    assert DEFAULT_BOUNDS["sphere"] == (-5.12, 5.12)
    assert DEFAULT_BOUNDS["rosenbrock"] == (-2.048, 2.048)
    assert DEFAULT_BOUNDS["schwefel"] == (-65.536, 65.536)
    spec = make_problem("rastrigin", 4)
    assert np.all(spec.lower_bound == -5.12) and np.all(spec.upper_bound == 5.12)


def test_bounds_override_and_validation():
    spec = make_problem("sphere", 2, lower_bound=-1.0, upper_bound=[1.0, 2.0])
    assert list(spec.upper_bound) == [1.0, 2.0]
    with pytest.raises(ValueError):
        ProblemSpec("sphere", 2, lower_bound=1.0, upper_bound=1.0)
    with pytest.raises(ValueError):
        ProblemSpec("sphere", 0)
    with pytest.raises(ValueError):
        ProblemSpec("griewank", 2)
    with pytest.raises(ValueError):
        # the rosenbrock optimum (ones) would fall outside
        make_problem("rosenbrock", 2, lower_bound=-2.0, upper_bound=0.5)


@pytest.mark.parametrize("fid,n", [("sphere", 10), ("rosenbrock", 20), ("schwefel", 5),
                                   ("ellipsoidal", 3), ("rastrigin", 7)])
def test_known_optimum_evaluates_to_its_value(fid, n):
    spec = make_problem(fid, n)
    x, f = known_optimum(spec)
    assert f == 0.0
    assert abs(evaluate_clean(spec, x) - f) <= 1e-12
    assert np.all(x >= spec.lower_bound) and np.all(x <= spec.upper_bound)


def test_known_optimum_vectors():
    assert np.array_equal(known_optimum(make_problem("sphere", 10))[0], np.zeros(10))
    assert np.array_equal(known_optimum(make_problem("rosenbrock", 20))[0], np.ones(20))


def test_noise_mean_at_optimum():
    spec = make_problem("sphere", 3, noisy=True)
    rng = spec.noise.stream(7)
    vals = np.array([evaluate_noisy(spec, np.zeros(3), rng) for _ in range(100_000)])
    assert abs(vals.mean()) <= 0.013


def test_noise_variance_at_fixed_point():
    spec = make_problem("sphere", 3, noisy=True)
    rng = spec.noise.stream(8)
    x = np.array([1.0, -0.5, 0.25])
    vals = np.array([evaluate_noisy(spec, x, rng) for _ in range(100_000)])
    assert abs(vals.var(ddof=1) - 1.0) <= 0.02


def test_successive_noisy_calls_differ():
    spec = make_problem("sphere", 2, noisy=True)
    rng = spec.noise.stream(1)
    assert evaluate_noisy(spec, np.zeros(2), rng) != evaluate_noisy(spec, np.zeros(2), rng)


def test_tiny_variance_is_close_to_clean():
    spec = make_problem("sphere", 2, noisy=True, noise=NoiseSpec(variance=1e-12))
    x = np.array([1.0, 1.0])
    assert abs(evaluate_noisy(spec, x) - evaluate_clean(spec, x)) < 1e-5


def test_noise_variance_must_be_positive():
    with pytest.raises(ValueError):
        NoiseSpec(variance=0.0)


def test_noise_pdf_peak():
    assert NoiseSpec().pdf(0.0) == pytest.approx(1 / np.sqrt(2 * np.pi))


def test_noise_stream_independent_of_ga_stream():
    ga = np.random.default_rng([3, 0]).random(5)
    noise = NoiseSpec().stream(3).random(5)
    assert not np.allclose(ga, noise)


def _box(fid, n):
    lo, hi = DEFAULT_BOUNDS[fid]
    return arrays(np.float64, n, elements=st.floats(lo, hi, allow_nan=False))


@given(_box("sphere", 6))
def test_clean_evaluation_is_deterministic_and_nonnegative(x):
    for fid in FUNCTIONS:
        spec = make_problem(fid, 6)
        y = spec.clip(x)
        a, b = evaluate_clean(spec, y), evaluate_clean(spec, y)
        assert a == b and a >= 0.0


@given(_box("sphere", 6), st.randoms(use_true_random=False))
def test_permutation_invariance(x, r):
    perm = list(range(6))
    r.shuffle(perm)
    for fid in ("sphere", "rastrigin"):
        spec = make_problem(fid, 6)
        assert evaluate_clean(spec, x[perm]) == pytest.approx(evaluate_clean(spec, x), rel=1e-12,
                                                              abs=1e-9)


@given(arrays(np.float64, 4, elements=st.floats(-2.56, 2.56, allow_nan=False)))
def test_sphere_scaling(x):
    spec = make_problem("sphere", 4)
    assert evaluate_clean(spec, 2 * x) == pytest.approx(4 * evaluate_clean(spec, x), rel=1e-12,
                                                        abs=1e-300)


@given(_box("sphere", 5))
def test_ellipsoidal_is_separable(x):
    spec = make_problem("ellipsoidal", 5)
    parts = [(i + 1) * x[i] ** 2 for i in range(5)]
    assert evaluate_clean(spec, x) == pytest.approx(sum(parts), rel=1e-12, abs=1e-300)


@given(st.integers(0, 2**32 - 1))
def test_noisy_minus_clean_is_noise_draw(seed):
    spec = make_problem("sphere", 2, noisy=True)
    rng = spec.noise.stream(seed)
    ref = spec.noise.stream(seed)
    x = np.array([0.3, -1.2])
    assert evaluate_noisy(spec, x, rng) - evaluate_clean(spec, x) == pytest.approx(
        ref.normal(0.0, 1.0), abs=1e-12)
