import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from tailrisk import (DomainError, EmpiricalDistribution, StepFunction, cvar, cvar_weights,
                      decreasing_rearrangement, maximal_function, quantile)

from conftest import random_dist


def test_sorted_and_order_round_trip():
    d = EmpiricalDistribution.from_samples([3.0, 1.0, 2.0], [0.2, 0.3, 0.5])
    assert d.values.tolist() == [1.0, 2.0, 3.0]
    assert d.weights.tolist() == [0.3, 0.5, 0.2]
    assert d.to_input_order(d.values).tolist() == [3.0, 1.0, 2.0]
    assert not d.renormalized


def test_weights_renormalized_and_flagged():
    d = EmpiricalDistribution.from_samples([1.0, 2.0], [1.0, 3.0])
    assert d.renormalized
    assert np.allclose(d.weights, [0.25, 0.75])


@pytest.mark.parametrize("vals,w", [([], None), ([1.0, np.nan], None), ([1.0], [0.0]),
                                     ([1.0, 2.0], [1.0]), ([np.inf], None)])
def test_bad_input_rejected(vals, w):
    with pytest.raises(DomainError):
        EmpiricalDistribution.from_samples(vals, w)


def test_arrays_are_read_only():
    d = EmpiricalDistribution.from_samples([1.0, 2.0])
    with pytest.raises(ValueError):
        d.values[0] = 5.0


def test_rearrangement_merges_ties():
    d = EmpiricalDistribution.from_samples([-3.0, 1.0, 3.0, 2.0])
    r = decreasing_rearrangement(d)
    assert r.levels.tolist() == [3.0, 2.0, 1.0]
    assert np.allclose(r.breakpoints, [0.5, 0.75, 1.0])
    # right-continuous, zero at t = 1
    assert r(0.0) == 3.0 and r(0.5) == 2.0 and r(0.49) == 3.0 and r(1.0) == 0.0


def test_maximal_function_values():
    d = EmpiricalDistribution.from_samples([1.0, 2.0])
    r = decreasing_rearrangement(d)
    assert maximal_function(r, 0.5) == 2.0
    assert maximal_function(r, 1.0) == 1.5
    assert maximal_function(r, 0.25) == 2.0
    with pytest.raises(DomainError):
        maximal_function(r, 0.0)


def test_step_function_validation():
    with pytest.raises(DomainError):
        StepFunction(np.array([0.5, 0.4, 1.0]), np.array([1.0, 2.0, 3.0]))


def test_quantile_left_continuous():
    d = EmpiricalDistribution.from_samples([1.0, 2.0, 3.0, 4.0])
    assert quantile(d, 0.5) == 2.0
    assert quantile(d, 0.50001) == 3.0
    assert quantile(d, 1.0) == 4.0
    assert quantile(d, 1e-9) == 1.0


def test_quantile_matches_numpy_inverted_cdf(rng):
    for _ in range(50):
        x = rng.normal(size=rng.integers(1, 40))
        d = EmpiricalDistribution.from_samples(x)
        for q in rng.uniform(0.001, 1.0, size=5):
            assert quantile(d, q) == np.quantile(x, q, method="inverted_cdf")


def test_cvar_examples():
    d = EmpiricalDistribution.from_samples([1.0, 2.0, 3.0, 4.0])
    assert cvar(d, 0.5) == 3.5
    assert cvar(d, 0.0) == 2.5
    assert cvar(d, 0.75) == 4.0
    assert np.allclose(cvar_weights(d, 0.75), [0, 0, 0, 4])


def _cvar_lp(d, alpha):
    # sup E[XZ] over 0 <= Z <= 1/(1-alpha), E Z = 1
    res = linprog(-(d.weights * d.values), A_eq=[d.weights], b_eq=[1.0],
                  bounds=[(0.0, 1.0 / (1.0 - alpha))] * d.n, method="highs")
    return -res.fun


def test_cvar_matches_linear_program(rng):
    for _ in range(100):
        d = random_dist(rng, 30)
        alpha = float(rng.choice([0.0, 0.3, 0.5, 0.9, 0.99]))
        assert cvar(d, alpha) == pytest.approx(_cvar_lp(d, alpha), rel=1e-9, abs=1e-9)


def test_cvar_weights_attain_and_are_feasible(rng):
    for _ in range(100):
        d = random_dist(rng, 30)
        alpha = float(rng.uniform(0, 0.99))
        z = cvar_weights(d, alpha)
        assert np.dot(d.weights, z) == pytest.approx(1.0, abs=1e-12)
        assert z.max() <= 1.0 / (1.0 - alpha) * (1 + 1e-12)
        assert np.dot(d.weights, z * d.values) == pytest.approx(cvar(d, alpha), rel=1e-10, abs=1e-10)


def test_cvar_weights_average_ties():
    d = EmpiricalDistribution.from_samples([1.0, 2.0, 2.0])
    z = cvar_weights(d, 0.5)
    assert z[1] == z[2]


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=30), st.floats(0.0, 0.99))
def test_maximal_function_is_cvar_of_abs(xs, alpha):
    d = EmpiricalDistribution.from_samples(xs)
    r = decreasing_rearrangement(d)
    t = 1.0 - alpha
    assert maximal_function(r, t) == pytest.approx(cvar(d.abs(), alpha), rel=1e-9, abs=1e-9)


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=30))
def test_rearrangement_equimeasurable(xs):
    d = EmpiricalDistribution.from_samples(xs)
    r = decreasing_rearrangement(d)
    # integral of X* equals E|X|
    assert r.integral(1.0) == pytest.approx(float(np.mean(np.abs(xs))), rel=1e-12, abs=1e-12)
