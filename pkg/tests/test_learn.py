import numpy as np
import pytest
from scipy.optimize import approx_fprime, minimize

from tailrisk import DomainError
from tailrisk.learn import (Dataset, TrainConfig, per_sample_losses, risk_objective, train)
from tailrisk.riskspec import RiskSpec


def _linear(rng, n=200, d=3, noise=0.5):
    X = rng.normal(size=(n, d))
    y = X @ np.arange(1.0, d + 1) - 0.7 + noise * rng.normal(size=n)
    return X, y


def _outliers(rng, n=300):
    X, y = _linear(rng, n, 2, 0.3)
    idx = rng.choice(n, n // 10, replace=False)
    y[idx] += 6.0 * rng.standard_t(2, size=idx.size)
    return Dataset(X, y)


def _top_decile(params, data):
    losses, _ = per_sample_losses(params, data, "squared")
    return float(np.mean(np.sort(losses)[-data.n // 10:]))


def test_expectation_recovers_least_squares(rng):
    X, y = _linear(rng)
    res = train(Dataset(X, y), TrainConfig(RiskSpec("expectation"), step_size=0.2, max_epochs=5000,
                                           tolerance=1e-14))
    ols = np.linalg.lstsq(np.hstack([X, np.ones((X.shape[0], 1))]), y, rcond=None)[0]
    assert np.max(np.abs(res.params - ols)) < 1e-4
    assert res.converged and res.fallbacks == 0


def test_history_never_increases(rng):
    res = train(_outliers(rng), TrainConfig(RiskSpec("kl", epsilon=0.5), step_size=0.05, max_epochs=200))
    h = np.asarray(res.history)
    assert np.all(np.diff(h) <= 0)


def test_cvar_lowers_top_decile(rng):
    data = _outliers(rng)
    mean = train(data, TrainConfig(RiskSpec("expectation"), step_size=0.2, max_epochs=3000))
    tail = train(data, TrainConfig(RiskSpec("cvar", alpha=0.9), step_size=0.05, max_epochs=3000),
                 init=mean.params)
    assert _top_decile(tail.params, data) < _top_decile(mean.params, data)


def test_cvar_training_near_lp_minimum(rng):
    data = _outliers(rng, 120)
    spec = RiskSpec("cvar", alpha=0.9)
    res = train(data, TrainConfig(spec, step_size=0.05, max_epochs=4000, tolerance=1e-13))

    def f(p):
        # n = 120 equal weights: CVaR_0.9 is the mean of the 12 largest
        losses, _ = per_sample_losses(p, data, "squared")
        return float(np.mean(np.sort(losses)[-12:]))

    ref = min((minimize(f, x0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12,
                                                               "maxiter": 20000})
               for x0 in (res.params, np.zeros(3))), key=lambda r: r.fun)
    assert res.history[-1] <= ref.fun * (1 + 1e-3)


def test_objective_gradient_matches_finite_difference(rng):
    X, y = _linear(rng, 60, 2)
    data = Dataset(X, y)
    p = rng.normal(size=3)
    for spec in [RiskSpec("kl", epsilon=0.3), RiskSpec("chi2", epsilon=0.5), RiskSpec("expectation")]:
        g = risk_objective(p, data, spec).gradient
        fd = approx_fprime(p, lambda q: risk_objective(q, data, spec).value, 1e-6)
        assert np.allclose(g, fd, rtol=1e-4, atol=1e-4)


def test_dual_weights_are_a_density(rng):
    X, y = _linear(rng, 50, 2)
    data = Dataset(X, y, rng.uniform(0.5, 2.0, 50))
    obj = risk_objective(np.zeros(3), data, RiskSpec("chi2", epsilon=0.4))
    assert np.all(obj.weights >= -1e-12)
    assert float(np.dot(data.weights, obj.weights)) == pytest.approx(1.0, abs=1e-9)


def test_top_atom_solution_has_exact_weights():
    # huge epsilon: the ball contains the top atom, so the risk is the max loss
    X = np.array([[0.0], [1.0], [2.0]])
    data = Dataset(X, np.array([0.0, 1.0, 5.0]))
    obj = risk_objective(np.zeros(2), data, RiskSpec("kl", epsilon=50.0))
    assert not obj.fallback
    assert obj.value == pytest.approx(25.0)
    assert np.allclose(obj.weights, [0.0, 0.0, 3.0])
    assert np.allclose(obj.gradient, [-20.0, -10.0])


def test_missing_dual_weights_fall_back_to_spectral(monkeypatch):
    import tailrisk.learn as learn
    from tailrisk.orlicz import RiskResult

    real = learn.evaluate
    monkeypatch.setattr(learn, "evaluate", lambda d, spec: RiskResult(real(d, spec).value))
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    data = Dataset(X, np.array([0.0, 1.0, 5.0, 2.0]))
    obj = risk_objective(np.zeros(2), data, RiskSpec("cvar", alpha=0.5))
    # CVaR_0.5 spectral weights put mass 2 on the two largest losses (25 and 4)
    assert obj.fallback
    assert np.allclose(obj.weights, [0.0, 0.0, 2.0, 2.0])


def test_logistic_loss_on_separable_data(rng):
    X = rng.normal(size=(80, 2))
    y = (X[:, 0] - X[:, 1] > 0).astype(float)
    res = train(Dataset(X, y), TrainConfig(RiskSpec("expectation"), loss="logistic", step_size=0.5,
                                           max_epochs=300))
    pred = X @ res.params[:-1] + res.params[-1]
    assert np.mean((pred > 0) == (y == 1)) > 0.95
    with pytest.raises(DomainError):
        per_sample_losses(np.zeros(3), Dataset(X, y + 2.0), "logistic")


def test_absolute_loss_median(rng):
    y = rng.exponential(size=41)
    X = np.zeros((41, 1))
    res = train(Dataset(X, y), TrainConfig(RiskSpec("expectation"), loss="absolute", step_size=0.5,
                                           max_epochs=2000, tolerance=1e-14))
    assert res.params[-1] == pytest.approx(np.median(y), abs=1e-3)


@pytest.mark.parametrize("kw", [{"loss": "hinge"}, {"step_size": 0.0}, {"tolerance": -1.0},
                                {"max_epochs": -1}])
def test_config_validation(kw):
    with pytest.raises(DomainError):
        TrainConfig(RiskSpec("expectation"), **kw)


def test_dataset_validation():
    with pytest.raises(DomainError):
        Dataset(np.zeros((3, 2)), np.zeros(4))
    with pytest.raises(DomainError):
        Dataset(np.zeros((2, 1)), np.array([0.0, np.nan]))
    with pytest.raises(DomainError):
        Dataset(np.zeros((2, 1)), np.zeros(2), np.array([1.0, 0.0]))
    assert Dataset(np.zeros(3), np.zeros(3)).dim == 1


def test_zero_data_leaves_params_unchanged():
    data = Dataset(np.zeros((5, 2)), np.zeros(5))
    res = train(data, TrainConfig(RiskSpec("kl", epsilon=0.2), max_epochs=50))
    assert np.array_equal(res.params, np.zeros(3)) and res.converged


def test_outlier_synthetic_is_seeded():
    from tailrisk import outlier_synthetic
    a, b = outlier_synthetic(3), outlier_synthetic(3)
    assert np.array_equal(a.features, b.features) and np.array_equal(a.targets, b.targets)
    resid = a.targets - a.features @ [1.0, -2.0, 0.5] - 0.5
    assert np.sum(resid > 5) == 20
