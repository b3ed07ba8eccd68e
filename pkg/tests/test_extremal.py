import itertools
import math

import numpy as np
import pytest

from tailrisk import (ConstructionError, EmpiricalDistribution, cvar, embedding_check, fundamental,
                      krein_condition, krein_constant, lorentz_norm, make_divergence,
                      marcinkiewicz_norm, marcinkiewicz_quasi, risk_fundamental, spectral_risk,
                      tm_risk)
from tailrisk.extremal import orlicz_for_fundamental, spectral_weights, tm_weights

from conftest import random_dist

PHIS = ["sqrt", "chi2", "llogl", "lexp-majorant", "maxvar", "power:3"]


def _xstar_table(d):
    a = np.sort(np.abs(d.to_input_order(d.values)))[::-1]
    w = d.to_input_order(d.weights)[np.argsort(np.abs(d.to_input_order(d.values)))[::-1]]
    return a, np.cumsum(w)


def _brute_maximal(d, t):
    # X**(t) = (1/t) integral_0^t X*, from a plain sorted cumsum
    a, c = _xstar_table(d)
    prev = np.concatenate(([0.0], c[:-1]))
    cover = np.clip(t[:, None] - prev[None, :], 0.0, (c - prev)[None, :])
    return (cover * a[None, :]).sum(axis=1) / t


@pytest.mark.parametrize("name", PHIS)
def test_marcinkiewicz_norm_vs_dense_grid(name, rng):
    phi = fundamental(name)
    t = np.concatenate((np.logspace(-6, 0, 20000), np.linspace(1e-4, 1, 20000)))
    for _ in range(15):
        d = random_dist(rng, 20)
        # include the rearrangement breakpoints, where phi X** has corners
        tt = np.concatenate((t, np.minimum(_xstar_table(d)[1], 1.0)))
        v = phi(tt) * _brute_maximal(d, tt)
        # refine around the coarse argmax, phi itself may have a corner there (a cap)
        k = int(np.argmax(v))
        fine = np.linspace(tt[k] * (1 - 2e-3), min(tt[k] * (1 + 2e-3), 1.0), 4001)
        brute = max(float(v[k]), float(np.max(phi(fine) * _brute_maximal(d, fine))))
        ours = marcinkiewicz_norm(d, phi)
        assert ours >= brute * (1 - 1e-12)
        assert ours <= brute * (1 + 1e-6) + 1e-12
        assert marcinkiewicz_quasi(d, phi) <= ours * (1 + 1e-12)


@pytest.mark.parametrize("name", PHIS)
def test_lorentz_vs_stieltjes_sum(name, rng):
    phi = fundamental(name)
    for _ in range(15):
        d = random_dist(rng, 20)
        a, c = _xstar_table(d)
        prev = np.concatenate(([0.0], c[:-1]))
        ref = float(np.sum(a * (phi(np.minimum(c, 1.0)) - phi(prev))))
        assert lorentz_norm(d, phi) == pytest.approx(ref, rel=1e-12, abs=1e-12)


def test_linf_lorentz_is_max():
    d = EmpiricalDistribution.from_samples([-4.0, 1.0, 2.0])
    assert lorentz_norm(d, fundamental("linf")) == 4.0


@pytest.mark.parametrize("alpha", [0.0, 0.5, 0.9, 0.99])
def test_spectral_cvar_exact(alpha, rng):
    phi = risk_fundamental(make_divergence("cvar", alpha=alpha) if alpha else make_divergence("expectation"))
    for _ in range(30):
        d = random_dist(rng, 40)
        assert spectral_risk(d, phi) == pytest.approx(cvar(d, alpha), rel=1e-12, abs=1e-12)


def test_spectral_weights_density(rng):
    phi = fundamental("sqrt")
    for _ in range(20):
        d = random_dist(rng, 30)
        z = spectral_weights(d, phi)
        assert float(np.dot(d.weights, z)) == pytest.approx(1.0, abs=1e-12)
        assert float(np.dot(d.weights, z * d.values)) == pytest.approx(spectral_risk(d, phi), rel=1e-10, abs=1e-10)


def _brute_tm(d, phi, n=20000):
    t = np.linspace(1e-6, 1 - 1e-6, n)
    m = d.mean()
    w = (1 - phi(1 - t)) / t
    cv = np.array([cvar(d, s) for s in t])
    return max(m, float(np.max(w * m + (1 - w) * cv)))


@pytest.mark.parametrize("name", ["sqrt", "chi2", "maxvar", "llogl"])
def test_tm_vs_brute_grid(name, rng):
    phi = fundamental(name)
    for _ in range(6):
        d = random_dist(rng, 12)
        ref = _brute_tm(d, phi)
        ours = tm_risk(d, phi)
        assert ours >= ref - 1e-9 * max(1, abs(ref))
        assert ours <= ref + 1e-4 * max(1, abs(ref))


def test_tm_bounds_and_weights(rng):
    phi = fundamental("sqrt")
    for _ in range(40):
        d = random_dist(rng, 40)
        tm = tm_risk(d, phi)
        assert tm >= d.mean() - 1e-12
        assert tm <= spectral_risk(d, phi) + 1e-9
        z = tm_weights(d, phi)
        assert float(np.dot(d.weights, z)) == pytest.approx(1.0, abs=1e-9)
        assert np.all(z >= -1e-12)
        assert float(np.dot(d.weights, z * d.values)) == pytest.approx(tm, rel=1e-7, abs=1e-7)


def test_dutch_maxvar_small():
    phi = fundamental("maxvar")
    d = EmpiricalDistribution.from_samples([0.0, 1.0, 3.0])
    pairs = [max(a, b) for a, b in itertools.product(d.values, repeat=2)]
    assert spectral_risk(d, phi) == pytest.approx(np.mean(pairs), rel=1e-14)
    assert tm_risk(d, phi) == pytest.approx(np.mean(np.maximum(d.values, d.mean())), rel=1e-9)


def test_permutation_invariance(rng):
    phi = fundamental("chi2")
    x = rng.normal(size=25)
    w = rng.uniform(0.1, 1, 25)
    p = rng.permutation(25)
    a = EmpiricalDistribution.from_samples(x, w)
    b = EmpiricalDistribution.from_samples(x[p], w[p])
    # equal up to the rounding of the weight normalization
    for f in (tm_risk, spectral_risk, lorentz_norm, marcinkiewicz_norm):
        assert f(a, phi) == pytest.approx(f(b, phi), rel=1e-14)


def test_non_concave_rejected():
    d = EmpiricalDistribution.from_samples([1.0, 2.0])
    with pytest.raises(ConstructionError):
        spectral_risk(d, fundamental("lexp"))
    with pytest.raises(ConstructionError):
        tm_risk(d, fundamental("linf"))


def test_krein_examples():
    assert krein_condition(fundamental("lexp"))
    assert not krein_condition(fundamental("llogl"))
    assert krein_condition(fundamental("sqrt"))
    assert not krein_condition(fundamental("linear"))


@pytest.mark.parametrize("name,k", [("sqrt", 2.0), ("lexp", 2.0), ("power:4", 4.0 / 3.0)])
def test_krein_constant(name, k):
    assert krein_constant(fundamental(name), n=40) == pytest.approx(k, rel=1e-6)


def test_krein_bound_on_random_data(rng):
    phi = fundamental("lexp")
    K = krein_constant(phi, n=40)
    for _ in range(30):
        d = random_dist(rng, 30)
        assert marcinkiewicz_norm(d, phi) <= K * marcinkiewicz_quasi(d, phi) * (1 + 1e-9)


def test_embedding_degenerate_cases():
    d = EmpiricalDistribution.from_samples([-1.0, 3.0, 0.5])
    rep = embedding_check(d, fundamental("linear"))
    e = float(np.mean(np.abs(d.values)))
    assert rep.ok
    assert rep.marcinkiewicz == pytest.approx(e) and rep.orlicz == pytest.approx(e)
    assert rep.lorentz == pytest.approx(e)
    c = EmpiricalDistribution.from_samples([-2.0] * 3)
    rep = embedding_check(c, fundamental("sqrt"))
    assert rep.marcinkiewicz == pytest.approx(2.0, rel=1e-9)
    assert rep.orlicz == pytest.approx(2.0, rel=1e-9)
    assert rep.lorentz == pytest.approx(2.0, rel=1e-12)


def test_orlicz_for_sqrt_has_right_fundamental():
    # the synthesized norm of an indicator of measure t is sqrt(t)
    phi = fundamental("sqrt")
    for t in [0.01, 0.2, 0.7]:
        d = EmpiricalDistribution.from_samples([1.0, 0.0], [t, 1 - t])
        assert orlicz_for_fundamental(d, phi) == pytest.approx(math.sqrt(t), rel=1e-6)


def test_embedding_random_sqrt(rng):
    for _ in range(10):
        d = random_dist(rng, 50)
        assert embedding_check(d, fundamental("sqrt")).ok


def test_tabulated_fundamentals_in_orlicz_synthesis(rng):
    from tailrisk import least_concave_majorant
    from tailrisk.fundamental import tabulated_fundamental
    lin = tabulated_fundamental([[0.5, 0.5], [1.0, 1.0]])
    d = EmpiricalDistribution.from_samples([1.0, -3.0])
    assert orlicz_for_fundamental(d, lin) == pytest.approx(2.0, rel=1e-15)
    # the majorant table is linear below its first vertex; the synthesis must still see a tail
    maj = least_concave_majorant(fundamental("lexp"))
    for _ in range(5):
        assert embedding_check(random_dist(rng, 20), maj).ok


def test_unnormalized_phi_is_rescaled_for_risk_measures(rng):
    # lexp-majorant has phi(1) = 1/log 2; spectral and tm use phi/phi(1)
    phi = fundamental("lexp-majorant")
    top = float(phi(1.0))
    assert top == pytest.approx(1 / math.log(2))
    for _ in range(10):
        d = random_dist(rng, 20)
        v, w = d.values[::-1], d.weights[::-1]
        cum = np.minimum(np.cumsum(w), 1.0)
        ref = float(np.sum(v * np.diff(np.concatenate(([0.0], phi(cum))))) / top)
        assert spectral_risk(d, phi) == pytest.approx(ref, rel=1e-12, abs=1e-12)
        shifted = EmpiricalDistribution.from_samples(d.values + 2.5, d.weights)
        assert spectral_risk(shifted, phi) == pytest.approx(spectral_risk(d, phi) + 2.5, abs=1e-12)
        assert tm_risk(shifted, phi) == pytest.approx(tm_risk(d, phi) + 2.5, abs=1e-9)
        assert d.mean() - 1e-12 <= tm_risk(d, phi) <= spectral_risk(d, phi) + 1e-9
