import numpy as np
import pytest

from tailrisk import (DomainError, EmpiricalDistribution, deviation_bound, luxemburg_norm,
                      reference, reference_bound, verify_deviation, young_exp, young_power,
                      young_subexp)
from tailrisk.deviation import reference_young
from tailrisk.errors import ConstructionError

from conftest import random_dist

PSIS = [young_power(2.0), young_power(1.5), young_power(4.0), young_exp(), young_subexp()]


def test_chebyshev_form(rng):
    for _ in range(30):
        d = random_dist(rng, 30, signed=False)
        if np.all(d.values == 0):
            continue
        norm = luxemburg_norm(d, young_power(2.0))
        m2 = float(np.dot(d.weights, d.values ** 2))
        xs = np.linspace(norm * 1.01, 5 * norm, 7)
        assert np.allclose(deviation_bound(young_power(2.0), norm, xs), m2 / xs ** 2, rtol=1e-12)


def test_bound_capped_at_one():
    assert deviation_bound(young_power(2.0), 1.0, 0.5) == 1.0
    with pytest.raises(DomainError):
        deviation_bound(young_power(2.0), 1.0, 0.0)
    with pytest.raises(DomainError):
        deviation_bound(young_power(2.0), 0.0, 1.0)


@pytest.mark.parametrize("psi", PSIS, ids=lambda p: p.name)
def test_verify_never_violates(psi, rng):
    for _ in range(30):
        d = random_dist(rng, 40, signed=False)
        grid = np.linspace(0.05, 1.2, 20) * max(float(d.values[-1]), 1e-3)
        rep = verify_deviation(d, psi, grid)
        assert rep.passed and rep.violations == 0


def test_verify_uses_abs_and_reports_rows():
    d = EmpiricalDistribution.from_samples([-3.0, 1.0])
    rep = verify_deviation(d, young_power(2.0), [1.0, 3.0])
    assert rep.rows[1].survival == 0.5
    assert rep.norm == pytest.approx(np.sqrt(5.0))
    assert set(rep.as_dict()) == {"norm", "passed", "rows"}


def test_zero_variable():
    rep = verify_deviation(EmpiricalDistribution.from_samples([0.0, 0.0]), young_exp(), [0.5, 1.0])
    assert rep.passed and rep.norm == 0.0


def test_reference_young_and_bound(rng):
    Y = reference("pareto:2")
    psi = reference_young(Y)
    xs = np.logspace(0, 3, 20)
    assert np.allclose(psi(xs), xs ** 2, rtol=1e-12)
    for _ in range(20):
        d = random_dist(rng, 40, signed=False)
        if np.all(d.values == 0):
            continue
        x = np.linspace(0.1, 2.0, 9) * float(d.values[-1])
        b = reference_bound(Y, d, x)
        surv = np.array([d.survival(v) for v in x])
        assert np.all(surv <= b * (1 + 1e-12))


def test_reference_young_needs_unit_level():
    with pytest.raises(ConstructionError):
        reference_young(reference("exponential:2"))
