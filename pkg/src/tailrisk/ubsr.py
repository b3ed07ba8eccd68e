"""Utility-based shortfall risk and its Orlicz-norm penalty."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import xlogy

from ._optim import generalized_inverse
from .divergence import YoungFunction
from .empirical import EmpiricalDistribution
from .errors import DomainError
from .orlicz import _perspective_min

Fn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class LossFunction:
    """Loss l with l = 0 on the negative half line and its conjugate l*.

    ``ell_inv(x0)`` is the right inverse of l at the acceptance level and
    ``conjugate_bound`` the end of dom l* (finite for linear losses).
    """

    ell: Fn
    ell_conjugate: Fn
    ell_inv: Callable[[float], float]
    name: str
    threshold: float = 1.0
    conjugate_bound: float = math.inf

    def __post_init__(self):
        if not (self.threshold > 0 and math.isfinite(self.threshold)):
            raise DomainError("acceptance threshold x0 must be positive")


def exponential_loss(threshold: float = 1.0) -> LossFunction:
    """l(x) = e^x - 1 for x >= 0, with l*(y) = y log y - y + 1 above 1."""
    def ell(x):
        with np.errstate(over="ignore"):
            return np.expm1(np.maximum(np.asarray(x, dtype=float), 0.0))

    def conj(y):
        y = np.maximum(np.asarray(y, dtype=float), 1.0)
        return xlogy(y, y) - y + 1.0

    return LossFunction(ell, conj, lambda x0: math.log1p(x0), "exponential", threshold)


def positive_part_loss(threshold: float = 1.0, slope: float = 1.0) -> LossFunction:
    """l(x) = slope * x+, whose conjugate is the indicator of [0, slope]."""
    def ell(x):
        return slope * np.maximum(np.asarray(x, dtype=float), 0.0)

    def conj(y):
        y = np.asarray(y, dtype=float)
        return np.where(y <= slope, 0.0, np.inf)

    return LossFunction(ell, conj, lambda x0: x0 / slope, "positive_part", threshold, slope)


def power_loss(p: float, threshold: float = 1.0) -> LossFunction:
    """l(x) = (x+)^p / p with l*(y) = y^q / q."""
    if not p > 1:
        raise DomainError("power loss needs p > 1")
    q = p / (p - 1.0)

    def ell(x):
        return np.power(np.maximum(np.asarray(x, dtype=float), 0.0), p) / p

    def conj(y):
        return np.power(np.maximum(np.asarray(y, dtype=float), 0.0), q) / q

    return LossFunction(ell, conj, lambda x0: (p * x0) ** (1.0 / p), f"power:{p:g}", threshold)


def shortfall(d: EmpiricalDistribution, L: LossFunction) -> float:
    """E l(X - m) at m = 0; helper for acceptance checks."""
    return float(np.dot(d.weights, L.ell(d.values)))


def ubsr(d: EmpiricalDistribution, L: LossFunction) -> float:
    """inf{m : E l(X - m) <= x0}, by bisection down to adjacent doubles.

    The returned end always satisfies the acceptance condition.
    """
    x0 = L.threshold
    v, w = d.values, d.weights

    def load(m):
        with np.errstate(over="ignore"):
            r = float(np.dot(w, L.ell(v - m)))
        return r if r == r else math.inf

    lo = float(v[0]) - L.ell_inv(x0) - 1.0
    hi = float(v[-1])
    while load(lo) <= x0:  # only for losses flat near zero
        lo -= max(1.0, abs(lo))
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi):
            break
        if load(mid) <= x0:
            hi = mid
        else:
            lo = mid
    return hi


def _as_density(Z, weights=None) -> EmpiricalDistribution:
    d = Z if isinstance(Z, EmpiricalDistribution) else EmpiricalDistribution.from_samples(Z, weights)
    if np.any(d.values < 0):
        raise DomainError("density must be nonnegative")
    m = d.mean()
    if abs(m - 1.0) > 1e-9:
        raise DomainError(f"density must have mean 1, got {m:.17g}")
    return d


def ubsr_penalty(Z, L: LossFunction, weights=None) -> float:
    """alpha(Z) = inf_{t>0} t (x0 + E l*(Z/t)), the Amemiya norm of Z under l*."""
    d = _as_density(Z, weights)
    if math.isfinite(L.conjugate_bound):
        # l* is an indicator: the infimum sits at t = max Z / bound
        return L.threshold * float(d.values[-1]) / L.conjugate_bound
    z, w = d.values, d.weights

    def mean_g(u):
        with np.errstate(over="ignore", invalid="ignore"):
            r = float(np.dot(w, L.ell_conjugate(u)))
        return r if math.isfinite(r) else math.inf

    res = _perspective_min(z, w, L.threshold, mean_g, math.inf)
    return float(res.value)


def conjugate_young(L: LossFunction) -> YoungFunction:
    """l* packaged as a Young function."""
    return YoungFunction(L.ell_conjugate, lambda v: generalized_inverse(L.ell_conjugate, v),
                         name=f"{L.name}*", finite=math.isinf(L.conjugate_bound),
                         bound=L.conjugate_bound)


__all__ = ["LossFunction", "exponential_loss", "positive_part_loss", "power_loss", "ubsr",
           "ubsr_penalty", "shortfall", "conjugate_young"]
