"""Exact calculus on weighted empirical distributions.

Two inverse conventions live here side by side:

* ``quantile`` is the left-continuous inverse ``sup{l : F(l) < q}``;
* ``decreasing_rearrangement`` returns the right-continuous step function
  ``X*(t) = inf{l >= 0 : P(|X| > l) <= t}``, i.e. the quantile function of
  ``|X|`` read backwards.

Signed operations (regret, risk) never go through the rearrangement.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

# cumulative masses closer than this to a probe level count as reaching it
_MASS_TOL = 1e-14


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Weighted sample law, stored sorted ascending.

    ``order`` maps sorted positions back to the input order, so per-sample
    quantities computed on the sorted arrays can be returned to callers in
    their original layout via ``out[order] = sorted_quantity``.
    """

    values: np.ndarray
    weights: np.ndarray
    order: np.ndarray = field(repr=False)
    renormalized: bool = False

    @classmethod
    def from_samples(cls, values, weights=None) -> "EmpiricalDistribution":
        v = np.asarray(values, dtype=float).ravel()
        if v.size == 0:
            raise DomainError("empirical distribution needs at least one sample")
        if not np.all(np.isfinite(v)):
            raise DomainError("sample values must be finite")
        if weights is None:
            w = np.full(v.size, 1.0 / v.size)
            renorm = False
        else:
            w = np.asarray(weights, dtype=float).ravel()
            if w.shape != v.shape:
                raise DomainError("values and weights differ in length")
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise DomainError("weights must be finite and strictly positive")
            total = w.sum()
            renorm = abs(total - 1.0) > 1e-12
            w = w / total
        order = np.argsort(v, kind="stable")
        v = v[order]
        w = w[order]
        for arr in (v, w, order):
            arr.setflags(write=False)
        return cls(v, w, order, renorm)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def mean(self) -> float:
        return float(np.dot(self.weights, self.values))

    def abs(self) -> "EmpiricalDistribution":
        return EmpiricalDistribution.from_samples(np.abs(self.values), self.weights)

    def survival(self, x: float) -> float:
        """P(X >= x), ties counted in."""
        return float(self.weights[self.values >= x].sum())

    def to_input_order(self, per_sample: np.ndarray) -> np.ndarray:
        out = np.empty_like(per_sample)
        out[self.order] = per_sample
        return out


@dataclass(frozen=True)
class StepFunction:
    """Piecewise-constant map on [0, 1].

    ``levels[k]`` is the value on ``[breakpoints[k-1], breakpoints[k])``
    with ``breakpoints[-1] == 1`` and an implicit leading breakpoint 0.
    """

    breakpoints: np.ndarray
    levels: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        if b.size == 0 or b.size != np.asarray(self.levels).size:
            raise DomainError("breakpoints and levels must be non-empty and aligned")
        if np.any(np.diff(b) <= 0) or b[0] <= 0 or abs(b[-1] - 1.0) > 1e-12:
            raise DomainError("breakpoints must increase strictly up to 1")

    @property
    def starts(self) -> np.ndarray:
        return np.concatenate(([0.0], self.breakpoints[:-1]))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        k = np.searchsorted(self.breakpoints, t, side="right")
        vals = np.where(k < self.levels.size,
                        self.levels[np.minimum(k, self.levels.size - 1)], 0.0)
        return float(vals) if vals.ndim == 0 else vals

    def cumulative(self) -> np.ndarray:
        """Integral of the step function from 0 up to each breakpoint."""
        return np.cumsum(self.levels * np.diff(np.concatenate(([0.0], self.breakpoints))))

    def integral(self, t: float) -> float:
        """Exact integral over [0, t]."""
        k = int(np.searchsorted(self.breakpoints, t, side="left"))
        k = min(k, self.levels.size - 1)
        cum = self.cumulative()
        before = cum[k - 1] if k > 0 else 0.0
        start = self.breakpoints[k - 1] if k > 0 else 0.0
        return float(before + self.levels[k] * (t - start))


def decreasing_rearrangement(d: EmpiricalDistribution) -> StepFunction:
    """X* of |X| as a step function; tied magnitudes share one segment."""
    a = np.abs(d.values)
    order = np.argsort(-a, kind="stable")
    a = a[order]
    w = d.weights[order]
    levels, start = np.unique(-a, return_index=True)
    levels = -levels
    mass = np.add.reduceat(w, start)
    b = np.cumsum(mass)
    b[-1] = 1.0
    return StepFunction(b, levels)


def maximal_function(r: StepFunction, t: float) -> float:
    """X**(t) = (1/t) * integral of X* over [0, t]."""
    if not (0.0 < t <= 1.0):
        raise DomainError("maximal function is defined for t in (0, 1]")
    return r.integral(t) / t


def quantile(d: EmpiricalDistribution, q: float) -> float:
    """Left-continuous quantile sup{l : F(l) < q}."""
    if not (0.0 < q <= 1.0):
        raise DomainError("quantile level must lie in (0, 1]")
    c = np.cumsum(d.weights)
    k = int(np.searchsorted(c, q - _MASS_TOL, side="left"))
    return float(d.values[min(k, d.n - 1)])


def cvar(d: EmpiricalDistribution, alpha: float) -> float:
    """(1/(1-alpha)) * integral of the quantile function over (alpha, 1]."""
    if not (0.0 <= alpha < 1.0):
        raise DomainError("cvar level must lie in [0, 1)")
    c = np.cumsum(d.weights)
    c[-1] = 1.0
    prev = np.concatenate(([0.0], c[:-1]))
    mass = np.clip(c - np.maximum(prev, alpha), 0.0, None)
    return float(np.dot(mass, d.values) / (1.0 - alpha))


def cvar_weights(d: EmpiricalDistribution, alpha: float) -> np.ndarray:
    """Density attaining cvar on the sorted samples, averaged over ties.

    Mass 1-alpha is poured on the largest values at density 1/(1-alpha);
    tied values share the mass of their group.
    """
    if not (0.0 <= alpha < 1.0):
        raise DomainError("cvar level must lie in [0, 1)")
    v = d.values[::-1]
    w = d.weights[::-1]
    _, start = np.unique(-v, return_index=True)
    gmass = np.add.reduceat(w, start)
    cum = np.cumsum(gmass)
    cum[-1] = 1.0
    cap = 1.0 - alpha
    got = np.minimum(cum, cap) - np.minimum(np.concatenate(([0.0], cum[:-1])), cap)
    dens = got / (gmass * cap)
    sizes = np.diff(np.concatenate((start, [v.size])))
    z = np.repeat(dens, sizes)
    return z[::-1].copy()
