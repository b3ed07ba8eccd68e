"""Divergence functions f, their conjugates g, Young-ification and scaling.

Infinite values of f are encoded as ``np.inf``; expectation sums use the
extended-real convention 0 * inf = 0.  Derivatives of g are right
derivatives at kinks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.special import xlogy

from ._optim import INVPHI, generalized_inverse, golden_max_vec, lambert_w
from .errors import ConstructionError, DomainError

Fn = Callable[[np.ndarray], np.ndarray]

FAMILIES = ("kl", "chi2", "cvar", "power", "expectation", "custom")


def _arr(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


def _out(x, v):
    return float(np.asarray(v).reshape(-1)[0]) if np.ndim(x) == 0 else v


@dataclass(frozen=True)
class YoungFunction:
    """Left-continuous increasing convex Phi with Phi(0) = 0.

    ``slope_inf`` is lim Phi(y)/y (inf for supercoercive Phi) and ``bound``
    is sup{Phi < inf}.
    """

    phi: Fn
    phi_inv: Fn
    name: str = "young"
    finite: bool = True
    slope_inf: float = math.inf
    bound: float = math.inf
    meta: dict = field(default_factory=dict, compare=False)

    def __call__(self, x):
        return self.phi(x)

    def inverse(self, y):
        return self.phi_inv(y)


@dataclass(frozen=True)
class DivergenceSpec:
    """A divergence function with conjugate data and a risk level epsilon.

    ``f``, ``g``, ``g_prime`` and ``f_inv`` are the unscaled objects; the
    epsilon-scaled versions are exposed as methods.  ``bound`` is
    sup dom f, which is also the asymptotic slope of g.
    """

    family: str
    f: Fn
    g: Fn
    g_prime: Fn
    f_inv: Fn
    epsilon: float = 1.0
    finite_f: bool = True
    bound: float = math.inf
    homogeneous: bool = False
    params: dict = field(default_factory=dict)
    log_mean_exp: bool = False
    g_second: Fn | None = None

    def f_eps(self, x):
        return _arr(self.f(x)) / self.epsilon

    def g_eps(self, y):
        return _arr(self.g(self.epsilon * _arr(y))) / self.epsilon

    def g_eps_prime(self, y):
        return self.g_prime(self.epsilon * _arr(y))

    def f_inv_eps(self, y):
        return self.f_inv(self.epsilon * _arr(y))

    def mean_g(self, z: np.ndarray, w: np.ndarray) -> float:
        """E g(z) under weights w; +inf on overflow."""
        if self.log_mean_exp:
            top = float(z.max())
            m = top + math.log(float(np.dot(w, np.exp(z - top))))
            return math.exp(m) - 1.0 if m < 709.0 else math.inf
        with np.errstate(over="ignore", invalid="ignore"):
            v = float(np.dot(w, self.g(z)))
        return v if math.isfinite(v) else math.inf

    def describe(self) -> dict:
        out = {"family": self.family, "epsilon": self.epsilon}
        out.update(self.params)
        return out


# ---------------------------------------------------------------- catalog

def _kl() -> dict:
    def f(x):
        x = _arr(x)
        with np.errstate(invalid="ignore"):
            v = xlogy(x, x) - x + 1.0
        return _out(x, np.where(x < 0, np.inf, v))

    def g(y):
        return np.expm1(_arr(y))

    def gp(y):
        return np.exp(_arr(y))

    def finv(y):
        y = _arr(y)
        yy = np.where(y > 0, y, 1.0)
        v = np.exp(1.0 + lambert_w((yy - 1.0) / math.e))
        return _out(y, np.where(y > 0, v, 0.0))

    return dict(f=f, g=g, g_prime=gp, f_inv=finv, log_mean_exp=True, g_second=gp)


def _chi2() -> dict:
    def f(x):
        x = _arr(x)
        return _out(x, np.where(x < 0, np.inf, (x - 1.0) ** 2))

    def g(y):
        m = np.maximum(-2.0, _arr(y))
        return m + m * m / 4.0

    def gp(y):
        return np.maximum(0.0, 1.0 + _arr(y) / 2.0)

    def gpp(y):
        return np.where(_arr(y) > -2.0, 0.5, 0.0)

    def finv(y):
        y = _arr(y)
        return _out(y, np.where(y > 0, 1.0 + np.sqrt(np.maximum(y, 0.0)), 0.0))

    return dict(f=f, g=g, g_prime=gp, f_inv=finv, g_second=gpp)


def _cvar(alpha: float) -> dict:
    cap = 1.0 / (1.0 - alpha)

    def f(x):
        x = _arr(x)
        return _out(x, np.where((x >= 0) & (x <= cap), 0.0, np.inf))

    def g(y):
        return np.maximum(0.0, _arr(y)) * cap

    def gp(y):
        return np.where(_arr(y) >= 0, cap, 0.0)

    def finv(y):
        y = _arr(y)
        return _out(y, np.where(y > 0, cap, 0.0))

    return dict(f=f, g=g, g_prime=gp, f_inv=finv, finite_f=False, bound=cap,
                homogeneous=True)


def _power(p: float) -> dict:
    # Cressie-Read form, normalized so that f''(1) = 1
    q = p / (p - 1.0)
    c = p * (p - 1.0)

    def f(x):
        x = _arr(x)
        xp = np.power(np.maximum(x, 0.0), p)
        return _out(x, np.where(x < 0, np.inf, (xp - p * x + p - 1.0) / c))

    def g(y):
        s = np.maximum(0.0, 1.0 + (p - 1.0) * _arr(y))
        with np.errstate(over="ignore"):
            return (np.power(s, q) - 1.0) / p

    def gp(y):
        s = np.maximum(0.0, 1.0 + (p - 1.0) * _arr(y))
        with np.errstate(over="ignore"):
            return np.power(s, 1.0 / (p - 1.0))

    def gpp(y):
        s = 1.0 + (p - 1.0) * _arr(y)
        with np.errstate(over="ignore", divide="ignore"):
            return np.where(s > 0, np.power(np.maximum(s, 1e-300), (2.0 - p) / (p - 1.0)), 0.0)

    def finv(y):
        y = _arr(y)
        v = generalized_inverse(lambda x: np.where(_arr(x) >= 1.0, f(x), 0.0), y)
        return _out(y, v)

    return dict(f=f, g=g, g_prime=gp, f_inv=finv, g_second=gpp)


def _table(table: Sequence[Sequence[float]]) -> dict:
    try:
        arr = np.asarray(table, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConstructionError(f"custom table is not numeric: {exc}") from exc
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 3:
        raise ConstructionError("custom table must be a list of at least three [x, f(x)] pairs")
    xs, fs = arr[:, 0].copy(), arr[:, 1].copy()
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(fs))):
        raise ConstructionError("custom table entries must be finite")
    if xs[0] != 0.0:
        raise ConstructionError("custom table must start at x = 0 (f(0) must be finite)")
    if np.any(np.diff(xs) <= 0):
        raise ConstructionError("custom table x values must increase strictly")
    one = np.flatnonzero(xs == 1.0)
    if one.size != 1 or fs[one[0]] != 0.0:
        raise ConstructionError("custom table must contain the point (1, 0)")
    if np.any(fs < 0):
        raise ConstructionError("custom table has negative f values")
    slopes = np.diff(fs) / np.diff(xs)
    bad = np.flatnonzero(np.diff(slopes) < -1e-12 * (1.0 + np.abs(slopes[1:])))
    if bad.size:
        raise ConstructionError(
            f"custom table is not convex near x = {xs[bad[0] + 1]:.6g} "
            "(second difference below -1e-12)")
    xmax = xs[-1]

    def f(x):
        x = _arr(x)
        v = np.interp(x, xs, fs)
        return _out(x, np.where((x < 0) | (x > xmax), np.inf, v))

    # exact conjugate of the piecewise-linear interpolant:
    # g(y) = x_k y - f_k with k the first vertex whose right slope exceeds y
    def _vertex(y):
        return np.searchsorted(slopes, _arr(y), side="right")

    def g(y):
        k = _vertex(y)
        return xs[k] * _arr(y) - fs[k]

    def gp(y):
        return xs[_vertex(y)]

    def finv(y):
        y = _arr(y)
        right = xs >= 1.0
        xr, fr = xs[right], fs[right]
        # first point on the right branch with f >= y, then linear inversion
        k = np.searchsorted(fr, y, side="left")
        inside = (y > 0) & (k < xr.size)
        kk = np.clip(k, 1, xr.size - 1)
        x0, x1, f0, f1 = xr[kk - 1], xr[kk], fr[kk - 1], fr[kk]
        lin = np.where(f1 > f0, x0 + (y - f0) * (x1 - x0) / np.where(f1 > f0, f1 - f0, 1.0), x1)
        v = np.where(inside, lin, np.where(y > 0, xmax, 0.0))
        return _out(y, v)

    return dict(f=f, g=g, g_prime=gp, f_inv=finv, finite_f=False, bound=float(xmax),
                params_extra={"f_table": [[float(a), float(b)] for a, b in zip(xs, fs)]})


def make_divergence(family: str, epsilon: float = 1.0, *, alpha: float | None = None,
                    p: float | None = None, table=None) -> DivergenceSpec:
    """Build a catalog divergence.

    family: one of kl, chi2, cvar (needs alpha), power (needs p > 1),
    expectation, custom (needs table of [x, f(x)] pairs).
    """
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise DomainError("epsilon must be positive and finite")
    params: dict = {}
    if family == "kl":
        parts = _kl()
    elif family == "chi2":
        parts = _chi2()
    elif family == "cvar":
        if alpha is None or not (0.0 <= alpha < 1.0):
            raise ConstructionError("cvar family needs alpha in [0, 1)")
        parts = _cvar(float(alpha))
        params["alpha"] = float(alpha)
    elif family == "expectation":
        parts = _cvar(0.0)
    elif family == "power":
        if p is None or not (p > 1.0 and math.isfinite(p)):
            raise ConstructionError("power family needs finite p > 1")
        parts = _power(float(p))
        params["p"] = float(p)
    elif family == "custom":
        if table is None:
            raise ConstructionError("custom family needs an f table")
        parts = _table(table)
    else:
        raise ConstructionError(f"unknown divergence family {family!r}; expected one of {FAMILIES}")
    params.update(parts.pop("params_extra", {}))
    return DivergenceSpec(family=family, epsilon=float(epsilon), params=params, **parts)


def scale_epsilon(spec: DivergenceSpec, epsilon: float) -> DivergenceSpec:
    """Same divergence at risk level epsilon (f_eps = f/eps, g_eps(y) = g(eps y)/eps)."""
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise DomainError("epsilon must be positive and finite")
    return replace(spec, epsilon=float(epsilon))


def check_supercoercive(h: Fn, points=(1e3, 1e6, 1e9), growth: float = 1e-2) -> bool:
    """h(x)/x strictly increasing along ``points`` and up by ``growth`` overall.

    The overall margin rejects asymptotically linear h such as |x - 1|,
    whose ratio creeps towards its limit.  An infinite ratio passes.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        ratios = [float(h(np.float64(x))) / x for x in points]
    for a, b in zip(ratios, ratios[1:]):
        if math.isinf(a) and a > 0:
            return True
        if not (b > a):
            return False
    if math.isinf(ratios[-1]):
        return True
    return ratios[-1] - ratios[0] > growth * max(abs(ratios[0]), 1.0)


def conjugate_numeric(f: Fn, y, *, upper: float = 1e12, iters: int = 90):
    """sup_{x >= 0} (x y - f(x)) by golden section on [0, B].

    B starts at 2 and doubles while the objective still increases at B,
    capped at ``upper``.  Returns (value, argmax).
    """
    y = np.atleast_1d(_arr(y))

    def obj(x, yy):
        with np.errstate(over="ignore", invalid="ignore"):
            v = x * yy - _arr(f(x))
        return np.where(np.isnan(v), -np.inf, v)

    B = np.full(y.shape, 2.0)
    grew = np.zeros(y.shape, dtype=bool)
    for _ in range(64):
        up = obj(B, y) > obj(B / 2.0, y)
        up &= B < upper
        if not up.any():
            break
        grew |= up
        B = np.where(up, np.minimum(2.0 * B, upper), B)
    a = np.where(grew, B / 4.0, 0.0)
    x, v = golden_max_vec(lambda xx: obj(xx, y), a, B, iters=iters)
    return v, x


def custom_divergence(f: Fn, f_inv: Fn, *, name: str = "custom", bound: float = math.inf,
                      epsilon: float = 1.0, params: dict | None = None) -> DivergenceSpec:
    """Divergence from a callable f with a numerically computed conjugate."""
    if abs(float(_arr(f(np.float64(1.0))))) > 1e-12:
        raise ConstructionError("divergence function must satisfy f(1) = 0")
    if not math.isfinite(float(_arr(f(np.float64(0.0))))):
        raise ConstructionError("divergence function must be finite at 0")
    if math.isinf(bound) and not check_supercoercive(f):
        raise ConstructionError("divergence function is not supercoercive (f(x)/x must grow)")
    cap = min(bound, 1e12)

    def g(y):
        y = _arr(y)
        v, _ = conjugate_numeric(f, y, upper=cap)
        return _out(y, v.reshape(y.shape) if y.ndim else v)

    def gp(y):
        y = _arr(y)
        _, x = conjugate_numeric(f, y, upper=cap)
        return _out(y, x.reshape(y.shape) if y.ndim else x)

    return DivergenceSpec(family=name, f=f, g=g, g_prime=gp, f_inv=f_inv, epsilon=epsilon,
                          finite_f=math.isinf(bound), bound=bound, params=params or {})


# ------------------------------------------------------------ Young side

def youngify(spec: DivergenceSpec) -> tuple[YoungFunction, YoungFunction]:
    """(f_bar, g_bar) at the spec's epsilon: f zeroed on [0, 1], g zeroed below 0."""
    eps = spec.epsilon

    def fbar(x):
        x = _arr(x)
        with np.errstate(invalid="ignore"):
            v = np.where(x <= 1.0, 0.0, _arr(spec.f(np.maximum(x, 1.0))) / eps)
        return _out(x, v)

    def fbar_inv(y):
        y = _arr(y)
        return _out(y, np.where(y > 0, spec.f_inv(eps * np.maximum(y, 0.0)), 0.0))

    def gbar(y):
        y = _arr(y)
        with np.errstate(over="ignore"):
            v = np.where(y > 0, spec.g_eps(np.maximum(y, 0.0)), 0.0)
        return _out(y, v)

    def gbar_inv(v):
        return generalized_inverse(gbar, v)

    fb = YoungFunction(fbar, fbar_inv, name=f"{spec.family}-fbar", finite=spec.finite_f,
                       slope_inf=math.inf, bound=spec.bound)
    gb = YoungFunction(gbar, gbar_inv, name=f"{spec.family}-gbar", finite=True,
                       slope_inf=spec.bound)
    return fb, gb


def young_power(p: float) -> YoungFunction:
    """Phi(x) = x^p for p >= 1."""
    if not p >= 1.0:
        raise DomainError("power Young function needs p >= 1")
    return YoungFunction(lambda x: np.power(np.maximum(_arr(x), 0.0), p),
                         lambda y: np.power(np.maximum(_arr(y), 0.0), 1.0 / p),
                         name=f"x^{p:g}", slope_inf=1.0 if p == 1.0 else math.inf)


def young_exp() -> YoungFunction:
    """Phi(x) = e^x - 1."""
    def phi(x):
        with np.errstate(over="ignore"):
            return np.expm1(np.maximum(_arr(x), 0.0))
    return YoungFunction(phi, lambda y: np.log1p(np.maximum(_arr(y), 0.0)), name="exp-1")


def young_subexp() -> YoungFunction:
    """Phi(x) = x on [0, 1] and e^(x-1) above."""
    def phi(x):
        x = np.maximum(_arr(x), 0.0)
        with np.errstate(over="ignore"):
            return np.where(x <= 1.0, x, np.exp(x - 1.0))

    def inv(y):
        y = np.maximum(_arr(y), 0.0)
        return np.where(y <= 1.0, y, 1.0 + np.log(np.maximum(y, 1.0)))

    return YoungFunction(phi, inv, name="subexp")


def young_conjugate(phi: YoungFunction, *, name: str | None = None) -> YoungFunction:
    """Numeric conjugate Psi(y) = sup_{v >= 0} y * Phi^{-1}(v) - v.

    Working through Phi^{-1} keeps the inner problem concave and avoids
    evaluating Phi itself, which may be given only through its inverse.
    """
    def psi(y):
        y = _arr(y)
        yy = np.atleast_1d(np.maximum(y, 0.0))

        def obj(v):
            with np.errstate(over="ignore", invalid="ignore"):
                r = yy * _arr(phi.phi_inv(v)) - v
            return np.where(np.isnan(r), -np.inf, r)

        # coarse bracket with factor 256, then the factor-2 bracket inside it
        C = np.ones_like(yy)
        coarse = np.zeros(yy.shape, dtype=bool)
        infinite = np.zeros(yy.shape, dtype=bool)
        for _ in range(140):
            up = obj(256.0 * C) > obj(C)
            up &= ~infinite
            if not up.any():
                break
            coarse |= up
            C = np.where(up, 256.0 * C, C)
            infinite |= C > 1e300
        B = np.where(coarse & ~infinite, C / 256.0, 1.0)
        grew = coarse.copy()
        for _ in range(1100):
            up = obj(2.0 * B) > obj(B)
            up &= ~infinite
            if not up.any():
                break
            grew |= up
            B = np.where(up, 2.0 * B, B)
            infinite |= B > 1e300
        lo = np.where(grew, B / 2.0, 0.0)
        _, v = golden_max_vec(obj, lo, 2.0 * B, iters=64)
        v = np.maximum(v, 0.0)
        v = np.where(infinite, np.inf, v)
        return _out(y, v.reshape(y.shape) if y.ndim else v)

    def psi_inv(v):
        return generalized_inverse(psi, v)

    return YoungFunction(psi, psi_inv, name=name or f"{phi.name}*", slope_inf=phi.bound,
                         bound=math.inf if math.isinf(phi.slope_inf) else phi.slope_inf)


__all__ = [
    "DivergenceSpec", "YoungFunction", "make_divergence", "scale_epsilon", "youngify",
    "generalized_inverse", "conjugate_numeric", "custom_divergence", "check_supercoercive",
    "young_power", "young_exp", "young_subexp", "young_conjugate", "lambert_w", "INVPHI",
]
