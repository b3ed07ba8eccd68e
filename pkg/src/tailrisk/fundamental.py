"""Fundamental functions, envelopes, reference tails and tail-specific Young functions.

A fundamental function phi measures the norm of an indicator of an event
of probability t.  Envelopes are E = 1/phi.  A reference distribution is
given through its decreasing rearrangement Y*, which plays the role of an
envelope in the construction of Young functions with a prescribed tail.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from ._optim import lambert_w
from .divergence import (DivergenceSpec, YoungFunction, check_supercoercive,
                         custom_divergence)
from .errors import ConstructionError, DomainError

Fn = Callable[[np.ndarray], np.ndarray]

_SHAPE_TOL = 1e-9


def grid_size() -> int:
    raw = os.environ.get("TAILRISK_GRID", "")
    if raw.strip():
        try:
            n = int(raw)
        except ValueError as exc:
            raise DomainError(f"TAILRISK_GRID must be an integer, got {raw!r}") from exc
        if n < 16:
            raise DomainError("TAILRISK_GRID must be at least 16")
        return n
    return 4096


def log_grid(n: int | None = None, lo: float = 1e-12) -> np.ndarray:
    """Log-spaced points on [lo, 1]; the last point is exactly 1."""
    g = np.logspace(math.log10(lo), 0.0, n or grid_size())
    g[-1] = 1.0
    return g


def _arr(t) -> np.ndarray:
    return np.asarray(t, dtype=float)


def _out(t, v):
    return float(np.asarray(v).reshape(-1)[0]) if np.ndim(t) == 0 else v


# ------------------------------------------------------------- phi type

def _shape_flags(func: Fn, grid: np.ndarray) -> tuple[bool, bool]:
    v = _arr(func(grid))
    if np.any(~np.isfinite(v)) or np.any(v < 0):
        return False, False
    scale = np.maximum(np.abs(v[1:]), 1e-300)
    inc = np.all(np.diff(v) >= -_SHAPE_TOL * scale)
    ratio = v / grid
    dec = np.all(np.diff(ratio) <= _SHAPE_TOL * np.maximum(np.abs(ratio[:-1]), 1e-300))
    quasi = bool(inc and dec)
    slopes = np.diff(v) / np.diff(grid)
    conc = bool(quasi and np.all(np.diff(slopes) <= _SHAPE_TOL * np.maximum(np.abs(slopes[:-1]), 1.0)))
    return conc, quasi


@dataclass(frozen=True)
class FundamentalFunction:
    """phi on (0, 1] with phi(0) = 0.

    ``zero_limit`` is phi(0+), positive only for L-infinity-like cases.
    Tabulated functions interpolate linearly and run linearly to the
    origin below the first grid point.
    """

    func: Fn
    name: str
    concave: bool
    quasiconcave: bool
    zero_limit: float = 0.0
    table: tuple | None = field(default=None, compare=False)

    def __call__(self, t):
        t = _arr(t)
        v = _arr(self.func(np.where(t > 0, t, 1.0)))
        return _out(t, np.where(t > 0, v, 0.0))

    def envelope(self, t):
        return 1.0 / _arr(self(t))

    def slope_at(self, t):
        return _arr(self(t)) / _arr(t)


def make_fundamental(func: Fn, name: str = "phi", *, concave: bool | None = None,
                     quasiconcave: bool | None = None, zero_limit: float = 0.0,
                     grid: np.ndarray | None = None) -> FundamentalFunction:
    """Wrap a callable, checking the shape on the log grid unless flags are given."""
    g = log_grid() if grid is None else grid
    vals = _arr(func(g))
    if np.any(vals <= 0):
        raise ConstructionError(f"fundamental function {name} vanishes at some t > 0")
    if concave is None or quasiconcave is None:
        c, q = _shape_flags(func, g)
        concave = c if concave is None else concave
        quasiconcave = q if quasiconcave is None else quasiconcave
    return FundamentalFunction(func, name, bool(concave), bool(quasiconcave), zero_limit)


def tabulated_fundamental(pairs, name: str = "table") -> FundamentalFunction:
    arr = _arr(pairs)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
        raise ConstructionError("fundamental table must be a list of [t, value] pairs")
    ts, vs = arr[:, 0].copy(), arr[:, 1].copy()
    if np.any(ts <= 0) or np.any(ts > 1) or np.any(np.diff(ts) <= 0) or ts[-1] != 1.0:
        raise ConstructionError("table t values must increase strictly within (0, 1] and end at 1")
    if np.any(~np.isfinite(vs)) or np.any(vs <= 0):
        raise ConstructionError("table values must be finite and positive")
    t_ext = np.concatenate(([0.0], ts))
    v_ext = np.concatenate(([0.0], vs))

    def func(t):
        return np.interp(_arr(t), t_ext, v_ext)

    c, q = _shape_flags(func, ts)
    slopes = np.diff(v_ext) / np.diff(t_ext)
    c = bool(q and np.all(np.diff(slopes) <= _SHAPE_TOL * np.maximum(np.abs(slopes[:-1]), 1.0)))
    return FundamentalFunction(func, name, c, q, 0.0, (ts, vs))


def _lexp(t):
    return 1.0 / (1.0 - np.log(t))


def _llogl(t):
    return t - t * np.log(t)


def fundamental(name: str) -> FundamentalFunction:
    """Catalog lookup.

    Names: linear, sqrt, power:p (t^(1/p)), linf, chi2, kl, cvar:alpha,
    llogl, lexp, lexp-majorant, maxvar (1-(1-t)^2).  The divergence names
    give the capped risk fundamental functions at epsilon = 1.
    """
    key, _, arg = name.partition(":")
    key = key.strip().lower()
    if key == "linear":
        return FundamentalFunction(lambda t: _arr(t), name, True, True)
    if key == "sqrt":
        return FundamentalFunction(np.sqrt, name, True, True)
    if key == "power":
        p = _parse(arg, name)
        if not p >= 1:
            raise ConstructionError("power:p needs p >= 1")
        return FundamentalFunction(lambda t: np.power(_arr(t), 1.0 / p), name, True, True)
    if key == "linf":
        return FundamentalFunction(lambda t: np.ones_like(_arr(t)), name, True, True, 1.0)
    if key == "llogl":
        return FundamentalFunction(_llogl, name, True, True)
    if key == "lexp":
        return FundamentalFunction(_lexp, name, False, True)
    if key == "lexp-majorant":
        return FundamentalFunction(lambda t: 1.0 / np.log1p(1.0 / _arr(t)), name, True, True)
    if key in ("maxvar", "dutch"):
        return FundamentalFunction(lambda t: 1.0 - (1.0 - _arr(t)) ** 2, name, True, True)
    if key in ("chi2", "kl", "cvar", "expectation"):
        from .divergence import make_divergence
        alpha = _parse(arg, name) if key == "cvar" else None
        phi = risk_fundamental(make_divergence(key, 1.0, alpha=alpha))
        return FundamentalFunction(phi.func, name, phi.concave, phi.quasiconcave)
    raise ConstructionError(f"unknown fundamental function {name!r}")


def _parse(arg: str, name: str) -> float:
    try:
        return float(arg)
    except ValueError as exc:
        raise ConstructionError(f"missing or bad parameter in {name!r}") from exc


# --------------------------------------------- divergence fundamentals

def regret_fundamental(spec: DivergenceSpec) -> FundamentalFunction:
    """phi(t) = t f^{-1}(eps/t) for the Orlicz regret of ``spec``."""
    eps = spec.epsilon

    def func(t):
        t = _arr(t)
        return t * _arr(spec.f_inv(eps / t))

    return FundamentalFunction(func, f"regret-{spec.family}", True, True)


def risk_fundamental(spec: DivergenceSpec, *, young: bool = True,
                     grid: np.ndarray | None = None) -> FundamentalFunction:
    """Fundamental function of the divergence risk.

    With ``young`` the capped closed form min{1, t fbar^{-1}(eps/t)} is
    returned.  Otherwise phi is tabulated by evaluating the risk of
    indicator variables directly, which also covers non-Young f.
    """
    base = regret_fundamental(spec)
    if young:
        return FundamentalFunction(lambda t: np.minimum(1.0, base.func(t)),
                                   f"risk-{spec.family}", True, True)
    from .empirical import EmpiricalDistribution
    from .orlicz import divergence_risk
    g = log_grid(65, 1e-6) if grid is None else _arr(grid)
    vals = []
    for t in g:
        if t >= 1.0:
            vals.append(1.0)
            continue
        d = EmpiricalDistribution.from_samples([1.0, 0.0], [t, 1.0 - t])
        vals.append(divergence_risk(d, spec).value)
    return tabulated_fundamental(np.column_stack([g, vals]), f"risk-{spec.family}-numeric")


def envelope(phi: FundamentalFunction) -> Fn:
    return phi.envelope


def associate(phi: FundamentalFunction) -> FundamentalFunction:
    """phi'(t) = t / phi(t), shape flags recomputed."""
    g = log_grid()
    if np.any(_arr(phi(g)) <= 0):
        raise ConstructionError("fundamental function vanishes at some t > 0")

    def func(t):
        t = _arr(t)
        return t / _arr(phi(t))

    c, q = _shape_flags(func, g)
    return FundamentalFunction(func, f"assoc({phi.name})", c, q)


# ----------------------------------------------------- reference tails

@dataclass(frozen=True)
class ReferenceDistribution:
    """Reference tail given by its decreasing rearrangement Y*.

    ``tail`` is the closed-form measure mu(x) = |{t : Y*(t) > x}| when known
    and ``young`` the matching closed form 1/mu(x) above Y*(1).
    """

    rearrangement: Fn
    name: str
    bounded_at_zero: bool = False
    tail: Fn | None = None
    young: Fn | None = None

    def __call__(self, t):
        t = _arr(t)
        return _out(t, _arr(self.rearrangement(t)))

    def tail_measure(self, x):
        """mu(x) = |{t in (0,1] : Y*(t) > x}|."""
        if self.tail is not None:
            x = _arr(x)
            return _out(x, np.minimum(1.0, _arr(self.tail(x))))
        return _tail_measure(self.rearrangement, x)


def _tail_measure(E: Fn, x):
    # bisection in log t on the nonincreasing map E
    x = _arr(x)
    xs = np.atleast_1d(x)
    out = np.ones_like(xs)
    e1 = float(_arr(E(np.float64(1.0))))
    live = xs >= e1
    if live.any():
        xl = xs[live]
        lo = np.full(xl.shape, -1.0)
        for _ in range(2000):
            need = _arr(E(np.exp(lo))) <= xl
            if not need.any():
                break
            lo = np.where(need, 2.0 * lo, lo)
            if np.any(lo < -740):
                lo = np.maximum(lo, -745.0)
                break
        hi = np.zeros_like(lo)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            above = _arr(E(np.exp(mid))) > xl
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
            if np.all(hi - lo <= 1e-16 * np.maximum(1.0, np.abs(lo))):
                break
        res = np.exp(lo)
        res = np.where(_arr(E(np.exp(lo))) > xl, res, 0.0)
        out[live] = res
    return _out(x, out)


def reference(name: str) -> ReferenceDistribution:
    """Catalog: exponential (1 - log t), pareto:p, constant:c, log-ratio, neglog."""
    key, _, arg = name.partition(":")
    key = key.strip().lower()
    if key in ("exponential", "exponential_shifted"):
        shift = _parse(arg, name) if arg else 1.0
        return ReferenceDistribution(
            lambda t: shift - np.log(_arr(t)), name,
            tail=lambda x: np.exp(np.minimum(shift - _arr(x), 700.0)),
            young=lambda x: np.exp(_arr(x) - shift))
    if key == "neglog":
        return ReferenceDistribution(lambda t: -np.log(_arr(t)), name,
                                     tail=lambda x: np.exp(np.minimum(-_arr(x), 700.0)))
    if key == "pareto":
        p = _parse(arg, name)
        if not p > 1:
            raise ConstructionError("pareto reference needs p > 1")
        return ReferenceDistribution(
            lambda t: np.power(_arr(t), -1.0 / p), name,
            tail=lambda x: np.power(np.maximum(_arr(x), 1e-300), -p),
            young=lambda x: np.power(_arr(x), p))
    if key == "constant":
        c = _parse(arg, name)
        if not c > 0:
            raise ConstructionError("constant reference needs c > 0")
        return ReferenceDistribution(lambda t: np.full_like(_arr(t), c), name, bounded_at_zero=True,
                                     tail=lambda x: np.where(_arr(x) < c, 1.0, 0.0))
    if key == "log-ratio":
        return ReferenceDistribution(
            lambda t: np.log1p(1.0 / _arr(t)), name,
            tail=lambda x: 1.0 / np.expm1(np.maximum(_arr(x), 1e-300)),
            young=lambda x: np.expm1(_arr(x)))
    raise ConstructionError(f"unknown reference {name!r}")


def reference_from_callable(func: Fn, name: str = "custom") -> ReferenceDistribution:
    return ReferenceDistribution(func, name)


def reference_from_table(pairs, name: str = "custom") -> ReferenceDistribution:
    """Y* tabulated at increasing t in (0, 1], ending at t = 1.

    Interpolation is linear in log t; below the first point the first
    segment's log-t slope is continued, so a flat start means a bounded tail.
    """
    arr = _arr(pairs)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
        raise ConstructionError("reference table must be a list of [t, value] pairs")
    ts, ys = arr[:, 0].copy(), arr[:, 1].copy()
    if np.any(ts <= 0) or np.any(ts > 1) or np.any(np.diff(ts) <= 0) or ts[-1] != 1.0:
        raise ConstructionError("reference t values must increase strictly within (0, 1] and end at 1")
    if np.any(~np.isfinite(ys)) or np.any(ys < 0):
        raise ConstructionError("reference values must be finite and nonnegative")
    if np.any(np.diff(ys) > 0):
        raise ConstructionError("reference rearrangement must be nonincreasing in t")
    lt = np.log(ts)
    s0 = (ys[1] - ys[0]) / (lt[1] - lt[0])

    def func(t):
        u = np.log(_arr(t))
        inside = np.interp(u, lt, ys)
        return np.where(u < lt[0], ys[0] + s0 * (u - lt[0]), inside)

    return ReferenceDistribution(func, name, bounded_at_zero=bool(s0 == 0.0))


@dataclass(frozen=True)
class ReferenceCheck:
    status: str  # "ok", "needs_majorant" or "invalid"
    t_witness: float | None
    message: str


def check_reference(Y: ReferenceDistribution, grid: np.ndarray | None = None) -> ReferenceCheck:
    """Classify t -> t Y*(t) on the log grid.

    ok: increasing and concave; invalid: Y*(t) > Y*(1)/t somewhere, so no
    majorant can repair it; needs_majorant otherwise.
    """
    g = log_grid() if grid is None else _arr(grid)
    y = _arr(Y(g))
    h = g * y
    y1 = float(y[-1])
    bad_bound = np.flatnonzero(h > y1 * (1.0 + _SHAPE_TOL) + 1e-300)
    dh = np.diff(h)
    dec = np.flatnonzero(dh < -_SHAPE_TOL * np.maximum(np.abs(h[1:]), 1e-300))
    if bad_bound.size:
        t_w = float(g[dec[-1] + 1]) if dec.size else float(g[bad_bound[-1]])
        return ReferenceCheck("invalid", t_w,
                              f"t*Y*(t) decreases near t={t_w:.4g}; the bound Y*(t) <= Y*(1)/t fails")
    ext_t = np.concatenate(([0.0], g))
    ext_h = np.concatenate(([0.0], h))
    slopes = np.diff(ext_h) / np.diff(ext_t)
    nonconc = np.flatnonzero(np.diff(slopes) > _SHAPE_TOL * np.maximum(np.abs(slopes[:-1]), 1.0))
    if dec.size == 0 and nonconc.size == 0:
        return ReferenceCheck("ok", None, "t*Y*(t) is increasing and concave")
    t_w = float(g[(dec[0] if dec.size else nonconc[0]) + 1])
    return ReferenceCheck("needs_majorant", t_w,
                          f"t*Y*(t) is not concave near t={t_w:.4g}; least concave majorant required")


# ---------------------------------------------------- concave majorant

def _upper_hull(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Indices of the upper concave hull of points sorted by x."""
    hull: list[int] = []
    for i in range(x.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull)


def least_concave_majorant(phi: FundamentalFunction, grid: np.ndarray | None = None) -> FundamentalFunction:
    """Upper concave hull over the grid points plus the origin, as a table."""
    if phi.table is not None and grid is None:
        g, v = phi.table
    else:
        g = log_grid() if grid is None else _arr(grid)
        v = _arr(phi(g))
    _, quasi = _shape_flags(lambda t: np.interp(t, g, v), g)
    if not quasi:
        raise ConstructionError(f"{phi.name} is not quasiconcave; no majorant is equivalent to it")
    x = np.concatenate(([0.0], g))
    y = np.concatenate(([0.0], v))
    idx = _upper_hull(x, y)
    idx = idx[idx > 0]
    maj = tabulated_fundamental(np.column_stack([x[idx], y[idx]]), f"majorant({phi.name})")
    return FundamentalFunction(maj.func, maj.name, True, True, 0.0, maj.table)


# ------------------------------------------------ tail-specific Young

def young_from_envelope(E: ReferenceDistribution, side: str = "dual",
                        grid: np.ndarray | None = None) -> YoungFunction:
    """Young function with Phi^{-1}(x) = E(1/x) for x >= 1 and a chord below.

    ``side="dual"``: E is the envelope of the associate space and the
    Amemiya norm of the conjugate of Phi has fundamental function t E(t).
    ``side="primal"``: E is the Luxemburg envelope, and the Luxemburg norm
    of the returned function has fundamental function 1/E(t).
    """
    if side not in ("dual", "primal"):
        raise DomainError("side must be 'dual' or 'primal'")
    if E.bounded_at_zero:
        raise ConstructionError(
            f"reference {E.name} is bounded at 0+ (no tail); use the cvar/expectation family")
    g = log_grid() if grid is None else _arr(grid)
    chk = check_reference(E, g)
    if chk.status == "invalid":
        raise ConstructionError(f"reference {E.name} is invalid: {chk.message}")
    e_tiny = float(_arr(E(np.float64(1e-300))))
    if math.isfinite(e_tiny) and e_tiny <= float(_arr(E(np.float64(g[0])))) * (1.0 + 1e-12):
        raise ConstructionError(
            f"reference {E.name} is bounded at 0+ (no tail); use the cvar/expectation family")
    e1 = float(_arr(E(np.float64(1.0))))
    majorant = chk.status == "needs_majorant"
    if majorant:
        h = g * _arr(E(g))
        # t Y*(t) may dip (it stays below Y*(1)), so hull directly rather than
        # through least_concave_majorant, which insists on quasiconcavity
        x0 = np.concatenate(([0.0], g))
        y0 = np.concatenate(([0.0], h))
        idx = _upper_hull(x0, y0)
        idx = idx[idx > 0]
        ts, hs = x0[idx], y0[idx]
        t0, ratio0 = ts[0], hs[0] / (ts[0] * float(_arr(E(np.float64(ts[0])))))

        def e_eff(t):
            t = _arr(t)
            inside = np.interp(t, ts, hs) / t
            return np.where(t < t0, _arr(E(np.minimum(t, t0))) * ratio0, inside)
        e1 = float(e_eff(np.float64(1.0)))
    else:
        e_eff = E.rearrangement

    def phi_inv(y):
        y = _arr(y)
        yy = np.maximum(y, 1.0)
        with np.errstate(divide="ignore"):
            above = _arr(e_eff(1.0 / yy))
        return _out(y, np.where(y <= 1.0, e1 * np.maximum(y, 0.0), above))

    closed = E.young if (E.young is not None and not majorant) else None

    def phi(x):
        x = _arr(x)
        xs = np.atleast_1d(np.maximum(x, 0.0))
        out = xs / e1
        up = xs > e1
        if up.any():
            if closed is not None:
                out[up] = _arr(closed(xs[up]))
            else:
                mu = np.atleast_1d(_tail_measure(e_eff, xs[up]))
                with np.errstate(divide="ignore"):
                    out[up] = np.where(mu > 0, 1.0 / mu, np.inf)
        return _out(x, out.reshape(np.shape(x)) if np.ndim(x) else out)

    return YoungFunction(phi, phi_inv, name=f"young({E.name})", finite=True,
                         meta={"side": side, "reference": E.name, "majorant": majorant,
                               "check": chk.status, "envelope": e_eff, "e1": e1,
                               "numeric_tail": closed is None})


def divergence_from_young(phi: YoungFunction, epsilon: float = 1.0) -> DivergenceSpec:
    """f(x) = (Phi(x) - Phi(1)) on [1, inf), zero on [0, 1]."""
    if not phi.finite or math.isfinite(phi.bound):
        raise ConstructionError("divergence_from_young needs a finite Young function")
    if not check_supercoercive(phi.phi):
        raise ConstructionError("Young function is not supercoercive (Phi(x)/x must grow)")
    p1 = float(_arr(phi.phi(np.float64(1.0))))

    def f(x):
        x = _arr(x)
        with np.errstate(over="ignore", invalid="ignore"):
            v = np.where(x <= 1.0, 0.0, _arr(phi.phi(np.maximum(x, 1.0))) - p1)
        return _out(x, np.where(x < 0, np.inf, v))

    def f_inv(y):
        y = _arr(y)
        return _out(y, np.where(y > 0, _arr(phi.phi_inv(np.maximum(y, 0.0) + p1)), 0.0))

    return custom_divergence(f, f_inv, name="young", epsilon=epsilon,
                             params={"young": phi.name})


def divergence_table(spec: DivergenceSpec, n: int | None = None, top: float = 1e12) -> list:
    """Tabulate f on [0, x_max] with x_max = f^{-1}(top); log-spaced above 1.

    Only vertices of the lower convex hull are kept, which removes rounding
    wiggles that would break convexity of the interpolant.
    """
    n = n or grid_size()
    xmax = float(_arr(spec.f_inv(np.float64(top))))
    if not (math.isfinite(xmax) and xmax > 1.0):
        raise ConstructionError("cannot tabulate f: inverse at the top level is not finite")
    xs = 1.0 + np.logspace(-6, math.log10(xmax - 1.0), max(n - 2, 2))
    xs = np.concatenate(([0.0, 1.0], xs))
    fs = _arr(spec.f(xs)).copy()
    fs[:2] = 0.0
    keep = _upper_hull(xs, -fs)
    return [[float(xs[k]), float(fs[k])] for k in keep]


# ------------------------------------------------ coincidence test

@dataclass(frozen=True)
class CoincidenceResult:
    coincides: bool
    indeterminate: bool
    lam: float | None

    def __bool__(self) -> bool:
        return self.coincides


def _tabulated_young(phi: YoungFunction, top: float, n: int = 4000) -> Fn:
    """Monotone log-log spline of a Young function evaluated through its tail
    measure; below e1 Phi is the exact chord x / e1."""
    e1 = float(phi.meta["e1"])
    lx = np.linspace(math.log(e1), math.log(max(top, 2.0 * e1)) + 0.1, n)
    lv = np.log(_arr(phi.phi(np.exp(lx))))
    spline = PchipInterpolator(lx, lv, extrapolate=True)

    def func(x):
        x = _arr(x)
        with np.errstate(divide="ignore"):
            v = np.where(x <= e1, x / e1, np.exp(spline(np.log(np.maximum(x, e1)))))
        return _out(x, v)
    return func


def marcinkiewicz_coincidence(phi: YoungFunction, *, deltas=(1e-3, 1e-6, 1e-9),
                              max_k: int = 40) -> CoincidenceResult:
    """Is t -> Phi^{-1}(1/t) in the Orlicz space of Phi?

    For lam = 2^k the integral over [delta, 1] is computed by adaptive
    quadrature in s = -log t.  lam stabilizes when the integral stays <= 1
    and the last increment is at most half the previous one.
    """
    cuts = [0.0] + [-math.log(dl) for dl in deltas]
    phi_eval = phi.phi
    if phi.meta.get("numeric_tail"):
        phi_eval = _tabulated_young(phi, float(_arr(phi.phi_inv(np.float64(math.exp(cuts[-1]))))))
    indeterminate = False
    for k in range(max_k + 1):
        lam = 2.0 ** k

        def integrand(s):
            x = float(_arr(phi.phi_inv(np.float64(math.exp(s))))) / lam
            with np.errstate(over="ignore"):
                v = float(_arr(phi_eval(np.float64(x))))
            return v * math.exp(-s) if math.isfinite(v) else 1e300

        pieces = []
        bad = False
        for a, b in zip(cuts, cuts[1:]):
            with warnings.catch_warnings():
                # poor convergence is reported through the indeterminate flag
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                val, err = integrate.quad(integrand, a, b, limit=200)
            if not math.isfinite(val) or err > 1e-6 * (1.0 + abs(val)):
                bad = True
            pieces.append(val)
        total = sum(pieces)
        if total > 1.0:
            indeterminate = indeterminate or bad
            continue
        last, prev = pieces[-1], pieces[-2]
        if last <= 0.5 * prev or last <= 1e-12:
            return CoincidenceResult(True, bad, lam)
        indeterminate = indeterminate or bad
        return CoincidenceResult(False, indeterminate, None)
    return CoincidenceResult(False, indeterminate, None)


__all__ = [
    "FundamentalFunction", "ReferenceDistribution", "ReferenceCheck", "CoincidenceResult",
    "fundamental", "make_fundamental", "tabulated_fundamental", "regret_fundamental",
    "risk_fundamental", "envelope", "associate", "reference", "reference_from_table",
    "reference_from_callable", "check_reference", "least_concave_majorant",
    "young_from_envelope", "divergence_from_young", "divergence_table",
    "marcinkiewicz_coincidence", "log_grid", "grid_size", "lambert_w",
]
