"""Smallest and largest rearrangement-invariant measures for a fundamental function."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ._optim import golden_max_vec
from .divergence import young_conjugate
from .empirical import EmpiricalDistribution, decreasing_rearrangement
from .errors import ConstructionError
from .fundamental import (FundamentalFunction, log_grid, reference_from_callable,
                          young_from_envelope)
from .orlicz import orlicz_norm

_SCAN = 64
_TM_GRID = 4096


def _phi(phi: FundamentalFunction, t) -> np.ndarray:
    return np.asarray(phi(np.asarray(t, dtype=float)), dtype=float)


def _distortion(phi: FundamentalFunction) -> FundamentalFunction:
    # risk measures need phi(1) = 1; rescale otherwise (lexp-majorant has 1/log 2)
    top = float(_phi(phi, 1.0))
    if top == 1.0:
        return phi
    table = None if phi.table is None else (phi.table[0], phi.table[1] / top)
    return dataclasses.replace(phi, func=lambda t: _phi(phi, t) / top, name=f"{phi.name}/phi(1)",
                               zero_limit=phi.zero_limit / top, table=table)


def _segments(d: EmpiricalDistribution):
    r = decreasing_rearrangement(d)
    return r.starts, r.breakpoints, r.levels, r.cumulative()


def marcinkiewicz_quasi(d: EmpiricalDistribution, phi: FundamentalFunction) -> float:
    """sup_t phi(t) X*(t); per segment the sup sits at the right end."""
    _, b, lev, _ = _segments(d)
    return float(np.max(_phi(phi, b) * lev))


def marcinkiewicz_norm(d: EmpiricalDistribution, phi: FundamentalFunction) -> float:
    """sup_t phi(t) X**(t).

    On a rearrangement segment X**(t) = B + A/t.  Each segment gets a
    64-point scan and golden refinement around the best scan point.
    """
    s, b, lev, cum = _segments(d)
    prev = np.concatenate(([0.0], cum[:-1]))
    A = prev - lev * s
    B = lev
    ends = _phi(phi, b) * cum / b
    best = float(np.max(ends))
    live = (A > 0) & (b > s)
    if not live.any():
        return best
    s, b, A, B = s[live], b[live], A[live], B[live]
    u = np.linspace(0.0, 1.0, _SCAN + 1)[1:]
    tt = s[:, None] + (b - s)[:, None] * u[None, :]
    vals = _phi(phi, tt) * (A[:, None] / tt + B[:, None])
    j = np.argmax(vals, axis=1)
    best = max(best, float(vals.max()))
    width = (b - s) / _SCAN
    centre = tt[np.arange(tt.shape[0]), j]
    lo = np.maximum(s, centre - width)
    lo = np.where(lo <= 0.0, centre * 1e-3, lo)
    hi = np.minimum(b, centre + width)

    def obj(t):
        return _phi(phi, t) * (A / t + B)

    _, fv = golden_max_vec(obj, lo, hi, iters=90)
    return max(best, float(np.max(fv)))


def _check_concave(phi: FundamentalFunction):
    if not phi.concave:
        raise ConstructionError(
            f"{phi.name} is not concave; apply least_concave_majorant first")


def lorentz_norm(d: EmpiricalDistribution, phi: FundamentalFunction) -> float:
    """Stieltjes sum of X* against phi; the phi(0+) atom is carried by the top level."""
    _check_concave(phi)
    _, b, lev, _ = _segments(d)
    pb = _phi(phi, b)
    inc = np.diff(np.concatenate(([0.0], pb)))
    return float(np.dot(lev, inc))


def spectral_risk(d: EmpiricalDistribution, phi: FundamentalFunction) -> float:
    """integral of F^{-1}(1 - w) d phi(w) on the signed values, phi scaled to phi(1) = 1."""
    _check_concave(phi)
    phi = _distortion(phi)
    v = d.values[::-1]
    w = d.weights[::-1]
    b = np.cumsum(w)
    b[-1] = 1.0
    inc = np.diff(np.concatenate(([0.0], _phi(phi, b))))
    return float(np.dot(v, inc))


def spectral_weights(d: EmpiricalDistribution, phi: FundamentalFunction) -> np.ndarray:
    """Density of the spectral risk on the sorted samples, ties averaged."""
    _check_concave(phi)
    phi = _distortion(phi)
    v = d.values[::-1]
    w = d.weights[::-1]
    _, start = np.unique(-v, return_index=True)
    gmass = np.add.reduceat(w, start)
    cum = np.cumsum(gmass)
    cum[-1] = 1.0
    inc = np.diff(np.concatenate(([0.0], _phi(phi, cum))))
    sizes = np.diff(np.concatenate((start, [v.size])))
    z = np.repeat(inc / gmass, sizes)
    return z[::-1].copy()


def _tm_parts(d: EmpiricalDistribution):
    v, w = d.values, d.weights
    c = np.cumsum(w)
    c[-1] = 1.0
    tail = np.concatenate((np.cumsum((w * v)[::-1])[::-1], [0.0]))  # sum over j >= k
    prev = np.concatenate(([0.0], c[:-1]))

    def upper_integral(t):
        # integral over (t, 1] of the quantile function
        t = np.asarray(t, dtype=float)
        k = np.searchsorted(c, t, side="right")
        k = np.minimum(k, v.size - 1)
        return tail[k + 1] + v[k] * (c[k] - t)

    return c, prev, upper_integral


def _tm_objective(phi: FundamentalFunction, m: float, upper_integral):
    def T(t):
        t = np.asarray(t, dtype=float)
        w_t = (1.0 - _phi(phi, 1.0 - t)) / t
        return w_t * m + (1.0 - w_t) * upper_integral(t) / (1.0 - t)
    return T


def tm_risk(d: EmpiricalDistribution, phi: FundamentalFunction, *, return_t: bool = False):
    """sup over t of w(t) E[X] + (1 - w(t)) CVaR_t(X), w(t) = (1 - phi(1-t))/t.

    Evaluated at the cumulative-mass points and on a uniform grid, the best
    cells refined by golden section.  The endpoints both give E[X].  As for
    spectral_risk, phi is scaled to phi(1) = 1.
    """
    _check_concave(phi)
    phi = _distortion(phi)
    if phi.zero_limit > 0:
        raise ConstructionError("tm_risk needs phi(0+) = 0")
    m = d.mean()
    if d.n == 1 or float(np.ptp(d.values)) == 0.0:
        return (m, None) if return_t else m
    c, _, upper = _tm_parts(d)
    T = _tm_objective(phi, m, upper)
    n = _TM_GRID
    grid = (np.arange(1, n) / n)
    pts = np.unique(np.concatenate((grid, c[(c > 0) & (c < 1)])))
    vals = T(pts)
    k = int(np.argmax(vals))
    best, t_best = float(vals[k]), float(pts[k])
    order = np.argsort(vals)[::-1][:8]
    lo = np.maximum(pts[order] - 1.0 / n, 1e-15)
    hi = np.minimum(pts[order] + 1.0 / n, 1.0 - 1e-15)
    xs, fv = golden_max_vec(lambda t: T(t), lo, hi, iters=80)
    j = int(np.argmax(fv))
    if fv[j] > best:
        best, t_best = float(fv[j]), float(xs[j])
    if m > best:
        best, t_best = m, None
    return (best, t_best) if return_t else best


def tm_weights(d: EmpiricalDistribution, phi: FundamentalFunction) -> np.ndarray:
    """Dual density w(t*) + (1 - w(t*)) Z_cvar(t*) at the maximizing t."""
    from .empirical import cvar_weights
    _, t = tm_risk(d, phi, return_t=True)
    if t is None:
        return np.ones_like(d.weights)
    w_t = float((1.0 - _phi(_distortion(phi), 1.0 - t)) / t)
    return w_t + (1.0 - w_t) * cvar_weights(d, t)


# ------------------------------------------------------------ Krein

def krein_condition(phi: FundamentalFunction, *, scales=(2.0, 4.0, 16.0),
                    margin: float = 1e-2) -> bool:
    """sup_t a(t/s)/a(t) < 1 for the associate a(t) = t/phi(t).

    Closed-form phi is probed down to t = 1e-300; tabulated phi only over
    its own grid.  The sup must stay below 1 - margin for every s.
    """
    if phi.table is not None:
        lo = float(phi.table[0][0])
        g = np.exp(np.linspace(math.log(lo), 0.0, 2048))
    else:
        g = np.exp(np.linspace(math.log(1e-300), 0.0, 4096))
    worst = 0.0
    for s in scales:
        t = g[g / s >= g[0]] if phi.table is not None else g
        a_t = t / _phi(phi, t)
        a_ts = (t / s) / _phi(phi, t / s)
        worst = max(worst, float(np.max(a_ts / a_t)))
    return worst < 1.0 - margin


def krein_constant(phi: FundamentalFunction, n: int = 200) -> float:
    """K = sup_t E**(t)/E(t) for E = 1/phi, so that norm <= K quasi-norm.

    E**(t) is integrated in u = log(t/s) up to s = 1e-300, below which phi
    underflows.  Only meaningful when krein_condition holds; otherwise the
    truncation caps a divergent integral at a large finite value.
    """
    ts = np.exp(np.linspace(math.log(1e-12), 0.0, n))
    best = 1.0
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        for t in ts:
            top = math.log(t / 1e-300)

            def integrand(u, t=t):
                return math.exp(-u) / float(_phi(phi, t * math.exp(-u)))
            val, _ = integrate.quad(integrand, 0.0, top, limit=400,
                                    points=[x for x in (1.0, 5.0, 20.0, 80.0) if x < top])
            if not math.isfinite(val):
                return math.inf
            best = max(best, val * float(_phi(phi, t)))
    return best


# ------------------------------------------------------- sandwich

def orlicz_young(phi: FundamentalFunction):
    """Young function whose Amemiya norm has fundamental function phi.

    Phi^{-1}(x) = x phi(1/x) comes from the envelope t -> phi(t)/t and the
    norm uses its conjugate, which is returned.  A linear phi = c t returns
    the float c instead (the norm is then c E|X|).  Building it is the
    expensive part, so reuse it across samples.
    """
    if phi.table is not None:
        r = phi.table[1] / phi.table[0]
        ratio = np.array([r[0], r[0]]) if np.ptp(r) <= 1e-12 * r[0] else np.array([2.0, 1.0])
    else:
        tiny = np.array([1e-300, 1e-200])
        ratio = _phi(phi, tiny) / tiny
    if abs(ratio[0] - ratio[1]) <= 1e-12 * ratio[1]:
        if abs(float(_phi(phi, 1.0)) - ratio[0]) > 1e-12 * ratio[0]:
            raise ConstructionError("fundamental function with finite slope at 0 must be linear here")
        return float(ratio[0])
    if phi.table is not None:
        # a table is linear below its first point, which would make the envelope
        # bounded; continue it as a power law with the first segment's log-slope
        ts, vs = phi.table
        a = math.log(vs[1] / vs[0]) / math.log(ts[1] / ts[0]) if ts.size > 1 else 1.0
        a = min(max(a, 1e-6), 1.0)
        t0, e0 = float(ts[0]), float(vs[0] / ts[0])

        def env(t):
            t = np.asarray(t, dtype=float)
            with np.errstate(divide="ignore"):
                head = e0 * (np.maximum(t, 1e-300) / t0) ** (a - 1.0)
            return np.where(t < t0, head, _phi(phi, np.maximum(t, t0)) / np.maximum(t, t0))
    else:
        def env(t):
            return _phi(phi, t) / np.asarray(t, dtype=float)
    ref = reference_from_callable(env, f"envelope({phi.name})")
    return young_conjugate(young_from_envelope(ref, "dual"))


def _amemiya_grid(a: np.ndarray, w: np.ndarray, psi, slope_inf: float, rounds: int = 40) -> float:
    # inf_t t (1 + E psi(a/t)) by nested grids: the numeric conjugate costs the
    # same for one t or a whole grid of them, so each round evaluates 32 at once
    def h(ts):
        with np.errstate(over="ignore", invalid="ignore"):
            vals = np.asarray(psi((a[None, :] / ts[:, None]).ravel()), dtype=float)
            out = ts * (1.0 + vals.reshape(ts.size, a.size) @ w)
        return np.where(np.isnan(out), np.inf, out)

    top = float(a.max())
    ts = top * np.logspace(-12, 6, 64)
    best = math.inf
    for _ in range(rounds):
        v = h(ts)
        k = int(np.argmin(v))
        best = min(best, float(v[k]))
        lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, ts.size - 1)]
        if hi - lo <= 1e-13 * hi:
            break
        ts = np.linspace(lo, hi, 32)
    if math.isfinite(slope_inf):
        best = min(best, slope_inf * float(np.dot(w, a)))
    return best


def orlicz_for_fundamental(d: EmpiricalDistribution, phi: FundamentalFunction, young=None) -> float:
    """Amemiya norm of d in the Orlicz space with fundamental function phi."""
    young = orlicz_young(phi) if young is None else young
    a = np.abs(d.values)
    if isinstance(young, float):
        return young * float(np.dot(d.weights, a))
    if not a.any():
        return 0.0
    return _amemiya_grid(a, d.weights, young.phi, young.slope_inf)


@dataclass(frozen=True)
class EmbeddingReport:
    marcinkiewicz: float
    orlicz: float
    lorentz: float
    ok: bool
    slack: float

    def as_dict(self) -> dict:
        return {"marcinkiewicz": self.marcinkiewicz, "orlicz": self.orlicz,
                "lorentz": self.lorentz, "ok": self.ok}


def embedding_check(d: EmpiricalDistribution, phi: FundamentalFunction,
                    orlicz_value: float | None = None, slack: float = 1e-9) -> EmbeddingReport:
    """M <= Orlicz <= Lorentz with relative slack."""
    m = marcinkiewicz_norm(d, phi)
    o = orlicz_for_fundamental(d, phi) if orlicz_value is None else float(orlicz_value)
    lam = lorentz_norm(d, phi)
    tol = slack * max(1.0, abs(lam))
    return EmbeddingReport(m, o, lam, bool(m <= o + tol and o <= lam + tol), slack)


__all__ = [
    "marcinkiewicz_quasi", "marcinkiewicz_norm", "lorentz_norm", "spectral_risk",
    "spectral_weights", "tm_risk", "tm_weights", "krein_condition", "krein_constant",
    "orlicz_young", "orlicz_for_fundamental", "embedding_check", "EmbeddingReport",
]
