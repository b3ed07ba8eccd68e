"""Luxemburg and Amemiya norms, Orlicz regret and f-divergence risk."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog
from scipy.special import logsumexp

from ._optim import ScalarMin, brent_min, minimize_positive
from .divergence import DivergenceSpec, YoungFunction
from .empirical import EmpiricalDistribution, cvar_weights
from .errors import NumericalError, WeightsUnavailableError

DUAL_RENORM_TOL = 1e-4


@dataclass(frozen=True)
class RiskResult:
    """Risk value with its optimizer certificate.

    ``dual_weights`` is aligned with the sorted sample values of the
    distribution the result was computed from.
    """

    value: float
    t_star: float | None = None
    mu_star: float | None = None
    dual_weights: np.ndarray | None = None
    iterations: int = 0
    tolerance_achieved: float = 0.0
    boundary: bool = False


def _positive_mean(y: np.ndarray, w: np.ndarray) -> float:
    return float(np.dot(w, np.maximum(y, 0.0)))


def _limit_at_zero(slope: float, y: np.ndarray, w: np.ndarray) -> float:
    # lim_{t->0} t * E g(y/t) = slope * E[y+], with inf * 0 = 0
    pos = _positive_mean(y, w)
    if pos == 0.0:
        return 0.0
    return slope * pos


def _perspective_min(y, w, eps, mean_g, slope, t0=None, ftol=1e-12):
    scale = float(np.max(np.abs(y)))
    if scale == 0.0:
        return minimize_positive(lambda t: t * eps, 1.0, limit0=0.0)

    def h(t):
        return t * (eps + mean_g(y / t))

    lim = _limit_at_zero(slope, y, w)
    return minimize_positive(h, t0 if t0 else scale, limit0=lim if math.isfinite(lim) else None,
                             ftol=ftol)


def luxemburg_norm(d: EmpiricalDistribution, phi: YoungFunction) -> float:
    """inf{lam > 0 : E Phi(|X|/lam) <= 1}; returns the feasible bisection end."""
    a = np.abs(d.values)
    w = d.weights
    top = float(a.max())
    if top == 0.0:
        return 0.0

    def load(lam):
        with np.errstate(over="ignore", invalid="ignore"):
            v = float(np.dot(w, phi.phi(a / lam)))
        return v if v == v else math.inf

    hi = top
    while load(hi) > 1.0:
        hi *= 2.0
        if hi > 1e300:
            raise NumericalError("Luxemburg norm bracket diverged")
    lo = hi / 2.0
    while load(lo) <= 1.0:
        hi = lo
        lo /= 2.0
        if lo < 1e-300:
            return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi):
            break
        if load(mid) <= 1.0:
            hi = mid
        else:
            lo = mid
    return hi


def orlicz_norm(d: EmpiricalDistribution, gbar: YoungFunction) -> float:
    """Amemiya form inf_{t>0} t (1 + E gbar(|X|/t))."""
    return orlicz_norm_result(d, gbar).value


def orlicz_norm_result(d: EmpiricalDistribution, gbar: YoungFunction) -> RiskResult:
    a = np.abs(d.values)
    w = d.weights

    def mean_g(z):
        with np.errstate(over="ignore", invalid="ignore"):
            v = float(np.dot(w, gbar.phi(z)))
        return v if math.isfinite(v) else math.inf

    res = _perspective_min(a, w, 1.0, mean_g, gbar.slope_inf)
    return RiskResult(res.value, None if res.boundary else res.x, None, None,
                      res.iterations, res.tolerance, res.boundary)


def _regret_core(y, w, spec: DivergenceSpec, t0=None, ftol=1e-12):
    if spec.homogeneous:
        v = float(np.dot(w, spec.g(y)))
        return ScalarMin(0.0, v, 1, 0.0, True)
    return _perspective_min(y, w, spec.epsilon, lambda z: spec.mean_g(z, w), spec.bound,
                            t0=t0, ftol=ftol)


def orlicz_regret(d: EmpiricalDistribution, spec: DivergenceSpec) -> RiskResult:
    """V(X) = inf_{t>0} t (eps + E g(X/t)) on signed samples."""
    res = _regret_core(d.values, d.weights, spec)
    return RiskResult(res.value, None if res.boundary else res.x, None, None,
                      res.iterations, res.tolerance, res.boundary)


def _homogeneous_risk(d: EmpiricalDistribution, spec: DivergenceSpec) -> RiskResult:
    # mu + E g(X - mu) is piecewise linear with kinks at the samples
    v, w = d.values, d.weights
    slope = spec.bound
    tail_w = np.concatenate((np.cumsum(w[::-1])[::-1][1:], [0.0]))
    tail_wv = np.concatenate((np.cumsum((w * v)[::-1])[::-1][1:], [0.0]))
    obj = v + slope * (tail_wv - v * tail_w)
    k = int(np.argmin(obj))
    alpha = 1.0 - 1.0 / slope
    z = cvar_weights(d, max(0.0, alpha))
    return RiskResult(float(obj[k]), None, float(v[k]), z, 1, 0.0, True)


def _newton_risk(v, w, spec: DivergenceSpec, gap_tol: float, maxiter: int = 60):
    """Damped Newton on (mu, t) for smooth g, certified by a feasible dual density.

    Returns (value, mu, t, z, iterations, gap) or None when the certificate
    does not close; the caller then falls back to the nested search.
    """
    eps = spec.epsilon
    m = float(np.dot(w, v))
    sd = math.sqrt(float(np.dot(w, (v - m) ** 2)))
    if sd == 0.0:
        return None
    mu, t = m, sd / math.sqrt(eps)

    def parts(mu, t):
        y = (v - mu) / t
        with np.errstate(over="ignore", invalid="ignore"):
            g0 = float(np.dot(w, spec.g(y)))
            g1 = np.asarray(spec.g_prime(y), dtype=float)
            g2 = np.asarray(spec.g_second(y), dtype=float)
        return y, g0, g1, g2

    def value(mu, t):
        y, g0, _, _ = parts(mu, t)
        return mu + t * (eps + g0)

    with np.errstate(over="ignore", invalid="ignore"):
        fval = value(mu, t)
        it = 0
        stalls, last_dec = 0, math.inf
        for it in range(1, maxiter + 1):
            y, g0, g1, g2 = parts(mu, t)
            if not (math.isfinite(fval) and np.all(np.isfinite(g1)) and np.all(np.isfinite(g2))):
                return None
            grad = np.array([1.0 - np.dot(w, g1), eps + g0 - np.dot(w, y * g1)])
            wg = w * g2
            H = np.array([[wg.sum(), np.dot(wg, y)], [np.dot(wg, y), np.dot(wg, y * y)]]) / t
            H[0, 0] += 1e-14 * abs(H[0, 0]) + 1e-300
            H[1, 1] += 1e-14 * abs(H[1, 1]) + 1e-300
            try:
                step = -np.linalg.solve(H, grad)
            except np.linalg.LinAlgError:
                return None
            slope = float(np.dot(grad, step))
            if not (slope < 0 and np.all(np.isfinite(step))):
                step, slope = -grad, -float(np.dot(grad, grad))
            if -slope <= 1e-30 * (1.0 + abs(fval)):
                break
            if -slope < 1e-8 * (1.0 + abs(fval)) and t + step[1] > 0.5 * t:
                # quadratic regime: full steps, the objective is too flat to line-search
                mu, t = mu + step[0], t + step[1]
                fval = value(mu, t)
                stalls = stalls + 1 if -slope >= last_dec else 0
                last_dec = -slope
                if stalls >= 3:
                    break
                continue
            a = 1.0
            while t + a * step[1] <= 0:
                a *= 0.5
            moved = False
            for _ in range(60):
                fn = value(mu + a * step[0], t + a * step[1])
                if fn <= fval + 1e-4 * a * slope:
                    moved = True
                    break
                a *= 0.5
            if not moved:
                break
            mu, t = mu + a * step[0], t + a * step[1]
            fval = fn
        y, g0, g1, g2 = parts(mu, t)
        zsum = float(np.dot(w, g1))
        if not (zsum > 0 and math.isfinite(zsum)):
            return None
        z = g1 / zsum
        div = float(np.dot(w, spec.f(z)))
        if not math.isfinite(div):
            return None
        if div > eps:
            theta = 1.0 - eps / div
            z = (1.0 - theta) * z + theta
        lower = float(np.dot(w, v * z))
    gap = fval - lower
    if not gap <= gap_tol:
        return None
    return fval, mu, t, z, it, max(gap, 0.0)


def _table_risk(v, w, spec: DivergenceSpec) -> RiskResult | None:
    """Exact route for a piecewise-linear f.

    With g = max_k (x_k y - f_k) the objective mu + t eps + E t g((X - mu)/t)
    is a convex piecewise-linear function of (mu, t), so the problem is an
    LP in (mu, t, s); its row duals give the density Z.  The returned value
    is the objective re-evaluated at the LP vertex.
    """
    tab = np.asarray(spec.params["f_table"], dtype=float)
    xk, fk = tab[:, 0], tab[:, 1]
    n, k = v.size, xk.size
    rows = np.arange(n * k)
    i_idx = np.repeat(np.arange(n), k)
    xs = np.tile(xk, n)
    fs = np.tile(fk, n)
    A = sparse.csr_matrix((np.concatenate((-xs, -fs, -np.ones(n * k))),
                           (np.concatenate((rows, rows, rows)),
                            np.concatenate((np.zeros(n * k, int), np.ones(n * k, int), 2 + i_idx)))),
                          shape=(n * k, n + 2))
    c = np.concatenate(([1.0, spec.epsilon], w))
    res = linprog(c, A_ub=A, b_ub=-xs * v[i_idx], bounds=[(None, None), (0, None)] + [(None, None)] * n,
                  method="highs", options={"primal_feasibility_tolerance": 1e-10,
                                           "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        return None
    mu, t = float(res.x[0]), float(res.x[1])
    y = v - mu
    if t > 0:
        val = mu + t * (spec.epsilon + spec.mean_g(y / t, w))
    else:
        val = mu + _limit_at_zero(spec.bound, y, w)
    lam = np.abs(res.ineqlin.marginals).reshape(n, k)
    # row i mixes the vertices x_k with masses lam_ik (which sum to w_i)
    z = (lam * xk[None, :]).sum(axis=1) / w
    m = float(np.dot(w, z))
    z = np.clip(z / m, xk[0], xk[-1]) if m > 0 else None
    if not math.isfinite(val):
        return None
    lower = float(np.dot(w, v * z)) if z is not None else -math.inf
    return RiskResult(val, t if t > 0 else None, mu, z, int(res.nit), max(val - lower, 0.0), t == 0)


def divergence_risk(d: EmpiricalDistribution, spec: DivergenceSpec) -> RiskResult:
    """R(X) = inf_mu mu + V(X - mu).

    Smooth catalog families first try a damped Newton step on (mu, t) whose
    answer is accepted only if a feasible dual density certifies it; the
    general route is a nested convex minimization (mu outer, t inner).
    """
    if spec.homogeneous:
        return _homogeneous_risk(d, spec)
    v, w = d.values, d.weights
    lo, hi = float(v[0]), float(v[-1])
    spread = hi - lo
    scale = max(abs(lo), abs(hi))
    ftol = 1e-12 * max(scale, 1e-300) if scale > 0 else 1e-12
    if spread == 0.0:
        return RiskResult(lo, None, lo, np.ones_like(w), 1, 0.0, True)
    top = v == hi
    p_top = float(w[top].sum())
    with np.errstate(divide="ignore", invalid="ignore"):
        f_atoms = np.asarray(spec.f(np.array([1.0 / p_top, 0.0])), dtype=float)
    ball = p_top * f_atoms[0] + (1.0 - p_top) * f_atoms[1]
    if ball <= spec.epsilon:
        # the law conditioned on the top value is feasible, so R = max X
        z = np.where(top, 1.0 / p_top, 0.0)
        return RiskResult(hi, None, hi, z, 1, 0.0, True)
    if "f_table" in spec.params:
        lp = _table_risk(v, w, spec)
        if lp is not None:
            return lp
    if spec.g_second is not None:
        fast = _newton_risk(v, w, spec, ftol)
        if fast is not None:
            val, mu, t, z, its, gap = fast
            base = RiskResult(val, t, mu, None, its, gap, False)
            try:
                z = dual_weights(d, spec, base)
            except (WeightsUnavailableError, NumericalError):
                z = None
            return RiskResult(val, t, mu, z, its, gap, False)
    pad = spread
    state = {"t": spread, "iters": 0}

    def outer(mu):
        r = _regret_core(v - mu, w, spec, t0=state["t"], ftol=ftol * 1e-2)
        state["iters"] += r.iterations
        if not r.boundary and r.x > 0:
            state["t"] = r.x
        return mu + r.value

    res = brent_min(outer, lo - pad, hi + pad, xtol=1e-10 * spread)
    mu = res.x
    inner = _regret_core(v - mu, w, spec, t0=state["t"], ftol=ftol * 1e-2)
    value = min(res.value, mu + inner.value)
    result = RiskResult(value, None if inner.boundary else inner.x, mu, None,
                        state["iters"] + res.iterations, res.tolerance, inner.boundary)
    try:
        z = dual_weights(d, spec, result)
    except (WeightsUnavailableError, NumericalError):
        z = None
    return RiskResult(value, result.t_star, mu, z, result.iterations,
                      result.tolerance_achieved, result.boundary)


def dual_weights(d: EmpiricalDistribution, spec: DivergenceSpec, result: RiskResult) -> np.ndarray:
    """Envelope density Z aligned with the sorted samples of ``d``.

    Smooth families use Z = g'((X - mu*)/t*); the piecewise-linear families
    use the exact tail allocation, which is the right-derivative selection
    at the optimal kink.
    """
    if spec.homogeneous:
        alpha = 1.0 - 1.0 / spec.bound
        return cvar_weights(d, max(0.0, alpha))
    if result.t_star is None or result.mu_star is None:
        if float(np.ptp(d.values)) == 0.0:
            return np.ones_like(d.weights)
        raise WeightsUnavailableError("optimizer on the boundary (t* -> 0): dual weights unavailable")
    with np.errstate(over="ignore"):
        z = np.asarray(spec.g_prime((d.values - result.mu_star) / result.t_star), dtype=float)
    if not np.all(np.isfinite(z)):
        raise NumericalError("non-finite dual weights")
    m = float(np.dot(d.weights, z))
    if abs(m - 1.0) > DUAL_RENORM_TOL:
        raise NumericalError(f"dual weights have mean {m:.6g}; stationarity failed")
    return z / m


def entropic_risk(d: EmpiricalDistribution, epsilon: float) -> float:
    """inf_{t>0} t eps + t log E exp(X/t), stabilized by log-sum-exp."""
    v, w = d.values, d.weights
    top = float(v[-1])
    spread = float(v[-1] - v[0])
    if spread == 0.0:
        return top
    lw = np.log(w)

    def h(t):
        return t * epsilon + t * float(logsumexp(v / t + lw))

    # plain golden section here: this routine is the independent KL oracle
    scale = max(abs(top), abs(float(v[0])))
    res = minimize_positive(h, spread, limit0=top, ftol=1e-13 * max(scale, 1e-300),
                            method="golden")
    return float(res.value)
