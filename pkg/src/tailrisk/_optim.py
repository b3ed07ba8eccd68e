"""Scalar minimizers, bisection and Lambert W used across the package."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import NumericalError

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ScalarMin:
    x: float
    value: float
    iterations: int
    tolerance: float
    boundary: bool = False


def _safe(fun: Callable[[float], float], x: float) -> float:
    v = fun(x)
    if v != v or v == math.inf:  # nan counts as +inf
        return math.inf
    return float(v)


def golden_min(fun, a: float, b: float, *, xtol: float = 1e-10,
               ftol: float = 1e-12, maxiter: int = 500,
               fa: float | None = None, fb: float | None = None) -> ScalarMin:
    """Golden-section search for a convex function on [a, b].

    Stops on a relative bracket width below ``xtol`` or when the
    convexity lower bound on the minimum is within ``ftol`` of the best
    value seen.  Non-finite evaluations are treated as +inf.
    """
    fa = _safe(fun, a) if fa is None else fa
    fb = _safe(fun, b) if fb is None else fb
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc = _safe(fun, c)
    fd = _safe(fun, d)
    it = 0
    gap = math.inf
    while it < maxiter:
        it += 1
        if fc <= fd:
            b, fb = d, fd
            d, fd = c, fc
            c = b - INVPHI * (b - a)
            fc = _safe(fun, c)
        else:
            a, fa = c, fc
            c, fc = d, fd
            d = a + INVPHI * (b - a)
            fd = _safe(fun, d)
        gap = _lower_gap(a, c, d, b, fa, fc, fd, fb)
        tol = ftol + 1e-15 * abs(min(fc, fd)) if math.isfinite(min(fc, fd)) else ftol
        if gap <= tol:
            break
        if b - a <= xtol * max(abs(a), abs(b), 1e-300):
            break
    xs = (a, c, d, b)
    fs = (fa, fc, fd, fb)
    k = int(np.argmin(fs))
    return ScalarMin(xs[k], fs[k], it, gap)


def _lower_gap(a, c, d, b, fa, fc, fd, fb) -> float:
    # distance between the best interior value and a convexity lower bound
    if fc <= fd:
        s1 = (fd - fc) * (c - a) / (d - c) if d > c else math.inf
        s2 = (fa - fc) * (d - c) / (c - a) if c > a else math.inf
    else:
        s1 = (fc - fd) * (b - d) / (d - c) if d > c else math.inf
        s2 = (fb - fd) * (d - c) / (b - d) if b > d else math.inf
    g = max(s1, s2)
    return g if g == g else math.inf


def minimize_positive(fun, t0: float, *, limit0: float | None = None,
                      xtol: float = 1e-10, ftol: float = 1e-12,
                      maxiter: int = 500, method: str = "brent") -> ScalarMin:
    """Minimize a convex function of t on (0, inf).

    The bracket is grown geometrically from ``t0`` in both directions.
    ``limit0`` is the value of the t -> 0 limit when it is finite; if the
    objective keeps decreasing toward 0 that limit is returned with
    ``boundary=True``.  Inside the final bracket either bounded Brent
    (default) or plain golden-section search is run.
    """
    if not (t0 > 0 and math.isfinite(t0)):
        t0 = 1.0
    evals = 0
    f0 = _safe(fun, t0)
    evals += 1
    while not math.isfinite(f0):
        t0 *= 4.0
        f0 = _safe(fun, t0)
        evals += 1
        if t0 > 1e300:
            raise NumericalError("objective is +inf on the whole half line")
    t_up = 2.0 * t0
    f_up = _safe(fun, t_up)
    evals += 1
    if f_up < f0:
        lo, mid, f_mid = t0, t_up, f_up
        f_lo = f0
        while True:
            hi = 2.0 * mid
            f_hi = _safe(fun, hi)
            evals += 1
            if f_hi >= f_mid:
                break
            lo, f_lo, mid, f_mid = mid, f_mid, hi, f_hi
            if hi > 1e300:
                raise NumericalError("objective decreases without bound as t grows")
    else:
        hi, f_hi, mid, f_mid = t_up, f_up, t0, f0
        while True:
            lo = 0.5 * mid
            f_lo = _safe(fun, lo)
            evals += 1
            if f_lo >= f_mid:
                break
            hi, f_hi, mid, f_mid = mid, f_mid, lo, f_lo
            if lo < t0 * 1e-14 and limit0 is not None and math.isfinite(limit0):
                return ScalarMin(0.0, min(limit0, f_lo), evals, abs(f_lo - limit0), True)
            if lo < 1e-300:
                return ScalarMin(0.0, f_lo if limit0 is None else min(limit0, f_lo),
                                 evals, math.inf, True)
    if method == "golden":
        res = golden_min(fun, lo, hi, xtol=xtol, ftol=ftol, maxiter=maxiter,
                         fa=f_lo, fb=f_hi)
    else:
        res = brent_min(fun, lo, hi, xtol=xtol * mid, maxiter=maxiter)
        if f_mid < res.value:
            res = ScalarMin(mid, f_mid, res.iterations, res.tolerance)
    if limit0 is not None and limit0 < res.value - ftol:
        return ScalarMin(0.0, limit0, res.iterations + evals, res.tolerance, True)
    return ScalarMin(res.x, res.value, res.iterations + evals, res.tolerance)


def brent_min(fun, a: float, b: float, *, xtol: float, maxiter: int = 500) -> ScalarMin:
    """Bounded Brent search on [a, b] (golden steps plus parabolic interpolation)."""
    res = minimize_scalar(lambda x: _safe(fun, x), bounds=(a, b), method="bounded",
                          options={"xatol": max(xtol, 1e-300), "maxiter": maxiter})
    return ScalarMin(float(res.x), float(res.fun), int(res.nfev), xtol)


def golden_max_vec(fun, a: np.ndarray, b: np.ndarray, iters: int = 90):
    """Elementwise golden-section maximization of a unimodal vectorized map.

    ``fun`` takes an array of abscissae (same shape as ``a``) and returns
    the objective values.  Endpoints are included in the final answer.
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    fa = fun(a)
    fb = fun(b)
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc = fun(c)
    fd = fun(d)
    for _ in range(iters):
        left = fc >= fd
        fa = np.where(left, fa, fc)
        fb = np.where(left, fd, fb)
        a = np.where(left, a, c)
        b = np.where(left, d, b)
        nc = np.where(left, b - INVPHI * (b - a), d)
        nd = np.where(left, c, a + INVPHI * (b - a))
        fnew = fun(np.where(left, nc, nd))
        fd, fc = np.where(left, fc, fnew), np.where(left, fnew, fd)
        c, d = nc, nd
    xs = np.stack([a, c, d, b])
    fs = np.stack([fa, fc, fd, fb])
    fs = np.where(np.isnan(fs), -np.inf, fs)
    k = np.argmax(fs, axis=0)
    idx = np.arange(xs.shape[1]) if xs.ndim > 1 else None
    if idx is None:
        return xs[k], fs[k]
    return xs[k, idx], fs[k, idx]


def generalized_inverse(h, y, *, upper: float = 1e300, iters: int = 200):
    """sup{x >= 0 : h(x) < y} for a nondecreasing vectorized ``h``.

    Returns 0 where the set is empty and ``inf`` where h stays below y up
    to ``upper``.
    """
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 0
    y = np.atleast_1d(y)
    out = np.zeros_like(y)
    h0 = np.asarray(h(np.zeros_like(y)), dtype=float)
    live = h0 < y
    if not live.any():
        return float(out[0]) if scalar else out
    yl = y[live]
    hi = np.ones_like(yl)
    for _ in range(2100):
        need = np.asarray(h(hi)) < yl
        if not need.any():
            break
        hi = np.where(need, hi * 2.0, hi)
        if (hi > upper).any():
            hi = np.where(hi > upper, np.inf, hi)
            need = need & np.isfinite(hi)
            if not need.any():
                break
    fin = np.isfinite(hi)
    lo = np.where(hi > 1.0, hi / 2.0, 0.0)
    lo = np.where(fin, lo, 0.0)
    hb = np.where(fin, hi, 1.0)
    for _ in range(iters):
        mid = 0.5 * (lo + hb)
        if np.all((mid <= lo) | (mid >= hb)):
            break
        below = np.asarray(h(mid)) < yl
        lo = np.where(below, mid, lo)
        hb = np.where(below, hb, mid)
    res = np.where(fin, hb, np.inf)
    out[live] = res
    return float(out[0]) if scalar else out


def lambert_w(z):
    """Principal branch W0 on [-1/e, inf) by Halley iteration (tol 1e-14)."""
    z = np.asarray(z, dtype=float)
    scalar = z.ndim == 0
    z = np.atleast_1d(z).copy()
    if np.any(z < -1.0 / math.e - 1e-15):
        raise ValueError("lambert_w: argument below -1/e")
    z = np.maximum(z, -1.0 / math.e)
    w = np.empty_like(z)
    p2 = 2.0 * (math.e * z + 1.0)
    near = p2 < 0.25
    p = np.sqrt(np.clip(p2, 0.0, 0.25))
    w[near] = (-1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3)[near]
    big = z > 3.0
    w[big] = 1.0
    mid = ~near & ~big
    w[mid] = np.log1p(z[mid]) * 0.75
    with np.errstate(all="ignore"):
        for _ in range(60):
            if big.all():
                break
            ew = np.exp(np.where(big, 0.0, w))
            fval = w * ew - z
            wp1 = w + 1.0
            denom = ew * wp1 - (w + 2.0) * fval / (2.0 * wp1)
            safe = (np.abs(wp1) > 1e-12) & ~big & np.isfinite(denom) & (denom != 0)
            step = np.where(safe, fval / np.where(safe, denom, 1.0), 0.0)
            w = w - step
            if np.all(np.abs(step) <= 1e-14 * (1.0 + np.abs(w))):
                break
    w[p2 <= 0.0] = -1.0
    if big.any():
        # w + log w = log z is well conditioned where w e^w would overflow
        lzb = np.log(z[big])
        wb = lzb - np.log(lzb)
        for _ in range(60):
            step = (wb + np.log(wb) - lzb) / (1.0 + 1.0 / wb)
            wb = wb - step
            if np.all(np.abs(step) <= 1e-15 * np.abs(wb)):
                break
        w[big] = wb
    return float(w[0]) if scalar else w
