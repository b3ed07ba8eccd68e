"""Tail bounds P(X >= x) <= 1/Psi(x / ||X||_Psi) and their empirical verification."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .divergence import YoungFunction
from .empirical import EmpiricalDistribution
from .errors import ConstructionError, DomainError
from .fundamental import ReferenceDistribution, young_from_envelope
from .orlicz import luxemburg_norm

# relative slack on the bound when checking it against the empirical survival
VERIFY_SLACK = 1e-12


def deviation_bound(psi: YoungFunction, lux_norm: float, x):
    """min{1, 1/Psi(x/lux_norm)} for x > 0."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0) or not np.all(np.isfinite(xa)):
        raise DomainError("deviation bound needs finite x > 0")
    if not (lux_norm > 0 and math.isfinite(lux_norm)):
        raise DomainError("Luxemburg norm must be positive and finite")
    with np.errstate(over="ignore", divide="ignore"):
        level = np.asarray(psi.phi(xa / lux_norm), dtype=float)
        b = np.where(level > 1.0, 1.0 / level, 1.0)
    return float(b) if b.ndim == 0 else b


@dataclass(frozen=True)
class DeviationRow:
    x: float
    survival: float
    bound: float
    passed: bool

    def as_dict(self) -> dict:
        return {"x": self.x, "survival": self.survival, "bound": self.bound, "pass": self.passed}


@dataclass(frozen=True)
class DeviationReport:
    norm: float
    rows: tuple

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def violations(self) -> int:
        return sum(not r.passed for r in self.rows)

    def as_dict(self) -> dict:
        return {"norm": self.norm, "passed": self.passed,
                "rows": [r.as_dict() for r in self.rows]}


def verify_deviation(d: EmpiricalDistribution, psi: YoungFunction, grid) -> DeviationReport:
    """Compare the weighted survival P(|X| >= x) with the Orlicz bound on a grid."""
    a = d.abs()
    norm = luxemburg_norm(a, psi)
    xs = np.asarray(grid, dtype=float).ravel()
    rows = []
    for x in xs:
        surv = a.survival(x)
        if norm == 0.0:
            bound = 1.0 if x <= 0 else 0.0
        elif x <= 0:
            bound = 1.0
        else:
            bound = deviation_bound(psi, norm, x)
        ok = surv <= bound * (1.0 + VERIFY_SLACK)
        rows.append(DeviationRow(float(x), surv, float(bound), bool(ok)))
    return DeviationReport(norm, tuple(rows))


def reference_young(Y: ReferenceDistribution) -> YoungFunction:
    """Psi with Psi^{-1}(1/t) = Y*(t); needs Y*(1) = 1."""
    y1 = float(Y(1.0))
    if abs(y1 - 1.0) > 1e-12:
        raise ConstructionError(f"reference {Y.name} must satisfy Y*(1) = 1, got {y1:.17g}")
    return young_from_envelope(Y, "primal")


def reference_bound(Y: ReferenceDistribution, d: EmpiricalDistribution, x,
                    psi: YoungFunction | None = None):
    """mu_{Y*}(x / ||X||), the tail measure of the reference at the scaled level."""
    psi = reference_young(Y) if psi is None else psi
    norm = luxemburg_norm(d.abs(), psi)
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0):
        raise DomainError("reference bound needs x > 0")
    if norm == 0.0:
        out = np.zeros_like(xa)
    else:
        out = np.minimum(1.0, np.asarray(Y.tail_measure(xa / norm), dtype=float))
    return float(out) if out.ndim == 0 else out


__all__ = ["deviation_bound", "verify_deviation", "reference_bound", "reference_young",
           "DeviationReport", "DeviationRow", "VERIFY_SLACK"]
