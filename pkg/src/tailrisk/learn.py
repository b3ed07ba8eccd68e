"""Risk-averse empirical risk minimization for linear models.

The objective is R(losses) for a risk measure R; its subgradient is the
dual-weighted sum of per-sample loss gradients (Danskin).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .empirical import EmpiricalDistribution
from .errors import DomainError, NumericalError
from .extremal import spectral_weights
from .riskspec import RiskSpec, evaluate

LOSSES = ("squared", "absolute", "logistic")


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    targets: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.targets, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[0] != y.size:
            raise DomainError("features must be an n x d matrix matching the targets")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DomainError("dataset contains non-finite entries")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "targets", y)
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float).ravel()
            if w.size != y.size or np.any(w <= 0) or not np.all(np.isfinite(w)):
                raise DomainError("weights must be positive, finite and one per sample")
            object.__setattr__(self, "weights", w / w.sum())

    @property
    def n(self) -> int:
        return int(self.targets.size)

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])


@dataclass(frozen=True)
class TrainConfig:
    risk: RiskSpec
    loss: str = "squared"
    step_size: float = 0.1
    max_epochs: int = 1000
    tolerance: float = 1e-10
    seed: int = 0
    init_scale: float = 0.0

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise DomainError(f"unknown loss {self.loss!r}; expected one of {LOSSES}")
        if not (self.step_size > 0 and math.isfinite(self.step_size)):
            raise DomainError("step_size must be positive")
        if not self.tolerance > 0:
            raise DomainError("tolerance must be positive")
        if int(self.max_epochs) < 0:
            raise DomainError("max_epochs must be nonnegative")


def predict(params: np.ndarray, X: np.ndarray) -> np.ndarray:
    return X @ params[:-1] + params[-1]


def _signed_targets(y: np.ndarray) -> np.ndarray:
    vals = set(np.unique(y).tolist())
    if vals <= {0.0, 1.0}:
        return 2.0 * y - 1.0
    if vals <= {-1.0, 1.0}:
        return y
    raise DomainError("logistic loss needs targets in {0, 1} or {-1, 1}")


def per_sample_losses(params: np.ndarray, data: Dataset, loss: str):
    """Losses and their (sub)gradients with respect to [w, b], one row per sample."""
    X = data.features
    design = np.hstack([X, np.ones((data.n, 1))])
    pred = predict(params, X)
    if loss == "squared":
        r = pred - data.targets
        return r * r, (2.0 * r)[:, None] * design
    if loss == "absolute":
        r = pred - data.targets
        return np.abs(r), np.sign(r)[:, None] * design
    ys = _signed_targets(data.targets)
    m = ys * pred
    losses = np.logaddexp(0.0, -m)
    slope = -ys * np.exp(-np.logaddexp(0.0, m))
    return losses, slope[:, None] * design


@dataclass(frozen=True)
class Objective:
    value: float
    weights: np.ndarray  # dual weights in input order
    gradient: np.ndarray
    fallback: bool = False


def risk_objective(params, data: Dataset, risk: RiskSpec, loss: str = "squared") -> Objective:
    """R(losses) with dual weights Z; boundary cases fall back to spectral weights."""
    params = np.asarray(params, dtype=float)
    losses, grads = per_sample_losses(params, data, loss)
    d = EmpiricalDistribution.from_samples(losses, data.weights)
    res = evaluate(d, risk)
    z = res.dual_weights
    fallback = False
    if z is None:
        z = spectral_weights(d, risk.fundamental())
        fallback = True
    z = d.to_input_order(np.asarray(z, dtype=float))
    p = d.to_input_order(np.asarray(d.weights))
    grad = (p * z) @ grads
    return Objective(float(res.value), z, grad, fallback)


@dataclass(frozen=True)
class TrainResult:
    params: np.ndarray
    history: list = field(default_factory=list)
    epochs: int = 0
    converged: bool = False
    fallbacks: int = 0


def train(data: Dataset, cfg: TrainConfig, init=None) -> TrainResult:
    """Full-batch subgradient descent with backtracking.

    A step is taken only if it does not increase the objective; otherwise
    the step halves (floor 1e-12).  Accepted steps let it grow back up to
    the configured size.
    """
    rng = np.random.default_rng(cfg.seed)
    if init is not None:
        params = np.asarray(init, dtype=float).copy()
    else:
        params = cfg.init_scale * rng.standard_normal(data.dim + 1)
    obj = risk_objective(params, data, cfg.risk, cfg.loss)
    if not math.isfinite(obj.value):
        raise NumericalError("objective is not finite at the initial parameters")
    history = [obj.value]
    step = cfg.step_size
    fallbacks = int(obj.fallback)
    converged = False
    epoch = 0
    for epoch in range(1, int(cfg.max_epochs) + 1):
        g = obj.gradient
        if not np.any(g):
            converged = True
            break
        accepted = None
        while step >= 1e-12:
            cand = params - step * g
            new = risk_objective(cand, data, cfg.risk, cfg.loss)
            if not math.isfinite(new.value):
                err = NumericalError("objective became non-finite")
                err.params = params.copy()
                raise err
            if new.value <= obj.value:
                accepted = (cand, new)
                break
            step *= 0.5
        if accepted is None:
            converged = True
            break
        delta = obj.value - accepted[1].value
        params, obj = accepted
        fallbacks += int(obj.fallback)
        history.append(obj.value)
        step = min(2.0 * step, cfg.step_size)
        if abs(delta) < cfg.tolerance:
            converged = True
            break
    return TrainResult(params, history, epoch, converged, fallbacks)


def outlier_synthetic(seed: int = 0, n: int = 400, dim: int = 3, frac: float = 0.05) -> Dataset:
    """Linear data with a 5% outlier cluster.

    Inliers: y = x . (1, -2, 0.5, ...) + 0.5 + N(0, 0.3^2) with x ~ N(0, I).
    Outliers: a tight cluster around x = (2, 0, ...) whose targets sit 8
    above the inlier plane.  Mean training absorbs part of the cluster into
    the fit; a tail-averse risk pays more attention to those large losses.
    """
    rng = np.random.default_rng(seed)
    beta = np.resize(np.array([1.0, -2.0, 0.5]), dim)
    X = rng.standard_normal((n, dim))
    y = X @ beta + 0.5 + 0.3 * rng.standard_normal(n)
    k = max(1, int(round(frac * n)))
    centre = np.zeros(dim)
    centre[0] = 2.0
    X[:k] = centre + 0.2 * rng.standard_normal((k, dim))
    y[:k] = X[:k] @ beta + 0.5 + 8.0 + 0.3 * rng.standard_normal(k)
    return Dataset(X, y)


__all__ = ["outlier_synthetic", "Dataset", "TrainConfig", "TrainResult", "Objective", "predict",
           "per_sample_losses", "risk_objective", "train", "LOSSES"]
