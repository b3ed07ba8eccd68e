"""Serializable risk specifications and a single evaluation entry point."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .divergence import DivergenceSpec, make_divergence
from .empirical import EmpiricalDistribution
from .errors import ConstructionError
from .extremal import spectral_risk, spectral_weights, tm_risk, tm_weights
from .fundamental import FundamentalFunction, risk_fundamental
from .orlicz import RiskResult, divergence_risk, orlicz_regret

FAMILIES = ("kl", "chi2", "cvar", "power", "expectation", "custom")
MEASURES = ("divergence", "regret", "spectral", "tm")
_KEYS = {"family", "epsilon", "alpha", "p", "f_table", "measure", "meta"}


@dataclass(frozen=True)
class RiskSpec:
    family: str
    epsilon: float = 1.0
    alpha: float | None = None
    p: float | None = None
    f_table: tuple | None = None
    measure: str = "divergence"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConstructionError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.measure not in MEASURES:
            raise ConstructionError(f"unknown measure {self.measure!r}; expected one of {MEASURES}")
        if isinstance(self.epsilon, bool) or not isinstance(self.epsilon, (int, float)):
            raise ConstructionError("epsilon must be a number")
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ConstructionError("epsilon must be positive and finite")
        if self.family == "custom" and self.f_table is None:
            raise ConstructionError("custom family needs f_table")
        if self.f_table is not None and self.family != "custom":
            raise ConstructionError("f_table is only allowed with family 'custom'")

    @classmethod
    def from_dict(cls, obj: dict) -> "RiskSpec":
        if not isinstance(obj, dict):
            raise ConstructionError("risk spec must be a JSON object")
        extra = set(obj) - _KEYS
        if extra:
            raise ConstructionError(f"unknown risk-spec keys: {sorted(extra)}")
        if "family" not in obj:
            raise ConstructionError("risk spec needs a 'family'")
        table = obj.get("f_table")
        if table is not None:
            table = tuple(tuple(float(v) for v in row) for row in table)
        meta = obj.get("meta") or {}
        if not isinstance(meta, dict):
            raise ConstructionError("'meta' must be an object")
        return cls(family=obj["family"], epsilon=obj.get("epsilon", 1.0), alpha=obj.get("alpha"),
                   p=obj.get("p"), f_table=table, measure=obj.get("measure", "divergence"),
                   meta=meta)

    @classmethod
    def from_json(cls, text: str) -> "RiskSpec":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConstructionError(f"risk spec is not valid JSON: {exc}") from exc
        return cls.from_dict(obj)

    def to_dict(self) -> dict:
        out: dict = {"family": self.family, "epsilon": float(self.epsilon)}
        if self.alpha is not None:
            out["alpha"] = float(self.alpha)
        if self.p is not None:
            out["p"] = float(self.p)
        if self.f_table is not None:
            out["f_table"] = [list(r) for r in self.f_table]
        if self.measure != "divergence":
            out["measure"] = self.measure
        if self.meta:
            out["meta"] = self.meta
        return out

    def divergence(self) -> DivergenceSpec:
        return make_divergence(self.family, float(self.epsilon), alpha=self.alpha, p=self.p,
                               table=self.f_table)

    def fundamental(self) -> FundamentalFunction:
        return risk_fundamental(self.divergence())


def evaluate(d: EmpiricalDistribution, spec: RiskSpec) -> RiskResult:
    """Dispatch on the measure; spectral and tm use the capped risk fundamental function."""
    div = spec.divergence()
    if spec.measure == "divergence":
        return divergence_risk(d, div)
    if spec.measure == "regret":
        return orlicz_regret(d, div)
    phi = risk_fundamental(div)
    if spec.measure == "spectral":
        return RiskResult(spectral_risk(d, phi), dual_weights=spectral_weights(d, phi))
    value = tm_risk(d, phi)
    return RiskResult(value, dual_weights=tm_weights(d, phi))


__all__ = ["RiskSpec", "evaluate", "FAMILIES", "MEASURES"]
