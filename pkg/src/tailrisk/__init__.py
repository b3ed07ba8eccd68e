"""Tail-sensitive risk measures on empirical loss distributions."""

__version__ = "0.1.0"

from .empirical import (EmpiricalDistribution, StepFunction, cvar, cvar_weights,
                        decreasing_rearrangement, maximal_function, quantile)
from .divergence import (DivergenceSpec, YoungFunction, custom_divergence, make_divergence,
                         scale_epsilon, young_conjugate, young_exp, young_power, young_subexp,
                         youngify)
from .orlicz import (RiskResult, divergence_risk, dual_weights, entropic_risk, luxemburg_norm,
                     orlicz_norm, orlicz_regret)
from .fundamental import (FundamentalFunction, ReferenceDistribution, associate,
                          check_reference, divergence_from_young, envelope, fundamental,
                          least_concave_majorant, marcinkiewicz_coincidence, reference,
                          regret_fundamental, risk_fundamental, young_from_envelope)
from .extremal import (embedding_check, krein_condition, krein_constant, lorentz_norm,
                       marcinkiewicz_norm, marcinkiewicz_quasi, spectral_risk, tm_risk)
from .deviation import deviation_bound, reference_bound, verify_deviation
from .ubsr import LossFunction, exponential_loss, positive_part_loss, power_loss, ubsr, ubsr_penalty
from .riskspec import RiskSpec, evaluate
from .learn import Dataset, TrainConfig, outlier_synthetic, risk_objective, train
from .errors import (ConstructionError, DomainError, InputError, NumericalError, TailRiskError,
                     WeightsUnavailableError)
