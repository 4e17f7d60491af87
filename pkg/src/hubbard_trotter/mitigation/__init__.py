"""Noise injection and error mitigation (TREX, DD, Pauli twirling, ZNE)."""

from .dd import DEFAULT_DURATIONS, DDSchedule, insert_dd, plan_dd
from .noise import NoiseModel, exact_noisy_expectation, noisy_expectation
from .pipeline import ZneResult, factor_values, mitigated_pipeline, zne_estimate
from .plan import MitigationPlan
from .trex import apply_trex, trex_calibration, trex_expected, trex_factor
from .twirl import compose_twirls, cz_twirl_set, is_cz_twirl, pauli_twirl
from .zne import ZneFit, ZneFitError, extrapolate, fold_cz

__all__ = [
    "DEFAULT_DURATIONS",
    "DDSchedule",
    "MitigationPlan",
    "NoiseModel",
    "ZneFit",
    "ZneFitError",
    "ZneResult",
    "apply_trex",
    "compose_twirls",
    "cz_twirl_set",
    "exact_noisy_expectation",
    "extrapolate",
    "factor_values",
    "fold_cz",
    "insert_dd",
    "is_cz_twirl",
    "mitigated_pipeline",
    "noisy_expectation",
    "pauli_twirl",
    "plan_dd",
    "trex_calibration",
    "trex_expected",
    "trex_factor",
    "zne_estimate",
]
