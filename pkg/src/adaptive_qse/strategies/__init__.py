"""Measurement-basis strategies for weighted Pauli targets."""
from .base import (
    LocalBias,
    MeasurementPlan,
    OutcomeRecord,
    Outcomes,
    WeightedTarget,
    plan_from_bias,
    uniform_bias,
)
from .derandomized import confidence_bound, derandomize
from .estimate import BasisCounts, Source, estimate_many, estimate_pauli
from .lbcs import BETA_MIN, lbcs_cost, lbcs_optimize
from .ogm import OGMPlan, ogm_build, ogm_loss, plan_from_ogm

__all__ = [
    "BETA_MIN",
    "BasisCounts",
    "LocalBias",
    "MeasurementPlan",
    "OGMPlan",
    "OutcomeRecord",
    "Outcomes",
    "Source",
    "WeightedTarget",
    "confidence_bound",
    "derandomize",
    "estimate_many",
    "estimate_pauli",
    "lbcs_cost",
    "lbcs_optimize",
    "ogm_build",
    "ogm_loss",
    "plan_from_bias",
    "plan_from_ogm",
    "uniform_bias",
]
