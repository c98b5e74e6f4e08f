"""Upper and lower bounds on the expected value of density-dependent one-step processes."""

from onestep._backend import BACKEND
from onestep.model import (
    DensityRatePolynomial,
    DriftCoefficients,
    ModelError,
    OneStepModel,
    build_sis_model,
    build_voter_model,
    drift_coefficients,
    flip_states,
    load_model,
    per_state_rates,
)
from onestep.ode import IntegrationError, IntegratorConfig, IvpProblem, TimeSeries, integrate, integrate_fixed

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DensityRatePolynomial",
    "DriftCoefficients",
    "ModelError",
    "OneStepModel",
    "build_sis_model",
    "build_voter_model",
    "drift_coefficients",
    "flip_states",
    "load_model",
    "per_state_rates",
    "IntegrationError",
    "IntegratorConfig",
    "IvpProblem",
    "TimeSeries",
    "integrate",
    "integrate_fixed",
]
