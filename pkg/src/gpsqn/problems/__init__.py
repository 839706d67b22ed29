"""Noisy objective oracles: analytic test functions, the scalar linear
state-space model with an exact Kalman likelihood/gradient, and the
nonlinear benchmark with bootstrap particle-filter estimates."""

from .oracles import (
    EvaluationError,
    GaussianNoiseOracle,
    QuadraticProblem,
    toy1d_cost,
    toy1d_grad,
    toy1d_hess,
    toy1d_oracle,
)
from .lgss import LGSSModel, kalman_loglik_grad, lgss_noisy_oracle, simulate_lgss
from .nlbench import (
    NLBenchModel,
    ParticleDegeneracy,
    ParticleFilterEstimate,
    bootstrap_pf,
    nlbench_noisy_oracle,
    simulate_nlbench,
)
from .transforms import (
    LOG_VARIANCE_FLOOR,
    variance_from_log,
    variance_log_jacobian,
    variance_to_log,
)

__all__ = [
    "EvaluationError",
    "GaussianNoiseOracle",
    "QuadraticProblem",
    "toy1d_cost",
    "toy1d_grad",
    "toy1d_hess",
    "toy1d_oracle",
    "LGSSModel",
    "kalman_loglik_grad",
    "lgss_noisy_oracle",
    "simulate_lgss",
    "NLBenchModel",
    "ParticleDegeneracy",
    "ParticleFilterEstimate",
    "bootstrap_pf",
    "nlbench_noisy_oracle",
    "simulate_nlbench",
    "LOG_VARIANCE_FLOOR",
    "variance_from_log",
    "variance_log_jacobian",
    "variance_to_log",
]
