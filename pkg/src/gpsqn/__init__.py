"""Stochastic quasi-Newton optimization with a Gaussian-process model of
the Hessian, learned online from noisy gradient differences, and a
stochastic Armijo backtracking line search."""

from .direction import (
    ArmijoBound,
    DirectionResult,
    armijo_c_bound,
    expected_descent_check,
    regularized_direction,
)
from .gp_hessian import (
    FULL,
    SIMPLIFIED,
    GPPrior,
    GramNotPositiveDefinite,
    HessianGP,
    HessianPosterior,
    ObservationPair,
    SEKernel,
    estimate_gradient_noise,
    kernel_eval,
    kernel_line_integral_cross,
    kernel_line_integral_double,
    noise_block,
)
from .linesearch import LineSearchConfig, LineSearchResult, backtrack, initial_step
from .optimizer import IterationRow, OptimizerConfig, RunRecord, run
from .symtools import (
    dbar,
    duplication_matrix,
    elimination_matrix,
    matrix_dim,
    sym_dim,
    unvech,
    vech,
)

__version__ = "0.1.0"

__all__ = [
    "ArmijoBound",
    "DirectionResult",
    "armijo_c_bound",
    "expected_descent_check",
    "regularized_direction",
    "FULL",
    "SIMPLIFIED",
    "GPPrior",
    "GramNotPositiveDefinite",
    "HessianGP",
    "HessianPosterior",
    "ObservationPair",
    "SEKernel",
    "estimate_gradient_noise",
    "kernel_eval",
    "kernel_line_integral_cross",
    "kernel_line_integral_double",
    "noise_block",
    "LineSearchConfig",
    "LineSearchResult",
    "backtrack",
    "initial_step",
    "IterationRow",
    "OptimizerConfig",
    "RunRecord",
    "run",
    "dbar",
    "duplication_matrix",
    "elimination_matrix",
    "matrix_dim",
    "sym_dim",
    "unvech",
    "vech",
    "__version__",
]
