"""Log-scale handling of variance parameters.

Optimizer runs work in unconstrained coordinates; variance parameters are
carried as log-variances, saturated on both sides. The lower floor keeps
two things finite at once: the transform of a zero variance, and the
variance of particle-filter score estimates, whose mean-parameter
components scale like 1/sqrt(q) and become pure noise once q shrinks far
below what the data can resolve. The ceiling only exists so that a wild
line-search candidate cannot overflow exp; any such candidate produces an
absurd cost and is rejected. In the saturated regions the mapped variance
is constant and its jacobian vanishes.
"""

from __future__ import annotations

import math

LOG_VARIANCE_FLOOR = -8.0
LOG_VARIANCE_CEIL = 30.0


def variance_to_log(value: float) -> float:
    """Unconstrained coordinate for a variance (floored at the saturation
    point, so zero maps to the floor instead of -inf)."""
    if value < 0:
        raise ValueError("variance must be non-negative")
    u = math.log(value) if value > 0 else -math.inf
    return min(max(u, LOG_VARIANCE_FLOOR), LOG_VARIANCE_CEIL)


def variance_from_log(u: float) -> float:
    """Variance for an unconstrained coordinate; saturates outside the
    floor/ceiling band."""
    return math.exp(min(max(u, LOG_VARIANCE_FLOOR), LOG_VARIANCE_CEIL))


def variance_log_jacobian(u: float) -> float:
    """d variance / d coordinate; zero in the saturated regions."""
    if LOG_VARIANCE_FLOOR <= u <= LOG_VARIANCE_CEIL:
        return math.exp(u)
    return 0.0
