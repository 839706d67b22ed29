"""Stochastic backtracking line search.

An Armijo sufficient-decrease test on noisy cost draws, with an
iteration-decaying initial step min(1, xi/k) and a backtracking budget
max(0, tau - k) that vanishes as k grows. Past k = tau the search performs
no cost evaluations at all and degenerates into the deterministic xi/k
schedule, which satisfies the classical step-length summability conditions
(sum alpha = inf, sum alpha^2 < inf).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class LineSearchConfig:
    """Armijo constant c, backtracking scale rho, reduction limit xi and
    backtracking limit tau."""

    c: float = 1e-4
    rho: float = 0.5
    xi: float = 10.0
    tau: int = 100

    def __post_init__(self):
        if not 0.0 < self.c < 1.0:
            raise ValueError("c must lie in (0, 1)")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")
        if self.xi < 1.0:
            raise ValueError("xi must be >= 1")
        if self.tau <= 0:
            raise ValueError("tau must be a positive integer")


@dataclass(frozen=True)
class LineSearchResult:
    """Accepted step length, number of candidate cost evaluations, and
    whether the noisy Armijo inequality held at acceptance."""

    alpha: float
    trials: int
    satisfied: bool


def initial_step(k: int, xi: float) -> float:
    """Schedule min(1, xi/k): full steps until k > xi, then a 1/k decay."""
    if k < 1:
        raise ValueError("iteration index must be >= 1")
    return min(1.0, xi / k)


def backtrack(
    k: int,
    x: np.ndarray,
    p: np.ndarray,
    g: np.ndarray,
    f_x: float,
    cost: Callable[[np.ndarray], float],
    cfg: LineSearchConfig,
) -> LineSearchResult:
    """Backtracking Armijo search on noisy costs.

    ``f_x`` is the (single) noisy cost draw at x, reused across all trials;
    each candidate cost is a fresh draw through ``cost``. A non-finite
    candidate cost counts as a failed Armijo test, so a diverging or
    degenerate oracle evaluation just triggers another reduction. Once the
    budget max(0, tau - k) is exhausted the current step is returned
    untested with ``satisfied=False``; in particular for k >= tau no cost
    is evaluated and alpha = min(1, xi/k) exactly.
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    alpha = initial_step(k, cfg.xi)
    budget = max(0, cfg.tau - k)
    slope = cfg.c * float(np.dot(np.asarray(g, dtype=float).ravel(), p.ravel()))
    trials = 0
    satisfied = False
    while trials < budget:
        f_cand = cost(x + alpha * p)
        trials += 1
        rhs = f_x + alpha * slope
        if np.isfinite(f_cand) and np.isfinite(rhs) and f_cand <= rhs:
            satisfied = True
            break
        alpha *= cfg.rho
    return LineSearchResult(alpha=alpha, trials=trials, satisfied=satisfied)
