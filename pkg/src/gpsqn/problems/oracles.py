"""Generic noisy-oracle plumbing and analytic test problems.

An oracle exposes ``cost(x, rng)`` and ``grad(x, rng)``; both are fresh
noisy draws. When the underlying function is known analytically the exact
references are kept alongside so tests can zero the noise and compare.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..direction import psd_sqrt


class EvaluationError(RuntimeError):
    """An oracle evaluation failed in a recoverable way (the line search
    treats it as a rejected candidate)."""


class GaussianNoiseOracle:
    """Wrap exact cost/gradient callables with additive Gaussian noise.

    Cost draws are f(x) + bias + cost_std * z; gradient draws are
    grad(x) + L @ z with L the symmetric square root of ``grad_cov``.
    """

    def __init__(
        self,
        dim: int,
        cost_fn: Callable[[np.ndarray], float],
        grad_fn: Callable[[np.ndarray], np.ndarray],
        hess_fn: Callable[[np.ndarray], np.ndarray] | None = None,
        bias: float = 0.0,
        cost_std: float = 0.0,
        grad_cov: np.ndarray | None = None,
    ):
        self.dim = dim
        self.exact_cost = cost_fn
        self.exact_grad = grad_fn
        self.exact_hess = hess_fn
        self.bias = float(bias)
        self.cost_std = float(cost_std)
        self.grad_cov = (
            np.zeros((dim, dim)) if grad_cov is None else np.asarray(grad_cov, float)
        )
        self._noise_sqrt = psd_sqrt(self.grad_cov)

    @property
    def cost_var(self) -> float:
        return self.cost_std**2

    def cost(self, x: np.ndarray, rng: np.random.Generator) -> float:
        value = float(self.exact_cost(np.asarray(x, float)))
        if self.cost_std > 0.0:
            value += self.cost_std * rng.standard_normal()
        return value + self.bias

    def grad(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        g = np.asarray(self.exact_grad(np.asarray(x, float)), float).ravel()
        if np.any(self._noise_sqrt):
            g = g + self._noise_sqrt @ rng.standard_normal(self.dim)
        return g


# ---------------------------------------------------------------------------
# one-dimensional analytic test function
# ---------------------------------------------------------------------------


def toy1d_cost(x: float) -> float:
    """4(x-6)^2 + exp(1.2x - 5) + 10 - 10 sin(1.2x)."""
    return 4.0 * (x - 6.0) ** 2 + math.exp(1.2 * x - 5.0) + 10.0 - 10.0 * math.sin(1.2 * x)


def toy1d_grad(x: float) -> float:
    return 8.0 * (x - 6.0) + 1.2 * math.exp(1.2 * x - 5.0) - 12.0 * math.cos(1.2 * x)


def toy1d_hess(x: float) -> float:
    return 8.0 + 1.44 * math.exp(1.2 * x - 5.0) + 14.4 * math.sin(1.2 * x)


def toy1d_oracle(grad_noise_var: float = 100.0, cost_std: float = 1.0) -> GaussianNoiseOracle:
    """The 1-d test function as a noisy oracle (gradient noise variance
    matches the Hessian-learning demo setting)."""
    return GaussianNoiseOracle(
        dim=1,
        cost_fn=lambda x: toy1d_cost(float(x[0])),
        grad_fn=lambda x: np.array([toy1d_grad(float(x[0]))]),
        hess_fn=lambda x: np.array([[toy1d_hess(float(x[0]))]]),
        cost_std=cost_std,
        grad_cov=np.array([[grad_noise_var]]),
    )


# ---------------------------------------------------------------------------
# quadratic test problem
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadraticProblem:
    """f(x) = 0.5 (x - x_opt)^T A (x - x_opt) + f_opt with A symmetric
    positive definite; the standard fully-known test bed."""

    A: np.ndarray
    x_opt: np.ndarray
    f_opt: float = 0.0

    def cost(self, x: np.ndarray) -> float:
        d = np.asarray(x, float) - self.x_opt
        return float(0.5 * d @ self.A @ d + self.f_opt)

    def grad(self, x: np.ndarray) -> np.ndarray:
        return self.A @ (np.asarray(x, float) - self.x_opt)

    def hess(self, x: np.ndarray) -> np.ndarray:
        return self.A.copy()

    def oracle(
        self,
        bias: float = 0.0,
        cost_std: float = 0.0,
        grad_cov: np.ndarray | None = None,
    ) -> GaussianNoiseOracle:
        return GaussianNoiseOracle(
            dim=self.x_opt.size,
            cost_fn=self.cost,
            grad_fn=self.grad,
            hess_fn=self.hess,
            bias=bias,
            cost_std=cost_std,
            grad_cov=grad_cov,
        )
