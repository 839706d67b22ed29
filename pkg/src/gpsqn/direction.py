"""Regularized quasi-Newton search directions and descent diagnostics.

The surrogate Hessian H is shifted by lambda = epsilon - min(0, eta), where
eta is its smallest eigenvalue, so that B = (H + lambda I)^-1 is positive
definite with spectrum bounded below by epsilon. Applied to the observed
(noisy) gradient this gives a direction that is a descent direction in
expectation; the module also computes the gradient-noise-aware upper bound
on the Armijo constant used by the stochastic line search.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_EPSILON = 1e-4


@dataclass(frozen=True)
class DirectionResult:
    """Search direction with its regularization diagnostics.

    ``p`` solves (H + lam*I) p = -g; ``eta`` is the minimum eigenvalue of H
    and ``B`` the (symmetric positive definite) scaling matrix actually
    applied to the gradient.
    """

    p: np.ndarray
    lam: float
    eta: float
    B: np.ndarray


@dataclass(frozen=True)
class ArmijoBound:
    """Ingredients of the noise-aware Armijo-constant bound.

    ``gamma`` is the curvature-weighted squared gradient, ``beta`` the noise
    term trace(B @ R) and ``c_bar = gamma / (gamma + beta)`` the largest
    admissible Armijo constant; it equals 1 exactly when R = 0.
    """

    gamma: float
    beta: float
    c_bar: float


def regularized_direction(
    H: np.ndarray, g: np.ndarray, epsilon: float = DEFAULT_EPSILON
) -> DirectionResult:
    """Direction p = -(H + lambda I)^-1 g with the minimum-eigenvalue shift.

    Uses a full symmetric eigendecomposition (dimensions here are small) and
    forms B in the same eigenbasis, so B is symmetric to machine precision
    and every eigenvalue of H + lambda I is >= epsilon.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float).ravel()
    H = 0.5 * (H + H.T)
    evals, vecs = np.linalg.eigh(H)
    eta = float(evals[0])
    lam = epsilon - min(0.0, eta)
    # enforce the shifted spectrum >= epsilon even when eigenvalue roundoff
    # at large |H| scales eats the shift
    shifted = np.maximum(evals + lam, epsilon)
    B = (vecs / shifted) @ vecs.T
    B = 0.5 * (B + B.T)
    return DirectionResult(p=-B @ g, lam=lam, eta=eta, B=B)


def armijo_c_bound(grad_true: np.ndarray, B: np.ndarray, R: np.ndarray) -> ArmijoBound:
    """Upper bound on the Armijo constant under gradient noise N(0, R).

    Requires a nonzero true gradient; at a stationary point the bound is
    undefined.
    """
    g = np.asarray(grad_true, dtype=float).ravel()
    if not np.any(g):
        raise ValueError("bound undefined at stationary point")
    B = np.asarray(B, dtype=float)
    R = np.asarray(R, dtype=float)
    gamma = float(g @ B @ g)
    beta = float(np.trace(B @ R))
    return ArmijoBound(gamma=gamma, beta=beta, c_bar=gamma / (gamma + beta))


def psd_sqrt(R: np.ndarray) -> np.ndarray:
    """Symmetric square root of a positive semidefinite matrix (negative
    eigenvalues from roundoff are clipped to zero)."""
    R = np.asarray(R, dtype=float)
    evals, vecs = np.linalg.eigh(0.5 * (R + R.T))
    return (vecs * np.sqrt(np.clip(evals, 0.0, None))) @ vecs.T


def expected_descent_check(
    B: np.ndarray,
    grad_true: np.ndarray,
    R: np.ndarray,
    draws: int,
    seed: int,
) -> float:
    """Monte Carlo mean of p^T grad_true over gradient noise v ~ N(0, R).

    With p = -B (grad_true + v) the analytic value is -grad_true^T B
    grad_true, which is negative whenever B > 0 and the gradient is
    nonzero; the sample mean converges to it.
    """
    if draws < 1:
        raise ValueError("draws must be >= 1")
    g = np.asarray(grad_true, dtype=float).ravel()
    B = np.asarray(B, dtype=float)
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((draws, g.size)) @ psd_sqrt(R).T
    p = -(g[None, :] + noise) @ B  # B symmetric
    return float(np.mean(p @ g))
