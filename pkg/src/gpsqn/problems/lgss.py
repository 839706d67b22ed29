"""Scalar linear Gaussian state-space model with an exact Kalman
likelihood and a sensitivity-recursion gradient.

    x_{t+1} = a x_t + v_t,   v_t ~ N(0, q)
    y_t     = c x_t + e_t,   e_t ~ N(0, r)

The log-likelihood is the prediction-error decomposition computed by a
Kalman filter; its gradient with respect to theta = (a, c, q, r) is
propagated exactly through the filter recursions. The initial-state prior
is part of the model (data side) and carries no theta dependence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .oracles import GaussianNoiseOracle
from .transforms import variance_from_log, variance_log_jacobian, variance_to_log

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class LGSSModel:
    """True system parameters plus series length and initial-state prior.

    ``x0_var=None`` resolves to the stationary state variance q/(1 - a^2),
    which requires |a| < 1.
    """

    a: float = 0.9
    c: float = 1.0
    q: float = 0.1
    r: float = 0.5
    n_obs: int = 100
    x0_mean: float = 0.0
    x0_var: float | None = None

    def __post_init__(self):
        if self.q < 0 or self.r <= 0:
            raise ValueError("need q >= 0 and r > 0")
        if self.x0_var is None and not abs(self.a) < 1:
            raise ValueError("stationary initial variance needs |a| < 1")

    @property
    def theta(self) -> np.ndarray:
        return np.array([self.a, self.c, self.q, self.r])

    @property
    def x0_prior_var(self) -> float:
        if self.x0_var is not None:
            return float(self.x0_var)
        return self.q / (1.0 - self.a * self.a)


def stationary_output_variance(theta: np.ndarray) -> float:
    """c^2 q / (1 - a^2) + r; the scale-invariant quantity the data pins
    down even though (c, q) are only identified up to a state rescaling."""
    a, c, q, r = np.asarray(theta, float)
    return float(c * c * q / (1.0 - a * a) + r)


def simulate_lgss(model: LGSSModel, rng: np.random.Generator) -> np.ndarray:
    """Draw one output series y_1..y_N from the model."""
    x = model.x0_mean + math.sqrt(model.x0_prior_var) * rng.standard_normal()
    sq, sr = math.sqrt(model.q), math.sqrt(model.r)
    y = np.empty(model.n_obs)
    for t in range(model.n_obs):
        x = model.a * x + sq * rng.standard_normal()
        y[t] = model.c * x + sr * rng.standard_normal()
    return y


def kalman_loglik_grad(
    model: LGSSModel, theta: np.ndarray, y: np.ndarray
) -> tuple[float, np.ndarray]:
    """Exact log-likelihood of y under theta = (a, c, q, r) and its
    gradient, via tangent recursions of the Kalman quantities.

    The initial-state prior comes from ``model`` and is held fixed, so the
    sensitivities start at zero.
    """
    a, c, q, r = (float(v) for v in np.asarray(theta, float))
    if q < 0 or r <= 0:
        raise ValueError("need q >= 0 and r > 0")
    y = np.asarray(y, float).ravel()

    m = float(model.x0_mean)
    P = float(model.x0_prior_var)
    dm = np.zeros(4)
    dP = np.zeros(4)
    ll = 0.0
    dll = np.zeros(4)

    for yt in y:
        mp = a * m
        dmp = a * dm
        dmp[0] += m
        Pp = a * a * P + q
        dPp = a * a * dP
        dPp[0] += 2.0 * a * P
        dPp[2] += 1.0

        e = yt - c * mp
        de = -c * dmp
        de[1] -= mp
        S = c * c * Pp + r
        if S <= 0:
            raise ValueError("non-positive innovation variance")
        dS = c * c * dPp
        dS[1] += 2.0 * c * Pp
        dS[3] += 1.0

        ll += -0.5 * (_LOG_2PI + math.log(S) + e * e / S)
        dll += -0.5 * dS / S - (e / S) * de + 0.5 * (e * e
                                                     / (S * S)) * dS

        K = c * Pp / S
        dK = (c / S) * dPp - (c * Pp / (S * S)) * dS
        dK[1] += Pp / S
        m = mp + K * e
        dm = dmp + e * dK + K * de
        P = (1.0 - K * c) * Pp
        dP = (1.0 - K * c) * dPp - (c * Pp) * dK
        dP[1] -= K * Pp

    return ll, dll


def theta_to_u(theta: np.ndarray) -> np.ndarray:
    """Unconstrained coordinates (a, c, log q, log r)."""
    a, c, q, r = np.asarray(theta, float)
    return np.array([a, c, variance_to_log(q), variance_to_log(r)])


def u_to_theta(u: np.ndarray) -> np.ndarray:
    a, c, lq, lr = np.asarray(u, float)
    return np.array([a, c, variance_from_log(lq), variance_from_log(lr)])


def lgss_noisy_oracle(
    model: LGSSModel,
    y: np.ndarray,
    cost_noise_std: float = 1.0,
    grad_noise_cov: np.ndarray | None = None,
) -> GaussianNoiseOracle:
    """Negative log-likelihood oracle in unconstrained coordinates
    u = (a, c, log q, log r), with injected Gaussian evaluation noise
    (defaults: N(0,1) on the cost, N(0, I) on the gradient).

    Zeroing both noise terms recovers the exact Kalman values.
    """
    y = np.asarray(y, float).ravel()

    def neg_loglik(u: np.ndarray) -> float:
        ll, _ = kalman_loglik_grad(model, u_to_theta(u), y)
        return -ll

    def neg_score(u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, float)
        _, dll = kalman_loglik_grad(model, u_to_theta(u), y)
        jac = np.array(
            [1.0, 1.0, variance_log_jacobian(u[2]), variance_log_jacobian(u[3])]
        )
        return -dll * jac

    if grad_noise_cov is None:
        grad_noise_cov = np.eye(4)
    return GaussianNoiseOracle(
        dim=4,
        cost_fn=neg_loglik,
        grad_fn=neg_score,
        cost_std=cost_noise_std,
        grad_cov=grad_noise_cov,
    )
