"""Nonlinear benchmark state-space model with bootstrap particle-filter
likelihood and score estimates.

    x_{t+1} = a x_t + b x_t / (1 + x_t^2) + c cos(1.2 t) + v_t,  v ~ N(0, q)
    y_t     = d x_t^2 + e_t,                                     e ~ N(0, r)

The filter proposes from the dynamics and resamples every step, which
makes exp(loglik) an unbiased estimate of the likelihood. The score is the
O(M) path-space accumulator: each particle carries the running sum of its
ancestral per-step log-density gradients, and the estimate is the
weight-averaged accumulator at the final step. Path degeneracy grows with
the series length; at the lengths used here (N ~ 100) it is acceptable.

``obs="linear"`` swaps the observation map to y = d x + e, giving a fully
linear-Gaussian variant (with b = 0) against which the likelihood estimate
can be validated with an exact Kalman filter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .oracles import EvaluationError, GaussianNoiseOracle
from .transforms import variance_from_log, variance_log_jacobian, variance_to_log

_LOG_2PI = math.log(2.0 * math.pi)


class ParticleDegeneracy(EvaluationError):
    """All particle weights vanished (or went non-finite) at some step."""


@dataclass(frozen=True)
class NLBenchModel:
    """True parameters, series length, initial-state prior and observation
    kind ("quadratic" for the benchmark, "linear" for validation)."""

    a: float = 0.5
    b: float = 25.0
    c: float = 8.0
    d: float = 0.05
    q: float = 0.0
    r: float = 0.1
    n_obs: int = 100
    x0_mean: float = 0.0
    x0_var: float = 5.0
    obs: str = "quadratic"

    def __post_init__(self):
        if self.q < 0 or self.r <= 0:
            raise ValueError("need q >= 0 and r > 0")
        if self.obs not in ("quadratic", "linear"):
            raise ValueError("obs must be 'quadratic' or 'linear'")

    @property
    def theta(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d, self.q, self.r])


@dataclass(frozen=True)
class ParticleFilterEstimate:
    """Log-likelihood and score estimates with the per-step effective
    sample sizes of the run."""

    loglik: float
    score: np.ndarray
    m_particles: int
    ess: np.ndarray


def _input(t: int) -> float:
    # forcing applied while transitioning from time t to t+1
    return math.cos(1.2 * t)


def simulate_nlbench(model: NLBenchModel, rng: np.random.Generator) -> np.ndarray:
    """Draw one output series y_1..y_N from the model."""
    a, b, c, d, q, r = model.theta
    x = model.x0_mean + math.sqrt(model.x0_var) * rng.standard_normal()
    sq, sr = math.sqrt(q), math.sqrt(r)
    y = np.empty(model.n_obs)
    for t in range(model.n_obs):
        x = a * x + b * x / (1.0 + x * x) + c * _input(t) + sq * rng.standard_normal()
        obs = d * x * x if model.obs == "quadratic" else d * x
        y[t] = obs + sr * rng.standard_normal()
    return y


def _resample_indices(
    weights: np.ndarray, rng: np.random.Generator, scheme: str
) -> np.ndarray:
    m = weights.size
    cum = np.cumsum(weights)
    cum[-1] = 1.0  # guard against roundoff in the final bin
    if scheme == "multinomial":
        u = rng.random(m)
    elif scheme == "systematic":
        u = (rng.random() + np.arange(m)) / m
    else:
        raise ValueError("resampling must be 'multinomial' or 'systematic'")
    return np.searchsorted(cum, u, side="left")


FISHER = "fisher"
PATHWISE = "pathwise"


def bootstrap_pf(
    model: NLBenchModel,
    theta: np.ndarray,
    y: np.ndarray,
    m_particles: int,
    rng: np.random.Generator,
    resampling: str = "multinomial",
    score_method: str = FISHER,
) -> ParticleFilterEstimate:
    """Bootstrap particle filter: likelihood estimate and score estimate.

    ``theta`` = (a, b, c, d, q, r); needs q > 0 (the transition density and
    its gradient are undefined otherwise), r > 0 and at least 2 particles.
    Raises ``ParticleDegeneracy`` if every weight vanishes at some step.

    Two score accumulators are available:

    * ``"fisher"`` -- the O(M) ancestral-trace sum of per-step log-density
      gradients (the Fisher-identity estimator). Asymptotically exact, but
      the mean-parameter components carry noise proportional to 1/sqrt(q),
      which makes them useless when q sits many orders below the
      observation noise.
    * ``"pathwise"`` -- per-particle trajectory sensitivities dx_t/dtheta
      propagated with the sampled noise held fixed, pushed through the
      observation density; the resampling selection is treated as constant.
      Biased for large q, but exact in the q -> 0 limit (where the model
      degenerates to output error) and free of 1/q noise in the
      mean-parameter components.
    """
    theta = np.asarray(theta, float).ravel()
    if theta.size != 6:
        raise ValueError("theta must be (a, b, c, d, q, r)")
    a, b, c, d, q, r = (float(v) for v in theta)
    if m_particles < 2:
        raise ValueError("need at least 2 particles")
    if q <= 0 or r <= 0:
        raise ValueError("need q > 0 and r > 0")
    if score_method not in (FISHER, PATHWISE):
        raise ValueError("score_method must be 'fisher' or 'pathwise'")
    pathwise = score_method == PATHWISE
    y = np.asarray(y, float).ravel()
    quadratic = model.obs == "quadratic"

    x = model.x0_mean + math.sqrt(model.x0_var) * rng.standard_normal(m_particles)
    acc = np.zeros((m_particles, 6))
    sens = np.zeros((m_particles, 6))  # dx_t/dtheta, pathwise mode only
    weights = np.full(m_particles, 1.0 / m_particles)
    loglik = 0.0
    ess = np.empty(y.size)

    # absurd line-search candidates can push intermediates past float range;
    # overflowing weights must become -inf log-weights, not exceptions
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for t in range(1, y.size + 1):
            if t > 1:
                idx = _resample_indices(weights, rng, resampling)
                x = x[idx]
                acc = acc[idx]
                if pathwise:
                    sens = sens[idx]

            u = _input(t - 1)
            one_plus = 1.0 + x * x
            squash = x / one_plus
            mean = a * x + b * squash + c * u
            innov = math.sqrt(q) * rng.standard_normal(m_particles)
            x_new = mean + innov

            if pathwise:
                # dm/dx through the recursion, noise draw held fixed
                dmdx = a + b * (1.0 - x * x) / (one_plus * one_plus)
                sens = dmdx[:, None] * sens
                sens[:, 0] += x
                sens[:, 1] += squash
                sens[:, 2] += u
                sens[:, 4] += innov / (2.0 * q)  # d(sqrt(q) xi)/dq
            else:
                # transition log-density gradients along each surviving path
                acc[:, 0] += innov * x / q
                acc[:, 1] += innov * squash / q
                acc[:, 2] += innov * u / q
                acc[:, 4] += -0.5 / q + innov * innov / (2.0 * q * q)

            obs_in = x_new * x_new if quadratic else x_new
            h = d * obs_in
            resid = y[t - 1] - h
            logw = -0.5 * (_LOG_2PI + math.log(r)) - resid * resid / (2.0 * r)
            logw = np.where(np.isfinite(logw), logw, -np.inf)

            acc[:, 3] += resid / r * obs_in
            acc[:, 5] += -0.5 / r + resid * resid / (2.0 * r * r)
            if pathwise:
                dlogw_dx = resid / r * (2.0 * d * x_new if quadratic else d)
                acc += dlogw_dx[:, None] * sens

            top = np.max(logw)
            if not np.isfinite(top):
                raise ParticleDegeneracy(f"particle degeneracy at step {t}")
            w = np.exp(logw - top)
            total = float(w.sum())
            if total <= 0.0 or not np.isfinite(total):
                raise ParticleDegeneracy(f"particle degeneracy at step {t}")
            loglik += top + math.log(total / m_particles)
            weights = w / total
            ess[t - 1] = 1.0 / float(weights @ weights)
            x = x_new

        # dead particles contribute nothing; mask them so a poisoned
        # accumulator on a zero-weight path cannot turn the sum into nan
        alive = acc.copy()
        alive[weights == 0.0] = 0.0
        score = weights @ alive
    return ParticleFilterEstimate(
        loglik=loglik, score=score, m_particles=m_particles, ess=ess
    )


def theta_to_u(theta: np.ndarray) -> np.ndarray:
    """Unconstrained coordinates (a, b, c, d, log q, log r)."""
    a, b, c, d, q, r = np.asarray(theta, float)
    return np.array([a, b, c, d, variance_to_log(q), variance_to_log(r)])


def u_to_theta(u: np.ndarray) -> np.ndarray:
    a, b, c, d, lq, lr = np.asarray(u, float)
    return np.array([a, b, c, d, variance_from_log(lq), variance_from_log(lr)])


class ParticleFilterOracle:
    """Negative log-likelihood oracle in unconstrained coordinates
    u = (a, b, c, d, log q, log r); every cost and gradient call runs a
    fresh particle filter on the caller-provided stream."""

    def __init__(
        self,
        model: NLBenchModel,
        y: np.ndarray,
        m_particles: int,
        resampling: str = "multinomial",
    ):
        if m_particles < 2:
            raise ValueError("need at least 2 particles")
        self.model = model
        self.y = np.asarray(y, float).ravel()
        self.m_particles = m_particles
        self.resampling = resampling
        self.dim = 6
        self.exact_cost = None
        self.exact_grad = None
        self.grad_cov = None  # unknown; estimate from repeated draws

    def _estimate(self, u: np.ndarray, rng: np.random.Generator) -> ParticleFilterEstimate:
        return bootstrap_pf(
            self.model, u_to_theta(u), self.y, self.m_particles, rng, self.resampling
        )

    def cost(self, u: np.ndarray, rng: np.random.Generator) -> float:
        return -self._estimate(u, rng).loglik

    def grad(self, u: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        u = np.asarray(u, float).ravel()
        est = self._estimate(u, rng)
        jac = np.array(
            [1.0, 1.0, 1.0, 1.0, variance_log_jacobian(u[4]), variance_log_jacobian(u[5])]
        )
        return -est.score * jac


def nlbench_noisy_oracle(
    model: NLBenchModel,
    y: np.ndarray,
    m_particles: int,
    resampling: str = "multinomial",
) -> ParticleFilterOracle:
    return ParticleFilterOracle(model, y, m_particles, resampling)


def kalman_loglik_linear(
    model: NLBenchModel, theta: np.ndarray, y: np.ndarray
) -> float:
    """Exact log-likelihood for the linear validation variant (b must be 0
    and obs "linear"); reference point for particle-filter unbiasedness."""
    a, b, c, d, q, r = (float(v) for v in np.asarray(theta, float))
    if model.obs != "linear" or b != 0.0:
        raise ValueError("exact likelihood needs obs='linear' and b == 0")
    m = float(model.x0_mean)
    P = float(model.x0_var)
    ll = 0.0
    for t, yt in enumerate(np.asarray(y, float).ravel(), start=1):
        mp = a * m + c * _input(t - 1)
        Pp = a * a * P + q
        S = d * d * Pp + r
        e = yt - d * mp
        ll += -0.5 * (_LOG_2PI + math.log(S) + e * e / S)
        K = d * Pp / S
        m = mp + K * e
        P = (1.0 - K * d) * Pp
    return ll
