"""Gaussian-process model of the half-vectorized Hessian.

Gradient differences y_k = g_{k+1} - g_k are treated as noisy linear
measurements of h(x) = vech(Hessian(x)). Two measurement models are
supported:

* ``"full"``   -- y_k is a line integral of h along the step segment, so
  kernel covariances against an observation become single (and pairwise
  double) integrals along segments, evaluated with Gauss-Legendre
  quadrature;
* ``"simplified"`` -- the classical constant-Hessian secant shortcut,
  y_k = Dbar_k h(x_k) + w_k, which removes the integrals.

Conditioning the GP prior on a sliding window of recent measurements gives
a closed-form Gaussian posterior for h(x); its mean, reshaped back into a
symmetric matrix, is the surrogate Hessian used by the optimizer.

Consecutive gradient differences share a gradient draw, so measurement
noises are correlated: cov(w_i, w_j) = R * delta(i, j) with delta = 2 on
the diagonal, -1 for adjacent indices, 0 otherwise. The window therefore
only accepts consecutively indexed observation pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .symtools import dbar, duplication_matrix, sym_dim, unvech, vech

FULL = "full"
SIMPLIFIED = "simplified"
_MODES = (FULL, SIMPLIFIED)

# diagonal stabilizer scales applied to the gram matrix before Cholesky
_JITTERS = (1e-10, 1e-6)


class GramNotPositiveDefinite(RuntimeError):
    """Raised when the measurement gram matrix fails Cholesky even after
    jitter has been added."""


@lru_cache(maxsize=32)
def _dup(n: int) -> np.ndarray:
    return duplication_matrix(n)


@lru_cache(maxsize=8)
def _gauss_legendre_01(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights transplanted to [0, 1]."""
    if nodes < 2:
        raise ValueError("need at least 2 quadrature nodes")
    t, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * (t + 1.0), 0.5 * w


def _check_spd(m: np.ndarray, name: str) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be a square matrix")
    if not np.allclose(m, m.T, rtol=1e-10, atol=1e-12):
        raise ValueError(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"{name} must be positive definite") from exc
    return m


@dataclass(frozen=True)
class SEKernel:
    """Squared-exponential kernel kappa(x, x') = M * exp(-0.5 (x-x')^T V (x-x')).

    ``M`` (output covariance, d_h x d_h) sets the prior covariance between
    elements of h; ``V`` (n x n) acts as an inverse squared length scale in
    iterate space. Both must be symmetric positive definite.
    """

    M: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "M", _check_spd(self.M, "M"))
        object.__setattr__(self, "V", _check_spd(self.V, "V"))

    @property
    def n(self) -> int:
        return self.V.shape[0]

    @property
    def dh(self) -> int:
        return self.M.shape[0]

    def correlation(self, x: np.ndarray, xp: np.ndarray) -> float:
        """Scalar factor exp(-0.5 (x-x')^T V (x-x'))."""
        d = np.asarray(x, dtype=float).ravel() - np.asarray(xp, dtype=float).ravel()
        return float(np.exp(-0.5 * d @ self.V @ d))

    def __call__(self, x: np.ndarray, xp: np.ndarray) -> np.ndarray:
        return self.M * self.correlation(x, xp)


def kernel_eval(kernel: SEKernel, x: np.ndarray, xp: np.ndarray) -> np.ndarray:
    """Kernel matrix kappa(x, x') of shape (d_h, d_h)."""
    return kernel(x, xp)


@dataclass(frozen=True)
class GPPrior:
    """Prior over h(x): mean function plus squared-exponential kernel."""

    kernel: SEKernel
    mean: Callable[[np.ndarray], np.ndarray]

    @classmethod
    def isotropic(
        cls,
        n: int,
        output_scale: float = 10.0,
        inv_length: float = 1.0,
        mean_curvature: float = 1.0,
    ) -> "GPPrior":
        """Isotropic defaults: M = output_scale * I, V = inv_length * I and a
        constant prior mean vech(mean_curvature * I)."""
        kernel = SEKernel(output_scale * np.eye(sym_dim(n)), inv_length * np.eye(n))
        h0 = vech(mean_curvature * np.eye(n))
        return cls(kernel=kernel, mean=lambda x, _h0=h0: _h0.copy())

    @classmethod
    def curvature_scaled(
        cls,
        diag_curvature: np.ndarray,
        rel_scale: float = 1.0,
        inv_length: float = 1e-2,
    ) -> "GPPrior":
        """Anisotropic prior built from per-coordinate curvature scales.

        The prior mean is vech(diag(diag_curvature)); the kernel output
        variance for the (i, j) Hessian element is
        (rel_scale^2 * c_i * c_j), i.e. each element may deviate from the
        mean by O(rel_scale) in the units its own coordinate pair sets.
        Useful for badly scaled problems where one isotropic output scale
        cannot cover the spread of the Hessian spectrum.
        """
        c = np.asarray(diag_curvature, dtype=float).ravel()
        if np.any(c <= 0):
            raise ValueError("curvature scales must be positive")
        n = c.size
        scales = [
            rel_scale**2 * c[i] * c[j] for j in range(n) for i in range(j, n)
        ]  # vech ordering, column-wise lower triangle
        kernel = SEKernel(np.diag(scales), inv_length * np.eye(n))
        h0 = vech(np.diag(c))
        return cls(kernel=kernel, mean=lambda x, _h0=h0: _h0.copy())


@dataclass(frozen=True)
class ObservationPair:
    """One iterate-difference / gradient-difference measurement.

    ``index`` is the position of the pair in the optimizer's sequence;
    the step is derived from the stored endpoints so that
    s == x_end - x_start holds exactly.
    """

    index: int
    x_start: np.ndarray
    x_end: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x_start", np.asarray(self.x_start, float).ravel())
        object.__setattr__(self, "x_end", np.asarray(self.x_end, float).ravel())
        object.__setattr__(self, "y", np.asarray(self.y, float).ravel())
        if not (self.x_start.size == self.x_end.size == self.y.size):
            raise ValueError("pair endpoints and gradient difference must share a dimension")

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def s(self) -> np.ndarray:
        return self.x_end - self.x_start

    def point(self, t: float) -> np.ndarray:
        """Point on the step segment at parameter t in [0, 1]."""
        return self.x_start + t * self.s


@dataclass(frozen=True)
class HessianPosterior:
    """Posterior of h(x): mean vector ``phi`` and covariance ``sigma``."""

    phi: np.ndarray
    sigma: np.ndarray


def kernel_line_integral_cross(
    kernel: SEKernel, x: np.ndarray, pair: ObservationPair, nodes: int = 16
) -> np.ndarray:
    """Gauss-Legendre approximation of the segment integral of kappa(x, .)
    along the pair's step, shape (d_h, d_h)."""
    t, w = _gauss_legendre_01(nodes)
    acc = 0.0
    for tq, wq in zip(t, w):
        acc += wq * kernel.correlation(x, pair.point(tq))
    return kernel.M * acc


def kernel_line_integral_double(
    kernel: SEKernel,
    pair_i: ObservationPair,
    pair_j: ObservationPair,
    nodes: int = 16,
) -> np.ndarray:
    """Tensor-product Gauss-Legendre approximation of the double segment
    integral of kappa along two steps, shape (d_h, d_h)."""
    t, w = _gauss_legendre_01(nodes)
    pts_i = np.array([pair_i.point(tq) for tq in t])  # (nodes, n)
    pts_j = np.array([pair_j.point(tq) for tq in t])
    diff = pts_i[:, None, :] - pts_j[None, :, :]
    quad = np.exp(-0.5 * np.einsum("ijk,kl,ijl->ij", diff, kernel.V, diff))
    return kernel.M * float(w @ quad @ w)


def noise_block(R: np.ndarray, i: int, j: int) -> np.ndarray:
    """Measurement-noise covariance block between pairs i and j."""
    gap = abs(i - j)
    if gap == 0:
        return 2.0 * R
    if gap == 1:
        return -R
    return np.zeros_like(R)


@dataclass
class HessianGP:
    """GP over h(x) conditioned on a sliding window of observation pairs.

    ``memory`` is the window length parameter p: at most p + 1 pairs are
    retained and the oldest is evicted first. Pairs must arrive with
    consecutive indices, which is what makes the tridiagonal noise
    structure valid.
    """

    prior: GPPrior
    R: np.ndarray
    memory: int
    mode: str = SIMPLIFIED
    quad_nodes: int = 16
    window: list[ObservationPair] = field(default_factory=list)

    def __post_init__(self):
        self.R = _check_spd(self.R, "R")
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}")
        if self.memory < 0:
            raise ValueError("memory must be >= 0")
        if self.quad_nodes < 2:
            raise ValueError("quad_nodes must be >= 2")

    @property
    def n(self) -> int:
        return self.R.shape[0]

    # -- window maintenance -------------------------------------------------

    def push(self, pair: ObservationPair) -> None:
        """Append a pair, evicting the oldest beyond capacity p + 1.

        Raises ``ValueError`` on a non-consecutive index; the noise model
        assumes adjacent pairs share a gradient draw.
        """
        if pair.n != self.n:
            raise ValueError("pair dimension does not match the model")
        if self.window and pair.index != self.window[-1].index + 1:
            raise ValueError(
                "observation indices must be consecutive "
                f"(got {pair.index} after {self.window[-1].index})"
            )
        self.window.append(pair)
        if len(self.window) > self.memory + 1:
            self.window.pop(0)

    def _active(self, max_index: int | None) -> list[ObservationPair]:
        if max_index is None:
            return list(self.window)
        return [p for p in self.window if p.index <= max_index]

    # -- measurement model --------------------------------------------------

    def measurement_mean(self, pair: ObservationPair) -> np.ndarray:
        """Prior mean of the pair's gradient difference, shape (n,)."""
        db = dbar(pair.s, _dup(self.n))
        if self.mode == SIMPLIFIED:
            return db @ self.prior.mean(pair.x_start)
        t, w = _gauss_legendre_01(self.quad_nodes)
        acc = np.zeros(sym_dim(self.n))
        for tq, wq in zip(t, w):
            acc += wq * self.prior.mean(pair.point(tq))
        return db @ acc

    def _kernel_integral(self, pair_i: ObservationPair, pair_j: ObservationPair) -> np.ndarray:
        if self.mode == SIMPLIFIED:
            return self.prior.kernel(pair_i.x_start, pair_j.x_start)
        return kernel_line_integral_double(
            self.prior.kernel, pair_i, pair_j, self.quad_nodes
        )

    def _cross_block(self, x: np.ndarray, pair: ObservationPair) -> np.ndarray:
        if self.mode == SIMPLIFIED:
            k = self.prior.kernel(x, pair.x_start)
        else:
            k = kernel_line_integral_cross(self.prior.kernel, x, pair, self.quad_nodes)
        return k @ dbar(pair.s, _dup(self.n)).T  # (d_h, n)

    def gram(self, pairs: Sequence[ObservationPair] | None = None) -> np.ndarray:
        """Measurement covariance over the given pairs (default: the window),
        shape (n*w, n*w). Symmetric; positive definite once jitter is added."""
        pairs = list(self.window) if pairs is None else list(pairs)
        if not pairs:
            raise ValueError("gram of an empty window")
        n, w = self.n, len(pairs)
        dbars = [dbar(p.s, _dup(n)) for p in pairs]
        K = np.zeros((n * w, n * w))
        for i in range(w):
            for j in range(i, w):
                block = dbars[i] @ self._kernel_integral(pairs[i], pairs[j]) @ dbars[j].T
                block = block + noise_block(self.R, pairs[i].index, pairs[j].index)
                K[i * n : (i + 1) * n, j * n : (j + 1) * n] = block
                if j > i:
                    K[j * n : (j + 1) * n, i * n : (i + 1) * n] = block.T
        return 0.5 * (K + K.T)

    # -- posterior ----------------------------------------------------------

    def posterior(self, x: np.ndarray, max_index: int | None = None) -> HessianPosterior:
        """Gaussian posterior of h(x) given the (filtered) window.

        ``max_index`` restricts conditioning to pairs with index <= max_index;
        an empty selection returns the prior.
        """
        x = np.asarray(x, dtype=float).ravel()
        pairs = self._active(max_index)
        mu_x = self.prior.mean(x)
        kxx = self.prior.kernel(x, x)
        if not pairs:
            return HessianPosterior(phi=mu_x, sigma=kxx)

        K = self.gram(pairs)
        K_stab = stabilized(K)
        y = np.concatenate([p.y for p in pairs])
        m = np.concatenate([self.measurement_mean(p) for p in pairs])
        kx = np.hstack([self._cross_block(x, p) for p in pairs])  # (d_h, n*w)

        phi = mu_x + kx @ np.linalg.solve(K_stab, y - m)
        sigma = kxx - kx @ np.linalg.solve(K_stab, kx.T)
        sigma = 0.5 * (sigma + sigma.T)
        return HessianPosterior(phi=phi, sigma=sigma)

    def hessian_mean(self, x: np.ndarray, max_index: int | None = None) -> np.ndarray:
        """Posterior-mean Hessian at x, exactly symmetric by construction."""
        return unvech(self.posterior(x, max_index=max_index).phi)


def stabilized(K: np.ndarray) -> np.ndarray:
    """Return K plus the smallest of the documented diagonal jitters that
    makes it pass Cholesky; raise ``GramNotPositiveDefinite`` otherwise."""
    base = float(np.mean(np.diag(K)))
    eye = np.eye(K.shape[0])
    for scale in _JITTERS:
        candidate = K + scale * base * eye
        try:
            np.linalg.cholesky(candidate)
        except np.linalg.LinAlgError:
            continue
        return candidate
    raise GramNotPositiveDefinite("gram matrix not PD")


def estimate_gradient_noise(
    grad_fn: Callable[[np.ndarray, np.random.Generator], np.ndarray],
    x0: np.ndarray,
    rng: np.random.Generator,
    draws: int = 20,
) -> np.ndarray:
    """Sample covariance of repeated gradient draws at a fixed point.

    Convenience for problems where the gradient-noise covariance R is not
    known in closed form.
    """
    if draws < 2:
        raise ValueError("need at least 2 draws")
    samples = np.array([grad_fn(np.asarray(x0, float), rng) for _ in range(draws)])
    return np.cov(samples, rowvar=False, ddof=1).reshape(samples.shape[1], samples.shape[1])
