"""Matplotlib rendering for experiment outputs.

Every experiment writes its figures as PNG files next to the CSVs; the
CSVs remain the machine-readable contract, the figures are for eyeballing
a run without loading anything.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 130


def _finish(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def hessian_posterior_figure(
    path,
    grid: np.ndarray,
    true_hess: np.ndarray,
    post_mean: np.ndarray,
    post_std: np.ndarray,
    obs_x: np.ndarray,
    prior_mean: float,
) -> Path:
    """Posterior-mean curvature with a 2-sigma band against the exact
    curvature, plus tick marks where gradients were observed."""
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.fill_between(
        grid,
        post_mean - 2 * post_std,
        post_mean + 2 * post_std,
        color="tab:blue",
        alpha=0.25,
        label="posterior 2-sigma band",
    )
    ax.plot(grid, true_hess, "k-", lw=1.5, label="exact curvature")
    ax.plot(grid, post_mean, "--", color="tab:blue", lw=1.5, label="posterior mean")
    ax.axhline(prior_mean, color="gray", lw=0.8, ls=":", label="prior mean")
    ax.plot(obs_x, np.full_like(obs_x, ax.get_ylim()[0]), "|", color="tab:red",
            ms=12, label="gradient observations")
    ax.set_xlabel("x")
    ax.set_ylabel("second derivative")
    ax.legend(fontsize=8)
    return _finish(fig, Path(path))


def run_trace_figure(path, ks, fhat, gnorm, alpha) -> Path:
    """Cost draws, gradient norms and accepted steps over iterations."""
    fig, axes = plt.subplots(3, 1, figsize=(7, 7), sharex=True)
    axes[0].plot(ks, fhat, lw=0.9)
    axes[0].set_ylabel("noisy cost")
    axes[1].semilogy(ks, np.maximum(gnorm, 1e-300), lw=0.9)
    axes[1].set_ylabel("|gradient|")
    axes[2].semilogy(ks, np.maximum(alpha, 1e-300), lw=0.9)
    axes[2].set_ylabel("step length")
    axes[2].set_xlabel("iteration")
    return _finish(fig, Path(path))


def parameter_trace_figure(path, traces, names, truth) -> Path:
    """One panel per parameter: every replicate's iterate path (grey) with
    the true value (blue line).

    ``traces`` is a list of (iters, params) arrays, one per replicate.
    """
    k = len(names)
    ncols = 2
    nrows = (k + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(8, 2.4 * nrows), sharex=True)
    axes = np.atleast_1d(axes).ravel()
    for i, name in enumerate(names):
        ax = axes[i]
        for tr in traces:
            ax.plot(np.arange(1, tr.shape[0] + 1), tr[:, i], color="0.55", lw=0.6,
                    alpha=0.8)
        ax.axhline(truth[i], color="tab:blue", lw=1.4)
        ax.set_ylabel(name)
    for ax in axes[k:]:
        ax.set_visible(False)
    for ax in axes[max(0, k - ncols):k]:
        ax.set_xlabel("iteration")
    return _finish(fig, Path(path))


def armijo_report_figure(path, labels, means, ses) -> Path:
    """Armijo-residual sample means with 4-standard-error bars."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    xs = np.arange(len(labels))
    ax.errorbar(xs, means, yerr=4 * np.asarray(ses), fmt="o", capsize=5)
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xticks(xs)
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylabel("armijo residual mean")
    return _finish(fig, Path(path))
