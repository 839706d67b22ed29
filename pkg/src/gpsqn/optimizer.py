"""The stochastic quasi-Newton driver loop.

Per iteration k (1-based): draw a noisy gradient, form the new
iterate/gradient difference pair and push it into the GP window, build the
surrogate Hessian from the posterior mean restricted to pairs with index
<= k - 2 (so the scaling matrix never depends on the gradient it is
applied to), compute the regularized direction, pick the step with the
stochastic backtracking line search, and move. Every run is deterministic
given (oracle, x0, config): gradient noise, cost noise and any oracle
randomness are drawn from named child streams of the config seed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .direction import DEFAULT_EPSILON, regularized_direction
from .gp_hessian import SIMPLIFIED, GPPrior, GramNotPositiveDefinite, HessianGP, ObservationPair
from .linesearch import LineSearchConfig, backtrack
from .problems.oracles import EvaluationError
from .streams import stream
from .symtools import unvech


@dataclass
class OptimizerConfig:
    """Everything a run needs besides the oracle and the starting point."""

    k_max: int
    prior: GPPrior
    R: np.ndarray
    epsilon: float = DEFAULT_EPSILON
    memory: int = 7
    mode: str = SIMPLIFIED
    quad_nodes: int = 16
    ls: LineSearchConfig = field(default_factory=LineSearchConfig)
    seed: int = 0
    fallback_curvature: float = 1.0

    def __post_init__(self):
        if self.k_max < 0:
            raise ValueError("k_max must be >= 0")
        if self.memory < 0:
            raise ValueError("memory must be >= 0")
        if self.fallback_curvature <= 0:
            raise ValueError("fallback_curvature must be positive")


@dataclass(frozen=True)
class IterationRow:
    """Per-iteration trace entry (state before the update)."""

    k: int
    x: np.ndarray
    fhat: float
    gnorm: float
    alpha: float
    lam: float
    ls_trials: int
    satisfied: bool


CSV_FLOAT_FORMAT = ".17g"


def _fmt(v: float) -> str:
    return format(float(v), CSV_FLOAT_FORMAT)


@dataclass
class RunRecord:
    """Full trace of one run plus the final iterate and exit status."""

    rows: list[IterationRow]
    x_final: np.ndarray
    status: str = "ok"
    events: list[str] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.rows)

    def header(self) -> list[str]:
        n = self.x_final.size
        return (
            ["k"]
            + [f"x{i + 1}" for i in range(n)]
            + ["fhat", "gnorm", "alpha", "lambda", "ls_trials", "satisfied"]
        )

    def to_csv(self, path) -> None:
        """Write the trace with a stable schema: one row per iteration,
        floats in shortest round-trip form, booleans as 0/1."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.header())
            for row in self.rows:
                writer.writerow(
                    [row.k]
                    + [_fmt(v) for v in row.x]
                    + [
                        _fmt(row.fhat),
                        _fmt(row.gnorm),
                        _fmt(row.alpha),
                        _fmt(row.lam),
                        row.ls_trials,
                        int(row.satisfied),
                    ]
                )


def run(oracle, x0: Sequence[float], cfg: OptimizerConfig) -> RunRecord:
    """Run the optimizer for cfg.k_max iterations from x0.

    The oracle must expose ``cost(x, rng) -> float`` and
    ``grad(x, rng) -> ndarray``; both are treated as fresh noisy draws.
    A non-finite (or failing) gradient draw terminates the run with status
    ``"gradient-failure"``; a gram-matrix failure only downgrades that
    iteration to the scaled-gradient fallback direction.
    """
    x = np.asarray(x0, dtype=float).copy()
    gp = HessianGP(
        prior=cfg.prior,
        R=np.asarray(cfg.R, dtype=float),
        memory=cfg.memory,
        mode=cfg.mode,
        quad_nodes=cfg.quad_nodes,
    )
    grad_rng = stream(cfg.seed, "gradient")
    cost_rng = stream(cfg.seed, "cost")

    def noisy_cost(pt: np.ndarray) -> float:
        try:
            value = float(oracle.cost(pt, cost_rng))
        except EvaluationError:
            return float("inf")
        return value

    rows: list[IterationRow] = []
    events: list[str] = []
    status = "ok"
    x_prev: np.ndarray | None = None
    g_prev: np.ndarray | None = None

    for k in range(1, cfg.k_max + 1):
        try:
            g = np.asarray(oracle.grad(x, grad_rng), dtype=float).ravel()
        except EvaluationError as exc:
            status = "gradient-failure"
            events.append(f"iteration {k}: gradient draw failed ({exc})")
            break
        if not np.all(np.isfinite(g)):
            status = "gradient-failure"
            events.append(f"iteration {k}: non-finite gradient")
            break

        fhat = noisy_cost(x)

        if k > 1:
            gp.push(ObservationPair(index=k - 1, x_start=x_prev, x_end=x, y=g - g_prev))

        try:
            H = gp.hessian_mean(x, max_index=k - 2)
            direction = regularized_direction(H, g, cfg.epsilon)
            p, lam = direction.p, direction.lam
        except GramNotPositiveDefinite:
            p = -g / cfg.fallback_curvature
            lam = float("nan")
            events.append(f"iteration {k}: gram failure, scaled-gradient fallback")

        ls = backtrack(k, x, p, g, fhat, noisy_cost, cfg.ls)
        rows.append(
            IterationRow(
                k=k,
                x=x.copy(),
                fhat=fhat,
                gnorm=float(np.linalg.norm(g)),
                alpha=ls.alpha,
                lam=lam,
                ls_trials=ls.trials,
                satisfied=ls.satisfied,
            )
        )
        x_prev, g_prev = x, g
        x = x + ls.alpha * p

    return RunRecord(rows=rows, x_final=x, status=status, events=events)


def prior_hessian(prior: GPPrior, x: np.ndarray) -> np.ndarray:
    """Hessian implied by the prior mean alone (what the first two
    iterations use, before any usable pair exists)."""
    return unvech(prior.mean(np.asarray(x, dtype=float)))
