"""Predictor fitting: conditional-risk (kernel-weighted), marginal, and
sliding-window least squares, plus the loss functions used everywhere.

Training uses squared loss on the raw residual as a convex surrogate, solved
in closed form through the normal equations. Evaluation-side losses are
bounded in [0, 1] (zero-one, or squared clipped and scaled by 1/4).
"""

from dataclasses import dataclass

import numpy as np

from .estimator import (Hypothesis, NoEffectiveSamplesError,
                        history_weights)


class DegenerateDesignError(RuntimeError):
    """The (unridged) normal matrix is singular."""


@dataclass
class TrainConfig:
    """Configuration for conditional-risk fitting."""

    d: int
    kernel: object  # KernelSpec or StratifiedKernelSpec
    ridge: float = 1e-8
    fallback: str = "error"  # or "uniform-weights"
    loss_kind: str = "zero-one"

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.ridge < 0:
            raise ValueError("ridge must be >= 0")
        if self.fallback not in ("error", "uniform-weights"):
            raise ValueError(f"unknown fallback policy {self.fallback!r}")


def loss(h, z):
    """Loss of hypothesis ``h`` on a single sample, in [0, 1]."""
    return float(h.loss_values(np.asarray(z, dtype=float)[None, :])[0])


def _weighted_least_squares(xs, ys, weights, ridge, loss_kind):
    """Solve min_w sum_i w_i (x_i.w + b - y_i)^2 + ridge ||w||^2."""
    n, q = xs.shape
    a = np.hstack([xs, np.ones((n, 1))])
    w = weights / weights.sum()
    m = a.T @ (a * w[:, None])
    reg = np.zeros(q + 1)
    reg[:q] = ridge  # the bias is not regularized
    m[np.diag_indices(q + 1)] += reg
    rhs = a.T @ (w * ys)
    try:
        beta = np.linalg.solve(m, rhs)
    except np.linalg.LinAlgError as exc:
        raise DegenerateDesignError("singular normal matrix; use ridge > 0") from exc
    if not np.all(np.isfinite(beta)):
        raise DegenerateDesignError("non-finite least-squares solution")
    return Hypothesis(weights=beta[:q], bias=float(beta[q]), loss_kind=loss_kind)


def ecrm_fit(seq, target, cfg):
    """Minimize the kernel-weighted squared surrogate of the conditional risk.

    Each sample z_{i+1} is weighted by the kernel similarity between its
    history and the target history. Weights are normalized to sum to one
    before solving, so the fit is invariant to rescaling them.
    """
    wv = history_weights(seq, cfg.d, cfg.kernel, target)
    w = wv.raw_weights
    total = w.sum()
    if total <= 0.0 or not np.isfinite(total):
        if cfg.fallback == "uniform-weights":
            w = np.ones_like(w)
        else:
            raise NoEffectiveSamplesError(
                "zero total weight mass; no effective samples for the fit")
    tail = seq.points[cfg.d:]
    ys = np.where(tail[:, -1] >= 0.5, 1.0, -1.0)
    return _weighted_least_squares(tail[:, :-1], ys, w, cfg.ridge, cfg.loss_kind)


def erm_fit(seq, ridge=1e-8, loss_kind="zero-one"):
    """Unweighted least squares over the full sequence."""
    if seq.n_samples < 2:
        raise ValueError("need at least 2 samples")
    ys = seq.labels()
    return _weighted_least_squares(seq.inputs(), ys,
                                   np.ones(seq.n_samples), ridge, loss_kind)


def sliding_window_fit(seq, d, ridge=1e-8, loss_kind="zero-one"):
    """Unweighted least squares on the last ``d`` samples only."""
    if d < 2:
        raise ValueError("window must contain at least 2 samples")
    if seq.n_samples < d:
        raise ValueError(f"sequence shorter than window d={d}")
    tail = seq.points[-d:]
    ys = np.where(tail[:, -1] >= 0.5, 1.0, -1.0)
    return _weighted_least_squares(tail[:, :-1], ys, np.ones(d), ridge, loss_kind)
