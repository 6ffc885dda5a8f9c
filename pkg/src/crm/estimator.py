"""Kernel-weighted conditional risk estimation.

Samples live in [0, 1]^k; for labeled data the last coordinate stores the
class label mapped from {-1, +1} to {0, 1} so that sequences stay inside the
unit cube. Histories of length d are flattened oldest-first into vectors of
length k*d.

Index conventions follow the estimator definition: with samples z_1..z_N, the
usable indices are I = {d, ..., N-1} (n = N - d of them); index i carries the
history z_{i-d+1}^i and the loss of the next sample z_{i+1}.
"""

from dataclasses import dataclass

import numpy as np

from . import backend
from .kernels import KernelSpec, StratifiedKernelSpec


class NoEffectiveSamplesError(RuntimeError):
    """Every history weight is zero: the estimator ratio is undefined."""


@dataclass
class SampleSequence:
    """An ordered realization of the process, optionally with latent states."""

    points: np.ndarray  # (N, k), all coordinates in [0, 1]
    latent_states: np.ndarray | None = None

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if self.points.ndim != 2 or self.points.shape[0] == 0:
            raise ValueError("points must be a non-empty (N, k) array")
        if np.any(self.points < -1e-12) or np.any(self.points > 1.0 + 1e-12):
            raise ValueError("sample coordinates must lie in [0, 1]")
        if self.latent_states is not None:
            self.latent_states = np.asarray(self.latent_states, dtype=int)
            if self.latent_states.shape[0] != self.points.shape[0]:
                raise ValueError("latent_states length mismatch")

    @property
    def n_samples(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    def labels(self):
        """Class labels in {-1, +1}, decoded from the last coordinate."""
        return np.where(self.points[:, -1] >= 0.5, 1.0, -1.0)

    def inputs(self):
        """The non-label coordinates, shape (N, k-1)."""
        return self.points[:, :-1]


@dataclass
class Hypothesis:
    """A linear predictor with a [0, 1]-bounded loss attached."""

    weights: np.ndarray  # (k-1,)
    bias: float
    loss_kind: str = "zero-one"

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        if self.loss_kind not in ("zero-one", "clipped-squared"):
            raise ValueError(f"unknown loss_kind {self.loss_kind!r}")

    def margin(self, x):
        return np.asarray(x, dtype=float) @ self.weights + self.bias

    def predict(self, x):
        """Predicted label in {-1, +1}; sign(0) counts as +1."""
        m = self.margin(x)
        return np.where(m >= 0.0, 1.0, -1.0)

    def loss_values(self, points):
        """Vector of losses on the rows of an (n, k) sample array."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        y = np.where(points[:, -1] >= 0.5, 1.0, -1.0)
        m = points[:, :-1] @ self.weights + self.bias
        if self.loss_kind == "zero-one":
            pred = np.where(m >= 0.0, 1.0, -1.0)
            return (pred != y).astype(float)
        return np.minimum(1.0, (m - y) ** 2 / 4.0)

    def to_dict(self):
        return {"weights": self.weights.tolist(), "bias": float(self.bias),
                "loss_kind": self.loss_kind}

    @classmethod
    def from_dict(cls, d):
        return cls(weights=np.asarray(d["weights"], dtype=float),
                   bias=float(d["bias"]), loss_kind=d.get("loss_kind", "zero-one"))


@dataclass
class WeightVector:
    """Per-sample history weights over the index set I = {d, ..., N-1}."""

    index_set: np.ndarray   # the indices i (1-based, as in the definition)
    raw_weights: np.ndarray

    def __post_init__(self):
        self.index_set = np.asarray(self.index_set, dtype=int)
        self.raw_weights = np.asarray(self.raw_weights, dtype=float)
        if self.index_set.shape != self.raw_weights.shape:
            raise ValueError("index_set and raw_weights length mismatch")
        if np.any(self.raw_weights < 0):
            raise ValueError("weights must be non-negative")

    @property
    def n(self):
        return self.index_set.shape[0]


def _flatten_target(target, d, k):
    """Flatten a (d, k) target history oldest-first; accept flat input too."""
    target = np.asarray(target, dtype=float)
    flat = target.ravel()
    if flat.shape[0] != d * k:
        raise ValueError(f"target history has size {flat.shape[0]}, expected {d * k}")
    return flat


def _history_windows(points, d):
    """All length-d windows z_{i-d+1}^i for i in I, flattened, shape (N-d, d*k)."""
    n, k = points.shape
    win = np.lib.stride_tricks.sliding_window_view(points, d, axis=0)
    # sliding_window_view yields (N-d+1, k, d); the last window is the target's
    # own history and is excluded from I
    return np.ascontiguousarray(win[: n - d].transpose(0, 2, 1).reshape(n - d, d * k))


def history_weights(seq, d, spec, target):
    """Kernel weights of every indexed sample against a target history."""
    n_total, k = seq.points.shape
    if d < 1:
        raise ValueError("history length d must be >= 1")
    if n_total < d + 2:
        raise ValueError(f"need N >= d + 2 samples, got N={n_total}, d={d}")
    windows = _history_windows(seq.points, d)
    index_set = np.arange(d, n_total)

    if isinstance(spec, StratifiedKernelSpec):
        if spec.d != d:
            raise ValueError(f"stratified kernel built for d={spec.d}, got d={d}")
        target = np.asarray(target, dtype=float).reshape(d, k)
        xs = np.ascontiguousarray(windows.reshape(-1, d, k)[:, :, :-1])
        ys = np.ascontiguousarray(
            np.where(windows.reshape(-1, d, k)[:, :, -1] >= 0.5, 1.0, -1.0))
        tx = np.ascontiguousarray(target[:, :-1])
        ty = np.ascontiguousarray(np.where(target[:, -1] >= 0.5, 1.0, -1.0))
        w = backend.stratified_weights(xs, ys, tx, ty,
                                       1.0 / spec.base_width ** 2)
        return WeightVector(index_set, w)

    if spec.dim != k * d:
        raise ValueError(f"kernel dim {spec.dim} does not match k*d = {k * d}")
    flat = _flatten_target(target, d, k)
    if spec.family == "sqexp":
        w = backend.sqexp_weights(windows, flat, spec.bandwidth_b, spec.width, spec.K1)
    else:
        w = backend.epanechnikov_weights(windows, flat, spec.bandwidth_b, spec.width)
    return WeightVector(index_set, w)


def _norm_factor(spec, d):
    return spec.bandwidth_b ** d if spec.normalizes else 1.0


def estimate_p(seq, d, spec, target):
    """Kernel density estimate of the target history: mean weight / b^d."""
    wv = history_weights(seq, d, spec, target)
    return float(wv.raw_weights.mean() / _norm_factor(spec, d))


def estimate_q(seq, d, spec, target, h):
    """Loss-weighted analogue of ``estimate_p`` for hypothesis ``h``."""
    wv = history_weights(seq, d, spec, target)
    losses = h.loss_values(seq.points[d:])
    return float((wv.raw_weights * losses).mean() / _norm_factor(spec, d))


def conditional_risk_estimate(seq, d, spec, target, h):
    """The ratio estimator q-hat / p-hat, guaranteed in [0, 1]."""
    wv = history_weights(seq, d, spec, target)
    total = wv.raw_weights.sum()
    if total <= 0.0:
        raise NoEffectiveSamplesError(
            "all history weights are zero; the conditional risk estimate is undefined")
    losses = h.loss_values(seq.points[d:])
    value = float((wv.raw_weights * losses).sum() / total)
    return min(1.0, max(0.0, value))


def empirical_marginal_risk(seq, h):
    """Plain average loss over the whole sequence."""
    if seq.n_samples < 1:
        raise ValueError("empty sequence")
    return float(h.loss_values(seq.points).mean())


def write_sequence(seq, path):
    """Columnar text format: header ``k N``, one sample per line, optional
    trailing integer latent state."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{seq.dim} {seq.n_samples}\n")
        for i in range(seq.n_samples):
            parts = [format(v, ".17g") for v in seq.points[i]]
            if seq.latent_states is not None:
                parts.append(str(int(seq.latent_states[i])))
            fh.write(" ".join(parts) + "\n")


def read_sequence(path):
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError("malformed sequence header, expected 'k N'")
        k, n = int(header[0]), int(header[1])
        points = np.empty((n, k))
        states = None
        for i in range(n):
            parts = fh.readline().split()
            if len(parts) == k + 1:
                if states is None:
                    states = np.empty(n, dtype=int)
                states[i] = int(parts[-1])
                parts = parts[:-1]
            if len(parts) != k:
                raise ValueError(f"line {i + 2}: expected {k} coordinates")
            points[i] = [float(p) for p in parts]
    return SampleSequence(points=points, latent_states=states)
