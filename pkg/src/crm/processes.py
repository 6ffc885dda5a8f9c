"""Hidden-Markov data generation with exact conditional oracles.

The process has m latent states; each state i emits x uniformly on an
axis-aligned box and labels it deterministically, y = sign(a_i . x + c_i),
with sign(0) = +1. Emitted samples are affinely rescaled into [0, 1]^k
(label mapped to {0, 1}) before they enter a :class:`SampleSequence`.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .estimator import SampleSequence

_EIG_TOL = 1e-10


class NotMixingError(RuntimeError):
    """The latent chain is reducible or periodic; no mixing bound exists."""


class InconsistentObservationError(RuntimeError):
    """An observation has zero likelihood under every latent state."""


@dataclass
class HiddenMarkovSpec:
    """Transition matrix, per-state affine labelers and the emission box."""

    transition: np.ndarray          # (m, m), row-stochastic
    label_directions: np.ndarray    # (m, 2)
    label_offsets: np.ndarray       # (m,)
    emission_box: np.ndarray = field(
        default_factory=lambda: np.array([[0.0, 10.0], [0.0, 10.0]]))
    initial_distribution: np.ndarray | None = None

    def __post_init__(self):
        self.transition = np.atleast_2d(np.asarray(self.transition, dtype=float))
        m = self.transition.shape[0]
        if self.transition.shape != (m, m):
            raise ValueError("transition must be square")
        if np.any(self.transition < 0) or np.any(
                np.abs(self.transition.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("transition rows must be probability vectors")
        self.label_directions = np.atleast_2d(
            np.asarray(self.label_directions, dtype=float))
        self.label_offsets = np.atleast_1d(np.asarray(self.label_offsets, dtype=float))
        if self.label_directions.shape[0] != m or self.label_offsets.shape[0] != m:
            raise ValueError("need one affine labeler per state")
        self.emission_box = np.asarray(self.emission_box, dtype=float)
        if np.any(self.emission_box[:, 1] <= self.emission_box[:, 0]):
            raise ValueError("emission box is degenerate")
        if self.initial_distribution is None:
            self.initial_distribution = np.full(m, 1.0 / m)
        self.initial_distribution = np.asarray(self.initial_distribution, dtype=float)
        if (self.initial_distribution.shape != (m,)
                or np.any(self.initial_distribution < 0)
                or abs(self.initial_distribution.sum() - 1.0) > 1e-12):
            raise ValueError("initial_distribution must be a probability vector")

    @property
    def num_states(self):
        return self.transition.shape[0]

    def labels_at(self, state, x):
        """Labels in {-1, +1} at original-coordinate inputs x, shape (..., 2)."""
        x = np.asarray(x, dtype=float)
        m = x @ self.label_directions[state] + self.label_offsets[state]
        return np.where(m >= 0.0, 1.0, -1.0)

    def rescale(self, x):
        """Original box coordinates -> [0, 1]^2."""
        lo = self.emission_box[:, 0]
        span = self.emission_box[:, 1] - self.emission_box[:, 0]
        return (np.asarray(x, dtype=float) - lo) / span

    def unrescale(self, u):
        lo = self.emission_box[:, 0]
        span = self.emission_box[:, 1] - self.emission_box[:, 0]
        return lo + np.asarray(u, dtype=float) * span

    def stationary_distribution(self):
        """Left eigenvector of the transition matrix for eigenvalue 1."""
        vals, vecs = np.linalg.eig(self.transition.T)
        idx = int(np.argmin(np.abs(vals - 1.0)))
        pi = np.real(vecs[:, idx])
        pi = np.abs(pi)
        return pi / pi.sum()

    def to_dict(self):
        return {
            "transition": self.transition.tolist(),
            "label_directions": self.label_directions.tolist(),
            "label_offsets": self.label_offsets.tolist(),
            "emission_box": self.emission_box.tolist(),
            "initial_distribution": self.initial_distribution.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            transition=np.asarray(d["transition"], dtype=float),
            label_directions=np.asarray(d["label_directions"], dtype=float),
            label_offsets=np.asarray(d["label_offsets"], dtype=float),
            emission_box=np.asarray(
                d.get("emission_box", [[0.0, 10.0], [0.0, 10.0]]), dtype=float),
            initial_distribution=(
                np.asarray(d["initial_distribution"], dtype=float)
                if d.get("initial_distribution") is not None else None),
        )

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class StatePosterior:
    """Distribution over the latent state at a single time step."""

    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if np.any(self.probs < -1e-12) or abs(self.probs.sum() - 1.0) > 1e-10:
            raise ValueError("posterior must be a probability vector")


def simulate(spec, n, seed):
    """Draw n samples; deterministic given the seed. Returns a rescaled
    :class:`SampleSequence` carrying the latent state trace."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    m = spec.num_states
    states = np.empty(n, dtype=int)
    states[0] = rng.choice(m, p=spec.initial_distribution)
    for t in range(1, n):
        states[t] = rng.choice(m, p=spec.transition[states[t - 1]])
    lo = spec.emission_box[:, 0]
    hi = spec.emission_box[:, 1]
    xs = rng.uniform(lo, hi, size=(n, 2))
    margins = np.einsum("ij,ij->i", xs, spec.label_directions[states]) \
        + spec.label_offsets[states]
    ys = np.where(margins >= 0.0, 1.0, -1.0)
    points = np.column_stack([spec.rescale(xs), (ys + 1.0) / 2.0])
    return SampleSequence(points=points, latent_states=states)


def _emission_likelihoods(spec, point):
    """Per-state likelihood of one rescaled sample, up to the constant
    uniform density (which cancels on normalization)."""
    x = spec.unrescale(point[:2])
    y = 1.0 if point[2] >= 0.5 else -1.0
    states = np.arange(spec.num_states)
    margins = spec.label_directions @ x + spec.label_offsets
    labels = np.where(margins >= 0.0, 1.0, -1.0)
    del states
    return (labels == y).astype(float)


def forward_posterior(spec, observed, initial=None):
    """Forward recursion; returns the posterior of the *next* step's state.

    ``observed`` is a SampleSequence or an (n, 3) array of rescaled samples;
    an empty prefix yields the initial distribution as the next-step prior.
    ``initial`` overrides the spec's initial distribution (e.g. with the
    stationary one, for conditioning on a finite trailing history).
    """
    pts = observed.points if isinstance(observed, SampleSequence) else \
        np.atleast_2d(np.asarray(observed, dtype=float))
    alpha = np.array(spec.initial_distribution if initial is None else initial,
                     dtype=float)
    for t in range(pts.shape[0]):
        like = _emission_likelihoods(spec, pts[t])
        if t == 0:
            alpha = alpha * like
        else:
            alpha = (alpha @ spec.transition) * like
        total = alpha.sum()
        if total <= 0.0:
            raise InconsistentObservationError(
                f"observation at step {t} is inconsistent with every state")
        alpha = alpha / total
    if pts.shape[0] == 0:
        return StatePosterior(probs=alpha / alpha.sum())
    return StatePosterior(probs=alpha @ spec.transition)


def per_state_risks(spec, h, resolution=512):
    """Exact (quadrature) expected loss of ``h`` under each state's emission."""
    lo = spec.emission_box[:, 0]
    hi = spec.emission_box[:, 1]
    n1 = resolution
    g1 = lo[0] + (np.arange(n1) + 0.5) * (hi[0] - lo[0]) / n1
    g2 = lo[1] + (np.arange(n1) + 0.5) * (hi[1] - lo[1]) / n1
    xx, yy = np.meshgrid(g1, g2, indexing="ij")
    grid = np.column_stack([xx.ravel(), yy.ravel()])
    grid_rescaled = spec.rescale(grid)
    margin = grid_rescaled @ h.weights + h.bias
    risks = np.empty(spec.num_states)
    for s in range(spec.num_states):
        y = spec.labels_at(s, grid)
        if h.loss_kind == "zero-one":
            pred = np.where(margin >= 0.0, 1.0, -1.0)
            ell = (pred != y).astype(float)
        else:
            ell = np.minimum(1.0, (margin - y) ** 2 / 4.0)
        risks[s] = ell.mean()
    return risks


def conditional_risk_oracle(spec, posterior, h, resolution=512):
    """Exact conditional risk: posterior-weighted per-state expected loss."""
    risks = per_state_risks(spec, h, resolution=resolution)
    return float(np.dot(posterior.probs, risks))


def random_chain(seed, num_states=4, min_self_loop=0.2):
    """A random mixing chain: Dirichlet rows with extra self-loop mass, and
    affine labelers whose decision lines cross the emission box."""
    rng = np.random.default_rng(seed)
    m = num_states
    trans = rng.dirichlet(np.ones(m), size=m)
    trans = (trans + min_self_loop * np.eye(m)) / (1.0 + min_self_loop)
    dirs = rng.normal(size=(m, 2))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    box = np.array([[0.0, 10.0], [0.0, 10.0]])
    anchors = rng.uniform(box[:, 0], box[:, 1], size=(m, 2))
    offsets = -np.einsum("ij,ij->i", dirs, anchors)
    spec = HiddenMarkovSpec(transition=trans, label_directions=dirs,
                            label_offsets=offsets, emission_box=box)
    spec.initial_distribution = spec.stationary_distribution()
    return spec


def _spectral_decay(transition):
    """(second-largest eigenvalue modulus, conditioning constant C)."""
    vals, vecs = np.linalg.eig(transition)
    order = np.argsort(-np.abs(vals))
    vals = vals[order]
    vecs = vecs[:, order]
    if np.abs(vals[0]) < 1.0 - _EIG_TOL or (len(vals) > 1
                                            and np.abs(vals[1]) > 1.0 - _EIG_TOL):
        raise NotMixingError("chain is reducible or periodic")
    lam = float(np.abs(vals[1])) if len(vals) > 1 else 0.0
    if lam < 1e-14:  # numerical zero: one-step perfect mixing
        lam = 0.0
    try:
        inv = np.linalg.inv(vecs)
    except np.linalg.LinAlgError as exc:
        raise NotMixingError("defective transition matrix") from exc
    # |P^j(s, t) - pi_t| <= sum_{l>=2} |V_sl| |lam_l|^j |V^-1_lt|
    mass = np.abs(vecs[:, 1:]) @ np.abs(inv[1:, :])
    c = 0.5 * float(mass.sum(axis=1).max())
    return lam, c


def beta_mixing_bound(spec, j):
    """Upper bound C * lambda^j on the latent chain's beta coefficient.

    lambda is the second-largest eigenvalue modulus and C comes from the
    eigendecomposition conditioning. The latent bound dominates the observed
    process's coefficient because emissions are conditionally independent
    given the states. Clamped into [0, 1].
    """
    if j < 1:
        raise ValueError("gap j must be >= 1")
    lam, c = _spectral_decay(spec.transition)
    if lam == 0.0:
        return 0.0
    return float(min(1.0, c * lam ** j))
