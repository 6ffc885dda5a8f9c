"""Smoothing kernels, their constants, numerical axiom checks, and the
stratified set similarity used for labeled histories.

Two normalized families are built in:

* ``sqexp`` — isotropic Gaussian density with width parameter ``w``,
  ``K(u) = (2 pi w^2)^(-dim/2) exp(-||u||^2 / (2 w^2))``.
* ``epanechnikov`` — product kernel ``prod_i 3/(4w) (1 - (u_i/w)^2)_+`` with
  compact support ``[-w, w]^dim``.

The stratified set similarity is deliberately *not* a normalized smoothing
kernel; it is only meaningful inside the ratio estimator, where its missing
normalization cancels.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import backend

FAMILIES = ("sqexp", "epanechnikov")


@dataclass
class KernelSpec:
    """A smoothing kernel family with bandwidth and analytic constants.

    ``K1`` bounds the kernel, ``K2`` bounds its second moments,
    ``(lipschitz_L, lipschitz_gamma)`` are Hoelder constants. All four are
    computed analytically from ``family``, ``dim`` and ``width``.
    """

    dim: int
    bandwidth_b: float
    family: str = "sqexp"
    width: float = 1.0
    K1: float = field(init=False)
    K2: float = field(init=False)
    lipschitz_L: float = field(init=False)
    lipschitz_gamma: float = field(init=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.bandwidth_b <= 0:
            raise ValueError(f"bandwidth_b must be > 0, got {self.bandwidth_b}")
        if self.width <= 0:
            raise ValueError(f"width must be > 0, got {self.width}")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        p, w = self.dim, self.width
        if self.family == "sqexp":
            self.K1 = (2.0 * math.pi * w * w) ** (-p / 2.0)
            self.K2 = w * w
            # sup of the gradient norm, attained at ||u|| = w
            self.lipschitz_L = math.exp(-0.5) / w * self.K1
        else:
            self.K1 = (0.75 / w) ** p
            self.K2 = w * w / 5.0
            self.lipschitz_L = math.sqrt(p) * 1.5 / (w * w) * (0.75 / w) ** max(p - 1, 0)
        self.lipschitz_gamma = 1.0

    @property
    def normalizes(self):
        """True for normalized smoothing kernels, which carry a 1/b^d factor."""
        return True


@dataclass
class StratifiedKernelSpec:
    """Similarity-weight configuration for labeled histories.

    Uses the unnormalized squared-exponential base kernel
    ``exp(-||x - x'||^2 / w^2)`` averaged within the positive and negative
    label strata. Weights lie in [0, 1]; the estimator skips the ``1/b^d``
    normalization on this path.
    """

    d: int
    base_width: float

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if self.base_width <= 0:
            raise ValueError(f"base_width must be > 0, got {self.base_width}")

    @property
    def normalizes(self):
        return False


@dataclass
class LabeledHistory:
    """A history of d labeled points for the stratified similarity."""

    xs: np.ndarray  # (d, q)
    ys: np.ndarray  # (d,), values in {-1, +1}

    def __post_init__(self):
        self.xs = np.atleast_2d(np.asarray(self.xs, dtype=float))
        self.ys = np.asarray(self.ys, dtype=float)
        if self.xs.shape[0] != self.ys.shape[0]:
            raise ValueError("xs and ys length mismatch")
        if not np.all(np.isin(self.ys, (-1.0, 1.0))):
            raise ValueError("labels must be in {-1, +1}")

    def __len__(self):
        return self.xs.shape[0]


def eval_kernel(spec, u):
    """Evaluate the smoothing kernel at a point of length ``spec.dim``."""
    u = np.asarray(u, dtype=float).ravel()
    if u.shape[0] != spec.dim:
        raise ValueError(f"argument has length {u.shape[0]}, expected {spec.dim}")
    w = spec.width
    if spec.family == "sqexp":
        return float(spec.K1 * math.exp(-float(u @ u) / (2.0 * w * w)))
    v = 1.0 - (u / w) ** 2
    if np.any(v <= 0.0):
        return 0.0
    return float(np.prod(0.75 / w * v))


def _eval_kernel_batch(spec, pts):
    """Vectorized kernel evaluation on an (n, dim) array."""
    pts = np.asarray(pts, dtype=float)
    w = spec.width
    if spec.family == "sqexp":
        sq = np.einsum("ij,ij->i", pts, pts)
        return spec.K1 * np.exp(-sq / (2.0 * w * w))
    v = np.clip(1.0 - (pts / w) ** 2, 0.0, None)
    return np.prod(0.75 / w * v, axis=1)


@dataclass
class AxiomReport:
    """Numerical verification of the smoothing-kernel axioms."""

    integral: float
    max_abs: float
    first_moments: np.ndarray
    max_second_moment: float
    holder_ratio: float
    normalization_ok: bool
    bound_ok: bool
    first_moments_ok: bool
    second_moment_ok: bool
    holder_ok: bool

    @property
    def passed(self):
        return (self.normalization_ok and self.bound_ok and self.first_moments_ok
                and self.second_moment_ok and self.holder_ok)


_DEFAULT_RES = {1: 4096, 2: 512, 3: 128, 4: 48}


def verify_kernel_axioms(spec, radius=None, resolution=None, holder_pairs=10_000,
                         norm_tol=1e-3, moment_tol=1e-6, slack=1e-6, seed=0,
                         kernel_fn=None):
    """Check the four smoothing-kernel axioms by tensor-grid quadrature.

    Integrates over ``[-radius, radius]^dim`` with a midpoint grid of
    ``resolution`` nodes per axis. ``kernel_fn`` may override the kernel while
    keeping the spec's constants (useful for negative tests). Dimensions above
    4 are rejected: the tensor grid becomes too expensive.
    """
    p = spec.dim
    if p > 4:
        raise ValueError("quadrature verification supports dim <= 4")
    if radius is None:
        # epanechnikov support is exactly [-w, w]^dim; wider grids waste nodes
        radius = 8.0 * spec.width if spec.family == "sqexp" else spec.width
    if resolution is None:
        resolution = _DEFAULT_RES[p]

    h = 2.0 * radius / resolution
    nodes = -radius + (np.arange(resolution) + 0.5) * h
    grids = np.meshgrid(*([nodes] * p), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)

    if kernel_fn is None:
        vals = _eval_kernel_batch(spec, pts)
    else:
        vals = np.asarray([kernel_fn(pt) for pt in pts], dtype=float)
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("kernel produced non-finite values on the grid")

    cell = h ** p
    integral = float(vals.sum() * cell)
    max_abs = float(np.abs(vals).max())
    first = (pts * vals[:, None]).sum(axis=0) * cell

    max_second = -np.inf
    for i in range(p):
        for j in range(i, p):
            m = float((pts[:, i] * pts[:, j] * vals).sum() * cell)
            max_second = max(max_second, m)

    rng = np.random.default_rng(seed)
    ua = rng.uniform(-radius, radius, size=(holder_pairs, p))
    ub = rng.uniform(-radius, radius, size=(holder_pairs, p))
    if kernel_fn is None:
        fa, fb = _eval_kernel_batch(spec, ua), _eval_kernel_batch(spec, ub)
    else:
        fa = np.asarray([kernel_fn(x) for x in ua])
        fb = np.asarray([kernel_fn(x) for x in ub])
    dist = np.linalg.norm(ua - ub, axis=1) ** spec.lipschitz_gamma
    ratio = float(np.max(np.abs(fa - fb) / np.where(dist > 0, dist, np.inf)))

    return AxiomReport(
        integral=integral,
        max_abs=max_abs,
        first_moments=first,
        max_second_moment=max_second,
        holder_ratio=ratio,
        normalization_ok=abs(integral - 1.0) <= norm_tol,
        bound_ok=max_abs <= spec.K1 * (1.0 + slack),
        first_moments_ok=bool(np.all(np.abs(first) <= moment_tol)),
        second_moment_ok=max_second <= spec.K2 + max(norm_tol * spec.K2, moment_tol),
        holder_ok=ratio <= spec.lipschitz_L * (1.0 + slack),
    )


def stratified_set_weight(s, s_bar, base_width):
    """Stratified similarity between two labeled histories, in [0, 1].

    Averages the base kernel ``exp(-||x - x'||^2 / w^2)`` over pairs within
    the positive strata and within the negative strata, each term halved.
    A stratum contributes 0 unless it is populated in *both* histories,
    which keeps the value symmetric and bounded.
    """
    if base_width <= 0:
        raise ValueError("base_width must be > 0")
    if len(s) != len(s_bar):
        raise ValueError("histories must have equal length")
    xs = np.ascontiguousarray(s.xs[None, :, :], dtype=float)
    ys = np.ascontiguousarray(s.ys[None, :], dtype=float)
    tx = np.ascontiguousarray(s_bar.xs, dtype=float)
    ty = np.ascontiguousarray(s_bar.ys, dtype=float)
    out = backend.stratified_weights(xs, ys, tx, ty, 1.0 / (base_width * base_width))
    return float(out[0])
