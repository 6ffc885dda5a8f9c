"""Numerical evaluation of the finite-sample concentration bound.

All quantities are plugged in exactly as stated: the derived thresholds
t1/t2/t3, the hypercube covering factor, an injected hypothesis covering
number, an injected beta-coefficient function, and the (mu, a) block
schedule. Products are assembled in log space because the covering factor
overflows double precision easily; +inf is a legitimate (vacuously true)
result.
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


class VacuousRegimeError(ValueError):
    """t1 <= 0: the deviation level is too small for the chosen bandwidth."""

    def __init__(self, margin):
        super().__init__(
            f"vacuous regime: t*D0 - K2*D2*d^2*b^2 = {margin:.6g} <= 0")
        self.margin = margin


@dataclass
class BoundParams:
    """Every ingredient of the concentration bound."""

    t: float
    N: int
    k: int
    d: int
    b: float
    K1: float
    K2: float
    L: float
    gamma: float
    D0: float
    D2: float
    L_H: float
    beta: Callable[[int], float]
    covering: Callable[[float, int], float]
    mu: int
    a: int
    D1: float | None = None
    L_R: float | None = None  # only the consistency statement uses this

    def __post_init__(self):
        for name in ("t", "b", "K1", "K2", "L", "gamma", "D0", "D2", "L_H"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not (0 < self.t <= 1):
            raise ValueError("t must lie in (0, 1]")
        if self.mu < 1 or self.a < 1:
            raise ValueError("mu and a must be >= 1")
        if 4 * self.mu * self.a * self.d > self.N:
            raise ValueError("block schedule violates 4*mu*a*d <= N")


def derived_thresholds(p):
    """The three thresholds t1, t2, t3 derived from the deviation level."""
    margin = p.t * p.D0 - p.K2 * p.D2 * p.d ** 2 * p.b ** 2
    if margin <= 0:
        raise VacuousRegimeError(margin)
    t1 = margin / 6.0
    t2 = t1 * p.b ** p.d / (64.0 * p.K1 * p.L_H)
    t3 = (3.0 * p.L / (p.b ** (p.d + p.gamma) * t1)) ** (1.0 / p.gamma)
    return t1, t2, t3


def hypercube_covering(kd, tau):
    """(sqrt(kd) / (2 tau))^kd, clamped below by 1."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    return max(1.0, (math.sqrt(kd) / (2.0 * tau)) ** kd)


def linear_covering_bound(theta, weight_radius, input_dim, n):
    """Pseudo-dimension style covering-number bound for bounded linear
    predictors with a bias term.

    Uses the Haussler-type estimate e*(P+1)*(2*e*B/theta)^P with
    P = input_dim + 1 (weights plus bias) and B = weight_radius, clamped
    below by 1. The estimate is independent of n (hence trivially
    polynomial in it); it is monotone non-increasing in theta.
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    pdim = input_dim + 1
    val = math.e * (pdim + 1) * (2.0 * math.e * weight_radius / theta) ** pdim
    return max(1.0, val)


def block_schedule(n_total, d, target_mu=None):
    """Integer (mu, a) with 4*mu*a*d <= N, maximizing mu*a.

    Leftover points are absorbed into the last block. With ``target_mu``
    given, a = floor(N / (4 d mu)).
    """
    if n_total < 4 * d:
        raise ValueError(f"sequence too short: need N >= 4d = {4 * d}")
    if target_mu is not None:
        mu = int(target_mu)
        if mu < 1:
            raise ValueError("target_mu must be >= 1")
        a = n_total // (4 * d * mu)
        if a < 1:
            raise ValueError("target_mu too large for this N")
        return mu, a
    return n_total // (4 * d), 1


def concentration_terms(p):
    """All intermediate quantities of the bound, as a dict.

    Keys: t1, t2, t3, covering (the injected hypothesis covering number),
    term1 (concentration term), term2 (mixing term), total.
    """
    t1, t2, t3 = derived_thresholds(p)
    kd = p.k * p.d
    n = p.N - p.d
    log_cube = kd * math.log(math.sqrt(kd) * t3 / 2.0)
    cov = p.covering(t2, n)
    if cov < 1.0:
        raise ValueError("covering numbers are >= 1")
    exponent = -p.mu * t1 ** 2 * p.b ** (2 * p.d) / (2048.0 * p.K1 ** 2)
    log_term1 = math.log(32.0) + log_cube + math.log(cov) + exponent
    term1 = _safe_exp(log_term1)

    beta_val = p.beta(2 * p.a * p.d)
    if beta_val < 0:
        raise ValueError("beta coefficients are non-negative")
    if p.mu <= 1 or beta_val == 0.0:
        term2 = 0.0
    else:
        log_term2 = (math.log(4.0) + log_cube + math.log(p.mu - 1)
                     + math.log(beta_val))
        term2 = _safe_exp(log_term2)
    return {"t1": t1, "t2": t2, "t3": t3, "covering": cov,
            "term1": term1, "term2": term2, "total": term1 + term2}


def concentration_bound(p):
    """Total failure probability bound: covering term plus mixing term."""
    return concentration_terms(p)["total"]


def _safe_exp(x):
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


@dataclass
class ScalingRow:
    N: int
    b: float
    mu: int
    a: int
    bound: float | None
    error: str | None = None


def scaling_check(n_grid, d, params_template):
    """Evaluate the bound along the exponential-mixing schedule.

    For each N: b = N^(-1/(6d)), mu ~ N^(2/3)/2 and a chosen so that
    4*mu*a*d <= N. Rows in the vacuous regime report an error instead of
    aborting the sweep.
    """
    rows = []
    for n_total in n_grid:
        n_total = int(n_total)
        b = n_total ** (-1.0 / (6.0 * d))
        try:
            mu_target = max(1, min(int(n_total ** (2.0 / 3.0) / 2.0),
                                   n_total // (4 * d)))
            mu, a = block_schedule(n_total, d, target_mu=mu_target)
            p = BoundParams(
                t=params_template.t, N=n_total, k=params_template.k, d=d, b=b,
                K1=params_template.K1, K2=params_template.K2,
                L=params_template.L, gamma=params_template.gamma,
                D0=params_template.D0, D2=params_template.D2,
                L_H=params_template.L_H, beta=params_template.beta,
                covering=params_template.covering, mu=mu, a=a,
                D1=params_template.D1, L_R=params_template.L_R)
            rows.append(ScalingRow(N=n_total, b=b, mu=mu, a=a,
                                   bound=concentration_bound(p)))
        except (VacuousRegimeError, ValueError) as exc:
            rows.append(ScalingRow(N=n_total, b=b, mu=0, a=0,
                                   bound=None, error=str(exc)))
    return rows
