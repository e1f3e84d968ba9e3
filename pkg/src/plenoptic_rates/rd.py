"""Rate-distortion quantities.

Rates are bits per scalar sample unless ``per_frame`` is in the name.  For the
AR(1) field the Shannon lower bound on the trajectory-conditional rate is
tight below the limiting minimum eigenvalue ``(1 - rho) / (1 + rho)`` of the
temporal correlation matrix; outside that range points are still produced
but flagged invalid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigvalsh, toeplitz

from .entropy import (
    DynamicRateInputs,
    binary_entropy,
    dynamic_cond_rate_ar1,
    gaussian_diff_entropy,
)
from .reality import Ar1FieldSpec
from .walk import WalkParams

MAX_TOEPLITZ_DIM = 4096
LN2 = math.log(2.0)


@dataclass(frozen=True)
class RDPoint:
    distortion: float
    rate: float
    valid: bool = True
    kind: str = "analytic_bound"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.rate < 0 or self.distortion < 0:
            raise ValueError("rate and distortion must be nonnegative")


@dataclass
class RDCurve:
    points: list[RDPoint]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = sorted(self.points, key=lambda pt: pt.distortion)

    @property
    def distortions(self) -> np.ndarray:
        return np.array([pt.distortion for pt in self.points])

    @property
    def rates(self) -> np.ndarray:
        return np.array([pt.rate for pt in self.points])


class BlahutArimotoError(RuntimeError):
    pass


def rx_bernoulli(p: float, d: float) -> float:
    """Hamming rate-distortion function of a Bernoulli(p) source."""
    if d < 0:
        raise ValueError("distortion must be nonnegative")
    if d >= min(p, 1 - p):
        return 0.0
    return binary_entropy(p) - binary_entropy(d)


@dataclass
class BAResult:
    rate: float
    distortion: float
    rate_lower: float
    rate_upper: float
    slope: float
    iterations: int
    conditional: np.ndarray = field(repr=False)


def _ba_at_slope(p_x, dist, beta, tol, max_iter):
    n_hat = dist.shape[1]
    q = np.full(n_hat, 1.0 / n_hat)
    kernel = np.exp(-beta * dist)
    objective_prev = math.inf
    for it in range(1, max_iter + 1):
        z = kernel @ q  # per source symbol normalizer
        cond = kernel * q[None, :] / z[:, None]
        q_new = p_x @ cond
        # Blahut bounds: c(xhat) = sum_x p(x) exp(-beta d) / z(x)
        c = (p_x / z) @ kernel
        log_c = np.log(np.where(c > 0, c, 1.0))
        distortion = float(np.sum(p_x[:, None] * cond * dist))
        base = -beta * distortion - float(p_x @ np.log(z))
        upper = base - float(q @ log_c)
        lower = base - float(log_c.max())
        # BA functional min_cond I + beta D; never increases across iterations
        objective = -float(p_x @ np.log(z))
        if objective > objective_prev + 1e-12:
            raise BlahutArimotoError(f"objective increased at iteration {it}")
        objective_prev = objective
        q = q_new
        if (upper - lower) / LN2 < tol:
            break
    else:
        raise BlahutArimotoError(
            f"no convergence after {max_iter} iterations (gap {(upper - lower) / LN2:.3g} bits, beta={beta:.4g})"
        )
    z = kernel @ q
    cond = kernel * q[None, :] / z[:, None]
    distortion = float(np.sum(p_x[:, None] * cond * dist))
    joint = p_x[:, None] * cond
    qq = p_x @ cond
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(joint > 0, cond / qq[None, :], 1.0)
    rate = float(np.sum(np.where(joint > 0, joint * np.log2(ratio), 0.0)))
    return BAResult(max(rate, 0.0), distortion, max(lower / LN2, 0.0), upper / LN2, beta, it, cond)


def blahut_arimoto(
    pmf,
    distortion,
    slope: float | None = None,
    target_d: float | None = None,
    tol: float = 1e-6,
    d_tol: float = 1e-8,
    max_iter: int = 100_000,
) -> BAResult:
    """Point on ``R(D)`` for a finite source, at a given slope or target distortion.

    ``slope`` is ``beta`` in ``exp(-beta d)`` (nats per unit distortion).  With
    ``target_d`` the slope is found by bisection on ``log beta``.
    """
    p_x = np.asarray(pmf, dtype=float)
    dist = np.asarray(distortion, dtype=float)
    if p_x.ndim != 1 or dist.shape[0] != p_x.size:
        raise ValueError("distortion matrix rows must match the pmf")
    if tol <= 0:
        raise ValueError("tol must be positive")
    support = p_x > 0
    p_x, dist = p_x[support], dist[support]
    if slope is not None:
        return _ba_at_slope(p_x, dist, float(slope), tol, max_iter)
    if target_d is None:
        raise ValueError("give either slope or target_d")

    d_min = float(p_x @ dist.min(axis=1))
    d_max = float(min(p_x @ dist[:, j] for j in range(dist.shape[1])))
    if target_d >= d_max:
        return BAResult(0.0, d_max, 0.0, 0.0, 0.0, 0, np.zeros((p_x.size, dist.shape[1])))
    if target_d <= d_min:
        # steep end of the curve: a large slope approximates R(d_min)
        return _ba_at_slope(p_x, dist, 60.0, tol, max_iter)
    lo_b, hi_b = math.log(1e-4), math.log(1e3)
    res = None
    for _ in range(200):
        mid = 0.5 * (lo_b + hi_b)
        res = _ba_at_slope(p_x, dist, math.exp(mid), tol, max_iter)
        if abs(res.distortion - target_d) < d_tol:
            break
        if res.distortion > target_d:
            lo_b = mid
        else:
            hi_b = mid
    return res


def static_lossy_upper(walk: WalkParams, rx_at_d: float) -> float:
    """Per-frame upper bound ``H(p_w) + (1 - 2 p_w) R_X(D)`` for a static wall."""
    if rx_at_d < 0:
        raise ValueError("R_X(D) must be nonnegative")
    return binary_entropy(walk.p_w) + (1.0 - 2.0 * walk.p_w) * rx_at_d


@dataclass(frozen=True)
class SlbValidity:
    d_max: float
    snr_threshold_db: float


def slb_validity(rho: float) -> SlbValidity:
    """Largest distortion for which the Shannon lower bound is tight."""
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must lie in [0, 1)")
    d_max = (1.0 - rho) / (1.0 + rho)
    return SlbValidity(d_max, 10.0 * math.log10(1.0 / d_max))


def slb_ar1_upper(walk: WalkParams, ar1: Ar1FieldSpec, L: int, d: float, tol: float = 1e-12) -> RDPoint:
    """Upper bound on ``R_V(D)`` from trajectory side information plus the tight SLB.

    The returned rate is per scalar; ``meta["rate_per_frame"]`` holds the
    per-frame value.  ``valid`` is False outside ``0 < D < (1-rho)/(1+rho)``.
    """
    if d <= 0:
        raise ValueError("distortion must be positive")
    cond = dynamic_cond_rate_ar1(DynamicRateInputs(walk, ar1, L, tol))
    per_frame = binary_entropy(walk.p_w) + cond.value - L * gaussian_diff_entropy(d)
    valid = d < slb_validity(ar1.rho).d_max
    return RDPoint(
        distortion=d,
        rate=max(per_frame, 0.0) / L,
        valid=valid,
        kind="analytic_bound",
        meta={"rate_per_frame": per_frame, "cond_entropy": cond.value, "snr_db": -10 * math.log10(d)},
    )


def toeplitz_min_eig(rho: float, t: int) -> float:
    """Smallest eigenvalue of the ``t x t`` matrix ``[rho^|i-j|]``."""
    if t < 1:
        raise ValueError("t must be >= 1")
    if t > MAX_TOEPLITZ_DIM:
        raise ValueError(f"dense eigensolve capped at t={MAX_TOEPLITZ_DIM}")
    return float(eigvalsh(ar1_correlation(rho, t), subset_by_index=[0, 0])[0])


def ar1_correlation(rho: float, t: int) -> np.ndarray:
    return toeplitz(rho ** np.arange(t))


def mixture_cond_rd(components, d: float) -> float:
    """Conditional RD of a Gaussian mixture given its label, per scalar.

    ``components`` is a list of ``(weight, covariance)``; only the regime
    where ``d`` does not exceed any eigenvalue is supported.
    """
    if d <= 0:
        raise ValueError("distortion must be positive")
    total = 0.0
    for weight, cov in components:
        lam = np.atleast_1d(eigvalsh(np.atleast_2d(np.asarray(cov, dtype=float))))
        if d > lam.min() * (1 + 1e-12):
            raise ValueError(f"D={d} exceeds eigenvalue {lam.min():.6g}; reverse water-filling not supported")
        total += weight * float(np.mean(0.5 * np.log2(np.maximum(lam / d, 1.0))))
    return total
