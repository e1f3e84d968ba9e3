"""Closed-form entropy quantities and bounds for the view process.

All rates are in bits per frame (one ``L``-sample view) unless a name says
otherwise.  The infinite return series are summed with
:func:`~plenoptic_rates.walk.return_weighted_sum`: each series
``sum_k f(k) P_k`` is rewritten as ``f(inf) * 2 p_w - sum_k (f(inf) - f(k)) P_k``
so that only a fast-decaying deficit is truncated, and the reported
``tail_bound`` certifies the truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .reality import Ar1FieldSpec, BscFieldSpec, StaticWallSpec, bsc_equiv
from .walk import (
    SeriesResult,
    WalkParams,
    first_passage_probs,
    return_probs,
    return_weighted_sum,
)

LOG2_2PIE = math.log2(2.0 * math.pi * math.e)


def binary_entropy(p):
    """``H(p)`` in bits, with ``0 log 0 = 0``; accepts scalars or arrays."""
    arr = np.asarray(p, dtype=float)
    if np.any((arr < 0) | (arr > 1)):
        raise ValueError("probability outside [0, 1]")
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(arr * np.log2(arr) + (1 - arr) * np.log2(1 - arr))
    h = np.where((arr == 0) | (arr == 1), 0.0, h)
    return float(h) if h.ndim == 0 else h


def discrete_entropy(pmf) -> float:
    p = np.asarray(pmf, dtype=float)
    if p.ndim != 1 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("invalid pmf")
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def gaussian_diff_entropy(variance):
    """``0.5 log2(2 pi e var)`` in bits."""
    v = np.asarray(variance, dtype=float)
    if np.any(v <= 0):
        raise ValueError("variance must be positive")
    out = 0.5 * (LOG2_2PIE + np.log2(v))
    return float(out) if out.ndim == 0 else out


phi = gaussian_diff_entropy


@dataclass
class BoundReport:
    lower: float
    upper: float
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ValueError("bounds must be finite")
        if self.lower > self.upper + 1e-12:
            raise ValueError(f"lower bound {self.lower} exceeds upper {self.upper}")

    @property
    def gap(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float, tol: float = 1e-9) -> bool:
        return self.lower - tol <= value <= self.upper + tol


# --- static reality ---------------------------------------------------------


def static_bounds(walk: WalkParams, source_entropy: float, fano_slack: float = 0.0) -> BoundReport:
    """Entropy-rate bounds for a static i.i.d. wall."""
    if source_entropy < 0 or fano_slack < 0:
        raise ValueError("entropies must be nonnegative")
    h_w = binary_entropy(walk.p_w)
    innovation = (1.0 - 2.0 * walk.p_w) * source_entropy
    upper = innovation + h_w
    lower = max(0.0, upper - fano_slack)
    return BoundReport(lower, upper, {
        "trajectory_entropy": h_w,
        "innovation_term": innovation,
        "fano_slack": fano_slack,
    })


def slack_AL(alphabet_size: int, L: int) -> float:
    """Probability of the alternating pattern over ``L + 1`` uniform symbols."""
    if alphabet_size < 2 or L < 2:
        raise ValueError("need alphabet_size >= 2 and L >= 2")
    return float(alphabet_size) ** (-(L - 1))


def static_bounds_al(walk: WalkParams, wall: StaticWallSpec, L: int) -> BoundReport:
    """Bounds with the analytic ambiguity slack ``H(p_w) P{not A_L}``.

    Only valid for uniform walls and odd ``L``; other cases should use the
    Fano form of :func:`static_bounds`.
    """
    if L % 2 == 0:
        raise ValueError("alternating-pattern slack needs odd L")
    if not wall.is_uniform:
        raise ValueError("alternating-pattern slack is only derived for uniform walls")
    p_al = slack_AL(wall.alphabet_size, L)
    rep = static_bounds(walk, math.log2(wall.alphabet_size))
    h_w = rep.terms["trajectory_entropy"]
    lower = rep.terms["innovation_term"] + h_w * (1.0 - p_al)
    return BoundReport(lower, rep.upper, {**rep.terms, "fano_slack": h_w * p_al, "p_AL": p_al})


def memory_bound_curve(walk: WalkParams, source_entropy: float, m_max: int) -> np.ndarray:
    """Upper bound on ``H(V_M | V^{M-1})`` for ``M = 1..m_max`` (static wall)."""
    fp = first_passage_probs(walk, m_max)
    avg = np.cumsum(fp) / np.arange(1, m_max + 1)
    return avg * source_entropy + binary_entropy(walk.p_w)


def conditional_bound_memory(walk: WalkParams, source_entropy: float, M: int) -> float:
    if M < 1:
        raise ValueError("memory M must be >= 1")
    return float(memory_bound_curve(walk, source_entropy, M)[-1])


def static_bounds_finite(
    walk: WalkParams, source_entropy: float, t: int, fano_slack: float = 0.0
) -> BoundReport:
    """Bounds on ``H(V_t | V^{t-1})`` at a finite step ``t``."""
    fp = first_passage_probs(walk, t)
    h_w = binary_entropy(walk.p_w)
    upper = float(np.mean(fp)) * source_entropy + h_w
    lower = max(0.0, float(fp[-1]) * source_entropy + h_w - fano_slack)
    return BoundReport(lower, upper, {
        "trajectory_entropy": h_w,
        "innovation_term": float(fp[-1]) * source_entropy,
        "fano_slack": fano_slack,
        "t": t,
    })


# --- dynamic reality ---------------------------------------------------------


@dataclass(frozen=True)
class DynamicRateInputs:
    walk: WalkParams
    field: BscFieldSpec | Ar1FieldSpec
    L: int
    tol: float = 1e-12

    def __post_init__(self):
        if self.L < 2:
            raise ValueError("L must be >= 2")


@dataclass
class CondRate:
    """Conditional entropy rate ``H(V|W)`` with its term breakdown."""

    value: float
    tail_bound: float
    terms: dict
    pairs: int = 0


def _bsc_deficit(p_i: float):
    def weight(k):
        return 1.0 - binary_entropy(0.5 * (1.0 - (1.0 - 2.0 * p_i) ** (2.0 * k)))
    return weight


def _ar1_deficit(rho: float):
    def weight(k):
        if rho == 0.0:
            return np.zeros(np.shape(k))
        return -0.5 * np.log2(-np.expm1(4.0 * k * math.log(rho)))
    return weight


def dynamic_cond_rate_bsc(inputs: DynamicRateInputs) -> CondRate:
    walk, spec, L = inputs.walk, inputs.field, inputs.L
    if not isinstance(spec, BscFieldSpec):
        raise TypeError("need a BscFieldSpec")
    p = walk.p_w
    if spec.p_i == 0.0:
        h_x = binary_entropy(spec.p_x)
        new_site = (1.0 - 2.0 * p) * h_x
        return CondRate(new_site, 0.0, {
            "new_site_term": new_site, "overlap_term": 0.0, "return_term": 0.0,
        })
    series: SeriesResult = return_weighted_sum(walk, _bsc_deficit(spec.p_i), tol=inputs.tol)
    new_site = 1.0 - 2.0 * p
    overlap = (L - 1) * binary_entropy(spec.p_i)
    returns = 2.0 * p - series.value
    return CondRate(new_site + overlap + returns, series.tail_bound, {
        "new_site_term": new_site, "overlap_term": overlap, "return_term": returns,
    }, series.pairs)


def dynamic_cond_rate_ar1(inputs: DynamicRateInputs) -> CondRate:
    """Conditional differential entropy rate ``h(V|W)`` for the AR(1) field."""
    walk, spec, L = inputs.walk, inputs.field, inputs.L
    if not isinstance(spec, Ar1FieldSpec):
        raise TypeError("need an Ar1FieldSpec")
    p, rho = walk.p_w, spec.rho
    series = return_weighted_sum(walk, _ar1_deficit(rho), tol=inputs.tol)
    phi1 = phi(1.0)
    new_site = phi1 * (1.0 - 2.0 * p)
    overlap = (L - 1) * phi(1.0 - rho**2)
    returns = 2.0 * p * phi1 - series.value
    return CondRate(new_site + overlap + returns, series.tail_bound, {
        "new_site_term": new_site, "overlap_term": overlap, "return_term": returns,
    }, series.pairs)


def dynamic_cond_rate(inputs: DynamicRateInputs) -> CondRate:
    if isinstance(inputs.field, Ar1FieldSpec):
        return dynamic_cond_rate_ar1(inputs)
    return dynamic_cond_rate_bsc(inputs)


def ar1_return_series(walk: WalkParams, rho: float, tol: float = 1e-12) -> float:
    """``sum_k phi(1 - rho^{4k}) P{first return at 2k}``."""
    s = return_weighted_sum(walk, _ar1_deficit(rho), tol=tol)
    return 2.0 * walk.p_w * phi(1.0) - s.value


def catalan_closed_form(walk: WalkParams, rho: float) -> float:
    """Closed form of ``sum_k (1 - rho^{4k}) P{first return at 2k}``."""
    p = walk.p_w
    return math.sqrt(1.0 - 4.0 * (1.0 - p) * p * rho**4) - (1.0 - 2.0 * p)


def jensen_upper_ar1(walk: WalkParams, rho: float) -> float:
    """Concavity bound on the AR(1) return series."""
    p = walk.p_w
    if p == 0.0:
        return 0.0
    return 2.0 * p * phi(catalan_closed_form(walk, rho) / (2.0 * p))


@dataclass
class IdentityCheck:
    lhs: float
    rhs: float
    residual: float
    tail_bound: float
    pairs: int


def catalan_sum_identity_check(walk: WalkParams, rho: float, tol: float = 1e-13) -> IdentityCheck:
    """Compare the truncated return series against its generating-function form.

    The left side is computed as ``2 p_w - sum_k rho^{4k} P_k``; the second
    sum is the Catalan generating function evaluated at ``p q rho^4`` and
    converges geometrically for ``rho < 1``.
    """
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must lie in [0, 1)")
    p = walk.p_w
    if rho == 0.0:
        series = SeriesResult(0.0, 0.0, 0)
    else:
        log_r4 = 4.0 * math.log(rho)
        series = return_weighted_sum(walk, lambda k: np.exp(k * log_r4), tol=tol)
    lhs = 2.0 * p - series.value
    rhs = catalan_closed_form(walk, rho)
    return IdentityCheck(lhs, rhs, abs(lhs - rhs), series.tail_bound, series.pairs)


def dynamic_bounds(cond_rate: float, walk: WalkParams, fano_slack: float = 0.0) -> BoundReport:
    """Dynamic-reality bounds: ``H(p_w) + H(V|W)`` minus the Fano slack."""
    if not (math.isfinite(cond_rate) and math.isfinite(fano_slack)) or fano_slack < 0:
        raise ValueError("inputs must be finite with nonnegative slack")
    h_w = binary_entropy(walk.p_w)
    upper = h_w + cond_rate
    return BoundReport(upper - fano_slack, upper, {
        "trajectory_entropy": h_w,
        "innovation_term": cond_rate,
        "fano_slack": fano_slack,
    })


def innovation_terms(
    walk: WalkParams, reality: StaticWallSpec | BscFieldSpec | Ar1FieldSpec, L: int, t_max: int
) -> np.ndarray:
    """``H(V_i | V^{i-1}, W^i)`` for ``i = 1..t_max`` (stationary start).

    The overlap contributes ``L - 1`` one-step innovations; the entering
    sample is either a fresh site or a revisit after an even lag ``2j`` with
    probability ``P{first return at 2j}``.
    """
    fp = first_passage_probs(walk, t_max)
    lags = np.arange(1, t_max + 1)
    rp = return_probs(walk, t_max)  # rp[lag-1]
    if isinstance(reality, StaticWallSpec):
        return fp * discrete_entropy(reality.pmf)
    if isinstance(reality, BscFieldSpec):
        if reality.p_i == 0.0:
            return fp * binary_entropy(reality.p_x)
        fresh = 1.0
        overlap = (L - 1) * binary_entropy(reality.p_i)
        lag_h = binary_entropy(0.5 * (1.0 - (1.0 - 2.0 * reality.p_i) ** lags))
    elif isinstance(reality, Ar1FieldSpec):
        fresh = phi(1.0)
        overlap = (L - 1) * phi(reality.innovation_var)
        lag_h = phi(-np.expm1(2.0 * lags * math.log(reality.rho)))
    else:
        raise TypeError(f"unsupported reality {type(reality).__name__}")
    revisit = np.cumsum(lag_h * rp)
    return overlap + fresh * fp + revisit


def dynamic_bounds_finite(
    walk: WalkParams,
    reality: StaticWallSpec | BscFieldSpec,
    L: int,
    t: int,
    fano_slack: float = 0.0,
) -> BoundReport:
    """Bounds on ``H(V_t | V^{t-1})`` at finite ``t`` for a stationary field."""
    c = innovation_terms(walk, reality, L, t)
    h_w = binary_entropy(walk.p_w)
    upper = h_w + float(np.mean(c))
    lower = h_w + float(c[-1]) - fano_slack
    return BoundReport(min(max(lower, 0.0), upper), upper, {
        "trajectory_entropy": h_w,
        "innovation_term": float(c[-1]),
        "fano_slack": fano_slack,
        "t": t,
    })


def dynamic_memory_curve(walk: WalkParams, reality: BscFieldSpec | Ar1FieldSpec, L: int, m_max: int) -> np.ndarray:
    """Memory-``M`` upper bound ``H(p_w) + mean(c_1..c_M)`` for ``M = 1..m_max``.

    The dynamic counterpart of :func:`memory_bound_curve`: recurrences with
    lag beyond ``M`` are invisible to an ``M``-frame coder.
    """
    c = innovation_terms(walk, reality, L, m_max)
    return binary_entropy(walk.p_w) + np.cumsum(c) / np.arange(1, m_max + 1)
