"""Trajectory-increment detection and Monte-Carlo estimation of its error rate.

Detectors see two consecutive frames and return the increment (+1 or -1).
Ties go to -1, the prior mode whenever ``p_w <= 0.5``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .entropy import binary_entropy
from .oracle import map_decisions, pair_index
from .reality import Ar1FieldSpec, BscFieldSpec, StaticWallSpec
from .seeding import STREAM_DETECT, block_ranges, make_rng
from .walk import WalkParams

DETECTORS = ("hamming", "mmse", "map_oracle")
Z95 = 1.959963984540054


@dataclass(frozen=True)
class DetectionModel:
    walk: WalkParams
    reality: StaticWallSpec | BscFieldSpec | Ar1FieldSpec
    L: int


@dataclass
class DetectorReport:
    p_e_hat: float
    trials: int
    errors: int
    ci95_halfwidth: float
    detector: str

    @property
    def upper95(self) -> float:
        return min(1.0, self.p_e_hat + self.ci95_halfwidth)


def _overlaps(v_prev, v_cur):
    v_prev = np.atleast_2d(v_prev)
    v_cur = np.atleast_2d(v_cur)
    # +1: the view moved right, so v_cur[:-1] re-reads v_prev[1:]
    return (v_prev[:, 1:], v_cur[:, :-1]), (v_prev[:, :-1], v_cur[:, 1:])


def _decide(cost_up, cost_down, scalar):
    out = np.where(cost_up < cost_down, 1, -1).astype(np.int8)
    return int(out[0]) if scalar else out


def hamming_detect(v_prev, v_cur):
    """Pick the shift whose ``L-1``-sample overlap has fewer mismatches."""
    scalar = np.ndim(v_prev) == 1
    (a_up, b_up), (a_dn, b_dn) = _overlaps(v_prev, v_cur)
    return _decide((a_up != b_up).sum(axis=1), (a_dn != b_dn).sum(axis=1), scalar)


def mmse_detect(v_prev, v_cur, rho: float):
    """Pick the shift with the smaller AR(1) one-step prediction residual energy."""
    scalar = np.ndim(v_prev) == 1
    (a_up, b_up), (a_dn, b_dn) = _overlaps(v_prev, v_cur)
    e_up = ((b_up - rho * a_up) ** 2).sum(axis=1)
    e_dn = ((b_dn - rho * a_dn) ** 2).sum(axis=1)
    return _decide(e_up, e_dn, scalar)


def fano_term(p_e: float) -> float:
    """Fano slack for a binary increment: ``H(P_e)``."""
    if not 0.0 <= p_e <= 1.0:
        raise ValueError("p_e must lie in [0, 1]")
    return binary_entropy(p_e)


def binomial_ci(errors: int, trials: int) -> float:
    """Normal-approximation 95% half-width; rule of three when no errors occur."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if errors == 0:
        return 3.0 / trials
    p = errors / trials
    return Z95 * math.sqrt(p * (1.0 - p) / trials)


def simulate_pairs(model: DetectionModel, n: int, rng: np.random.Generator, step: int = 1):
    """Draw ``n`` independent ``(V_{step-1}, V_step, increment)`` triples.

    The field is started in its t=0 law, evolved over the window the walk
    can reach, and read at the walk positions; ``step > 1`` exercises the
    stationarity of the pair law.
    """
    L = model.L
    p = model.walk.p_w
    inc = np.where(rng.random((n, step)) < p, 1, -1)
    pos = np.concatenate([np.zeros((n, 1), np.int64), np.cumsum(inc, axis=1)], axis=1)
    lo = -step
    width = 2 * step + L
    reality = model.reality
    if isinstance(reality, StaticWallSpec):
        wall = rng.choice(reality.alphabet_size, size=(n, width), p=np.asarray(reality.pmf))
        prev_row = cur_row = wall
    elif isinstance(reality, BscFieldSpec):
        row = (rng.random((n, width)) < reality.p_x).astype(np.int8)
        for _ in range(step - 1):
            row ^= (rng.random((n, width)) < reality.p_i).astype(np.int8)
        prev_row = row
        cur_row = row ^ (rng.random((n, width)) < reality.p_i).astype(np.int8)
    elif isinstance(reality, Ar1FieldSpec):
        rho, sd = reality.rho, math.sqrt(reality.innovation_var)
        row = rng.standard_normal((n, width))
        for _ in range(step - 1):
            row = rho * row + sd * rng.standard_normal((n, width))
        prev_row = row
        cur_row = rho * row + sd * rng.standard_normal((n, width))
    else:
        raise TypeError(f"unsupported reality {type(reality).__name__}")
    rows = np.arange(n)[:, None]
    offs = np.arange(L)[None, :]
    v_prev = prev_row[rows, pos[:, step - 1 : step] - lo + offs]
    v_cur = cur_row[rows, pos[:, step : step + 1] - lo + offs]
    return v_prev, v_cur, inc[:, -1].astype(np.int8)


def make_detector(model: DetectionModel, detector: str):
    if detector == "hamming":
        return hamming_detect
    if detector == "mmse":
        if not isinstance(model.reality, Ar1FieldSpec):
            raise ValueError("mmse detector needs an AR(1) field")
        rho = model.reality.rho
        return lambda a, b: mmse_detect(a, b, rho)
    if detector == "map_oracle":
        table = map_decisions(model.walk, model.reality, model.L)
        m = 2 if isinstance(model.reality, BscFieldSpec) else model.reality.alphabet_size
        return lambda a, b: table[pair_index(a, b, m)]
    raise ValueError(f"unknown detector {detector!r}; choose from {DETECTORS}")


def estimate_pe(
    model: DetectionModel,
    detector: str,
    trials: int,
    seed: int,
    step: int = 1,
    block: int = 250_000,
) -> DetectorReport:
    """Monte-Carlo error rate of ``detector``; blocks are seeded by index."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if step < 1:
        raise ValueError("step must be >= 1")
    decide = make_detector(model, detector)
    errors = 0
    for b, lo, hi in block_ranges(trials, block):
        rng = make_rng(seed, STREAM_DETECT, b)
        v_prev, v_cur, inc = simulate_pairs(model, hi - lo, rng, step)
        errors += int(np.count_nonzero(decide(v_prev, v_cur) != inc))
    return DetectorReport(errors / trials, trials, errors, binomial_ci(errors, trials), detector)
