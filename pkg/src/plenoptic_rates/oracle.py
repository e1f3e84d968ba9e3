"""Brute-force ground truth on tiny instances.

The joint law of ``(V_0, ..., V_t)`` is built by summing over all ``2^t``
walk paths.  For a fixed path each frame entry is the field at one
(site, time) cell, and cells at different sites are independent Markov
chains, so the path-conditional pmf factorizes over sites into an initial
marginal times multi-step transition kernels.  Static walls are the special
case of an identity kernel.  Everything is exact up to floating-point
summation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .reality import BscFieldSpec, StaticWallSpec, bsc_equiv
from .walk import WalkParams

DEFAULT_MAX_TERMS = 10**8


class BudgetExceeded(RuntimeError):
    def __init__(self, cost: int, cap: int):
        super().__init__(f"enumeration needs ~{cost:.3g} weighted terms, cap is {cap:.3g}")
        self.cost = cost
        self.cap = cap


@dataclass(frozen=True)
class EnumerationBudget:
    max_terms: int = DEFAULT_MAX_TERMS

    def check(self, cost: int) -> None:
        if cost > self.max_terms:
            raise BudgetExceeded(cost, self.max_terms)


def _chain(reality):
    """Return ``(alphabet_size, marginal(time), kernel(gap))`` for a discrete reality."""
    if isinstance(reality, StaticWallSpec):
        pmf = np.asarray(reality.pmf)
        eye = np.eye(pmf.size)
        return pmf.size, (lambda _t: pmf), (lambda _g: eye)
    if isinstance(reality, BscFieldSpec):
        def marginal(t):
            e = bsc_equiv(reality.p_i, t)
            p1 = reality.p_x * (1 - e) + (1 - reality.p_x) * e
            return np.array([1 - p1, p1])

        def kernel(g):
            e = bsc_equiv(reality.p_i, g)
            return np.array([[1 - e, e], [e, 1 - e]])

        return 2, marginal, kernel
    raise TypeError(f"no discrete enumeration for {type(reality).__name__}")


def _digits(m: int, n_var: int) -> np.ndarray:
    """All ``m^n_var`` symbol tuples, first variable most significant."""
    grid = np.indices((m,) * n_var, dtype=np.int8)
    return grid.reshape(n_var, -1).T


def _path_pmfs(walk: WalkParams, reality, L: int, t: int, budget: EnumerationBudget):
    """Yield ``(increments, P{path}, pmf over frame tuples given the path)``."""
    m, marginal, kernel = _chain(reality)
    n_var = L * (t + 1)
    n_states = m**n_var
    budget.check(n_states * 2**t)
    digits = _digits(m, n_var)
    p, q = walk.p_w, 1.0 - walk.p_w
    for inc in itertools.product((-1, 1), repeat=t):
        n_up = sum(1 for s in inc if s == 1)
        w = p**n_up * q ** (t - n_up)
        if w == 0.0:
            continue
        positions = np.concatenate(([0], np.cumsum(inc)))
        cells: dict[int, list[tuple[int, int]]] = {}
        for i, pos in enumerate(positions.tolist()):
            for j in range(L):
                cells.setdefault(pos + j, []).append((i, i * L + j))
        pmf = np.ones(n_states)
        for obs in cells.values():
            t0, e0 = obs[0]
            pmf *= marginal(t0)[digits[:, e0]]
            for (ta, ea), (tb, eb) in zip(obs, obs[1:]):
                pmf *= kernel(tb - ta)[digits[:, ea], digits[:, eb]]
        yield inc, w, pmf


def _neumaier_add(acc: np.ndarray, comp: np.ndarray, x: np.ndarray) -> None:
    s = acc + x
    big = np.abs(acc) >= np.abs(x)
    comp += np.where(big, (acc - s) + x, (x - s) + acc)
    acc[:] = s


def joint_view_pmf(
    walk: WalkParams, reality, L: int, t: int, budget: EnumerationBudget | None = None
) -> np.ndarray:
    """Exact pmf of ``(V_0..V_t)`` as a flat array (frame 0 most significant)."""
    budget = budget or EnumerationBudget()
    acc = comp = None
    for _inc, w, pmf in _path_pmfs(walk, reality, L, t, budget):
        if acc is None:
            acc, comp = np.zeros_like(pmf), np.zeros_like(pmf)
        _neumaier_add(acc, comp, w * pmf)
    return acc + comp


def _entropy_bits(p: np.ndarray) -> float:
    p = p[p > 0]
    return -math.fsum((p * np.log2(p)).tolist())


@dataclass
class ExactEntropies:
    """``joint[k] = H(V_0..V_k)``; ``conditional[k-1] = H(V_k | V_0..V_{k-1})``."""

    joint: np.ndarray
    conditional: np.ndarray

    @property
    def t(self) -> int:
        return self.conditional.size

    @property
    def last_conditional(self) -> float:
        """``H(V_t | V^{t-1})`` with ``V_0`` known."""
        return float(self.conditional[-1])

    @property
    def block(self) -> float:
        """``H(V^t) = H(V_1..V_t | V_0)``."""
        return float(self.joint[-1] - self.joint[0])


def exact_conditional_entropy(
    walk: WalkParams, reality, L: int, t: int, budget: EnumerationBudget | None = None
) -> ExactEntropies:
    if t < 1:
        raise ValueError("t must be >= 1")
    m = _chain(reality)[0]
    joint_pmf = joint_view_pmf(walk, reality, L, t, budget)
    frame_states = m**L
    joint = np.empty(t + 1)
    for k in range(t + 1):
        marg = joint_pmf.reshape(frame_states ** (k + 1), -1).sum(axis=1)
        joint[k] = _entropy_bits(marg)
    return ExactEntropies(joint, np.diff(joint))


def _step_pmfs(walk, reality, L, budget):
    """Path-conditional-times-prior pmfs of ``(V_0, V_1)`` for steps -1 and +1."""
    budget = budget or EnumerationBudget()
    out = {}
    for inc, w, pmf in _path_pmfs(walk, reality, L, 1, budget):
        out[inc[0]] = w * pmf
    n = (_chain(reality)[0]) ** (2 * L)
    return out.get(-1, np.zeros(n)), out.get(1, np.zeros(n))


def exact_pe(walk: WalkParams, reality, L: int, budget: EnumerationBudget | None = None) -> float:
    """Bayes error of the MAP estimate of the first increment from ``(V_0, V_1)``."""
    down, up = _step_pmfs(walk, reality, L, budget)
    return math.fsum(np.minimum(down, up).tolist())


def map_decisions(walk: WalkParams, reality, L: int, budget: EnumerationBudget | None = None) -> np.ndarray:
    """MAP increment for every ``(v0, v1)`` pair, indexed like :func:`pair_index`.

    Ties go to -1, the more likely increment when ``p_w <= 0.5``.
    """
    down, up = _step_pmfs(walk, reality, L, budget)
    return np.where(up > down, 1, -1).astype(np.int8)


def pair_index(v0, v1, m: int) -> np.ndarray:
    """Flat index of frame pairs (rows of ``v0``/``v1``) in base ``m``."""
    v = np.concatenate([np.atleast_2d(v0), np.atleast_2d(v1)], axis=1).astype(np.int64)
    weights = m ** np.arange(v.shape[1] - 1, -1, -1, dtype=np.int64)
    return v @ weights


def ar1_path_entropy(positions, rho: float, L: int) -> float:
    """``h(V_0..V_t | W = w)`` in bits for a stationary AR(1) field.

    Each site's observations form a Gaussian vector whose covariance is the
    principal submatrix of ``rho^{|i-j|}`` at the observation times.
    """
    cells: dict[int, list[int]] = {}
    for i, pos in enumerate(np.asarray(positions).tolist()):
        for j in range(L):
            cells.setdefault(pos + j, []).append(i)
    total = 0.0
    log2_2pie = math.log2(2 * math.pi * math.e)
    for times in cells.values():
        tt = np.asarray(times, dtype=float)
        cov = rho ** np.abs(tt[:, None] - tt[None, :])
        sign, logdet = np.linalg.slogdet(cov)
        total += 0.5 * (len(times) * log2_2pie + logdet / math.log(2))
    return total


def exact_ar1_conditional_entropy(walk: WalkParams, rho: float, L: int, t: int) -> float:
    """``h(V_1..V_t | V_0, W^t)`` averaged over all ``2^t`` paths."""
    p, q = walk.p_w, 1.0 - walk.p_w
    acc = []
    for inc in itertools.product((-1, 1), repeat=t):
        n_up = sum(1 for s in inc if s == 1)
        w = p**n_up * q ** (t - n_up)
        if w == 0.0:
            continue
        pos = np.concatenate(([0], np.cumsum(inc)))
        acc.append(w * ar1_path_entropy(pos, rho, L))
    h_v0 = L * 0.5 * math.log2(2 * math.pi * math.e)
    return math.fsum(acc) - h_v0
