"""Bernoulli random walk: sampling and exact return/recurrence analytics.

Conventions
-----------
``return_probs(params, n)[i-1]`` is the probability that the walk comes back
to its starting site for the first time at step ``i``.  Odd steps are
impossible, and ``P{first return at 2k} = 2 C_{k-1} (p q)^k`` with
``q = 1 - p``.  The probability that step ``t`` lands on an already visited
site equals the probability of having returned to the origin by step ``t``
(time reversal of i.i.d. increments), so the recurrence probability is the
running sum of the return probabilities.  Their total mass is ``2 p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import gammaln

from .seeding import STREAM_WALK, block_ranges, make_rng

# Python integers never wrap around; the cap only bounds the cost (C_k has
# roughly 0.6 k decimal digits).
MAX_CATALAN_INDEX = 20_000

# Hard ceiling on the number of even-step return terms any series may use.
MAX_SERIES_PAIRS = 1 << 24


@dataclass(frozen=True)
class WalkParams:
    """Walk with ``P{increment = +1} = p_w``; ``p_w <= 0.5`` by convention."""

    p_w: float

    def __post_init__(self):
        if not (0.0 <= self.p_w <= 0.5) or math.isnan(self.p_w):
            raise ValueError(f"p_w must lie in [0, 0.5], got {self.p_w}")

    @property
    def q_w(self) -> float:
        return 1.0 - self.p_w


@dataclass(frozen=True)
class WalkPath:
    positions: np.ndarray
    increments: np.ndarray
    new_site_flags: np.ndarray

    def __post_init__(self):
        pos, inc, flags = self.positions, self.increments, self.new_site_flags
        if pos.ndim != 1 or pos.size < 1 or pos[0] != 0:
            raise ValueError("positions must be a 1-D sequence starting at 0")
        if inc.shape != (pos.size - 1,) or flags.shape != inc.shape:
            raise ValueError("increments/new_site_flags must have length t")
        if not np.array_equal(np.diff(pos), inc) or np.any(np.abs(inc) != 1):
            raise ValueError("increments must be +-1 steps between positions")

    @property
    def t(self) -> int:
        return int(self.increments.size)

    @property
    def new_site_count(self) -> int:
        return int(self.new_site_flags.sum())

    @classmethod
    def from_increments(cls, increments) -> "WalkPath":
        inc = np.asarray(increments, dtype=np.int64)
        pos = np.concatenate(([0], np.cumsum(inc)))
        return cls(pos, inc, new_site_flags(pos))

    @classmethod
    def from_positions(cls, positions) -> "WalkPath":
        pos = np.asarray(positions, dtype=np.int64)
        return cls(pos, np.diff(pos), new_site_flags(pos))


class StepClass(NamedTuple):
    """Outcome of :func:`classify_step`: a new site, or a revisit after step ``s``."""

    new_site: bool
    s: int | None = None


@dataclass(frozen=True)
class RecurrenceTable:
    p_w: float
    horizon: int
    return_probs: np.ndarray  # index i-1 holds P{first return at step i}
    recurrence_probs: np.ndarray
    catalan: tuple[int, ...]


def new_site_flags(positions: np.ndarray) -> np.ndarray:
    """Flags (length t) marking steps whose position was never occupied before.

    Works on a single path (1-D) or a batch of paths (rows).
    """
    pos = np.asarray(positions)
    run_max = np.maximum.accumulate(pos, axis=-1)[..., :-1]
    run_min = np.minimum.accumulate(pos, axis=-1)[..., :-1]
    cur = pos[..., 1:]
    return (cur > run_max) | (cur < run_min)


def catalan(k: int) -> int:
    """Exact Catalan number ``C_k = binom(2k, k) / (k + 1)``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k > MAX_CATALAN_INDEX:
        raise OverflowError(f"catalan({k}) exceeds supported index {MAX_CATALAN_INDEX}")
    return math.comb(2 * k, k) // (k + 1)


def _even_return_probs(p_w: float, k: np.ndarray) -> np.ndarray:
    """``P{first return at step 2k}`` for an integer array ``k >= 1`` (log domain)."""
    if p_w == 0.0:
        return np.zeros(k.shape)
    kf = k.astype(np.float64)
    # log C_{k-1} = log (2k-2)! - log (k-1)! - log k!
    log_c = gammaln(2 * kf - 1) - gammaln(kf) - gammaln(kf + 1)
    return np.exp(math.log(2.0) + log_c + kf * math.log(p_w * (1.0 - p_w)))


def return_prob(params: WalkParams, t: int) -> float:
    """Probability of a first return to the starting site at step ``t``."""
    if t < 1:
        raise ValueError("t must be >= 1")
    if t % 2:
        return 0.0
    k = t // 2
    if k <= 60:
        pq = params.p_w * params.q_w
        return 2.0 * catalan(k - 1) * pq**k
    return float(_even_return_probs(params.p_w, np.array([k]))[0])


def return_probs(params: WalkParams, t_max: int) -> np.ndarray:
    """Vector of ``P{first return at step i}`` for ``i = 1..t_max``."""
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    out = np.zeros(t_max)
    k = np.arange(1, t_max // 2 + 1)
    out[1::2] = _even_return_probs(params.p_w, k)
    return out


def recurrence_prob(params: WalkParams, t: int) -> float:
    """Probability that step ``t`` lands on a previously visited site."""
    if t < 1:
        raise ValueError("t must be >= 1")
    return math.fsum(return_probs(params, t))


def recurrence_probs(params: WalkParams, t_max: int) -> np.ndarray:
    return np.cumsum(return_probs(params, t_max))


def first_passage_probs(params: WalkParams, t_max: int) -> np.ndarray:
    """``1 - P{R^i}`` for ``i = 1..t_max``: probability that step ``i`` is a new site."""
    return 1.0 - recurrence_probs(params, t_max)


def recurrence_table(params: WalkParams, horizon: int) -> RecurrenceTable:
    rp = return_probs(params, horizon)
    n_cat = (horizon + 1) // 2 + 1
    return RecurrenceTable(
        p_w=params.p_w,
        horizon=horizon,
        return_probs=rp,
        recurrence_probs=np.cumsum(rp),
        catalan=tuple(catalan(k) for k in range(n_cat)),
    )


@dataclass(frozen=True)
class SeriesResult:
    """Truncated sum over even-step returns with a certified tail bound."""

    value: float
    tail_bound: float
    pairs: int


def return_weighted_sum(
    params: WalkParams,
    weight: Callable[[np.ndarray], np.ndarray],
    tol: float = 1e-12,
    min_pairs: int = 64,
    max_pairs: int = MAX_SERIES_PAIRS,
) -> SeriesResult:
    """Evaluate ``sum_k weight(k) P{first return at 2k}`` adaptively.

    ``weight`` must be nonnegative and nonincreasing in ``k``.  After ``K``
    terms the remainder is at most ``weight(K+1) * (2 p_w - sum_{k<=K} P_k)``,
    since the first-return probabilities sum to ``2 p_w``.  ``K`` doubles
    until that bound drops below ``tol`` or ``max_pairs`` is reached.
    """
    p = params.p_w
    if p == 0.0:
        return SeriesResult(0.0, 0.0, 0)
    n = min_pairs
    while True:
        k = np.arange(1, n + 2)
        probs = _even_return_probs(p, k[:-1])
        w = weight(k)
        terms = w[:-1] * probs
        value = math.fsum(terms)
        # rounding floor keeps the bound honest when the remaining mass cancels
        remaining = max(0.0, 2.0 * p - math.fsum(probs)) + 1e-15
        tail = abs(float(w[-1])) * remaining
        if tail <= tol or n >= max_pairs:
            return SeriesResult(value, tail, n)
        n = min(2 * n, max_pairs)


def sample_path(params: WalkParams, t: int, seed: int) -> WalkPath:
    """Seeded walk of ``t`` steps; the same seed always gives the same path."""
    if t < 1:
        raise ValueError("t must be >= 1")
    rng = make_rng(seed, STREAM_WALK)
    return WalkPath.from_increments(sample_increments(params, (t,), rng))


def sample_increments(params: WalkParams, shape, rng: np.random.Generator) -> np.ndarray:
    # float32 uniforms halve the generation cost; p_w is then resolved to 2^-24
    up = rng.random(shape, dtype=np.float32) < np.float32(params.p_w)
    return up.astype(np.int8) * np.int8(2) - np.int8(1)


def classify_step(path: WalkPath, i: int) -> StepClass:
    """New site at step ``i``, or the most recent earlier step at the same site."""
    if not 1 <= i <= path.t:
        raise IndexError(f"step {i} outside 1..{path.t}")
    if path.new_site_flags[i - 1]:
        return StepClass(True)
    earlier = np.flatnonzero(path.positions[:i] == path.positions[i])
    return StepClass(False, int(earlier[-1]))


def last_visit_times(positions: np.ndarray) -> np.ndarray:
    """For each step ``i``, the most recent ``s < i`` with the same position, else -1."""
    last: dict[int, int] = {}
    out = np.full(len(positions), -1, dtype=np.int64)
    for i, w in enumerate(np.asarray(positions).tolist()):
        out[i] = last.get(w, -1)
        last[w] = i
    return out


def simulate_first_passage(
    params: WalkParams, t: int, n_paths: int, seed: int, block: int = 500
) -> tuple[float, float]:
    """Monte-Carlo frequency that step ``t`` is a new site, and its standard error."""
    hits = 0
    for b, lo, hi in block_ranges(n_paths, block):
        rng = make_rng(seed, STREAM_WALK, b)
        inc = sample_increments(params, (hi - lo, t), rng)
        pos = np.cumsum(inc, axis=1, dtype=np.int32)
        prev = pos[:, :-1]
        last = pos[:, -1]
        # W_0 = 0 belongs to the history
        pmax = np.maximum(prev.max(axis=1), 0) if t > 1 else np.zeros(hi - lo, np.int32)
        pmin = np.minimum(prev.min(axis=1), 0) if t > 1 else np.zeros(hi - lo, np.int32)
        hits += int(np.count_nonzero((last > pmax) | (last < pmin)))
    freq = hits / n_paths
    return freq, math.sqrt(max(freq * (1 - freq), 1e-300) / n_paths)


def simulate_returns(
    params: WalkParams, t_max: int, n_paths: int, seed: int, block: int = 20_000
) -> np.ndarray:
    """Monte-Carlo counts of first returns to the origin at each step ``1..t_max``."""
    counts = np.zeros(t_max, dtype=np.int64)
    for b, lo, hi in block_ranges(n_paths, block):
        rng = make_rng(seed, STREAM_WALK, b)
        pos = np.cumsum(sample_increments(params, (hi - lo, t_max), rng), axis=1)
        at_origin = pos == 0
        has = at_origin.any(axis=1)
        first = np.argmax(at_origin, axis=1)
        counts += np.bincount(first[has], minlength=t_max)
    return counts


def simulate_recurrence(
    params: WalkParams, t: int, n_paths: int, seed: int, block: int = 20_000
) -> int:
    """Monte-Carlo count of paths whose step ``t`` revisits any earlier site."""
    hits = 0
    for b, lo, hi in block_ranges(n_paths, block):
        rng = make_rng(seed, STREAM_WALK, b)
        inc = sample_increments(params, (hi - lo, t), rng)
        pos = np.concatenate([np.zeros((hi - lo, 1), np.int64), np.cumsum(inc, axis=1)], axis=1)
        hits += int(np.count_nonzero(~new_site_flags(pos)[:, -1]))
    return hits
