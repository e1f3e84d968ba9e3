"""Reality models: a static i.i.d. wall, a binary field with BSC flips, and a
Gaussian AR(1) field.  All fields are i.i.d. across sites.

Two ways to realize a dynamic field are provided.  ``gen_*_window`` builds the
full (time x site) array by repeatedly applying the one-step evolution, which
is what short horizons and the equivalence tests use.  :class:`LazyField`
samples only the (site, time) pairs that are actually observed, drawing each
one from the multi-step transition given the last observation of that site.
Because every site is an independent Markov chain, both give the same joint
law for the observed samples; the lazy form keeps ``t = 10^4`` horizons cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .seeding import STREAM_FIELD, STREAM_WALL, make_rng

PMF_TOL = 1e-12


@dataclass(frozen=True)
class StaticWallSpec:
    pmf: tuple[float, ...]

    def __post_init__(self):
        pmf = np.asarray(self.pmf, dtype=float)
        if pmf.ndim != 1 or pmf.size < 2:
            raise ValueError("pmf needs at least two symbols")
        if np.any(pmf < 0) or abs(pmf.sum() - 1.0) > PMF_TOL:
            raise ValueError(f"invalid pmf (sum={pmf.sum()!r})")
        object.__setattr__(self, "pmf", tuple(float(x) for x in pmf))

    @property
    def alphabet_size(self) -> int:
        return len(self.pmf)

    @property
    def is_uniform(self) -> bool:
        return max(self.pmf) - min(self.pmf) <= PMF_TOL

    @classmethod
    def uniform(cls, m: int) -> "StaticWallSpec":
        return cls(tuple([1.0 / m] * m))

    @classmethod
    def bernoulli(cls, p_x: float) -> "StaticWallSpec":
        return cls((1.0 - p_x, p_x))


@dataclass(frozen=True)
class BscFieldSpec:
    """Binary field: row 0 is Bernoulli(p_x); each step flips each bit w.p. p_i."""

    p_x: float = 0.5
    p_i: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.p_x <= 1.0:
            raise ValueError("p_x must lie in [0, 1]")
        if not 0.0 <= self.p_i <= 0.5:
            raise ValueError("p_i must lie in [0, 0.5]")

    @property
    def stationary(self) -> bool:
        """True when the t=0 marginal is already the chain's stationary law."""
        return self.p_i == 0.0 or self.p_x == 0.5


@dataclass(frozen=True)
class Ar1FieldSpec:
    rho: float

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")

    @property
    def innovation_var(self) -> float:
        return 1.0 - self.rho**2


@dataclass
class FieldWindow:
    """Samples over sites ``n_lo..n_hi`` (inclusive) for times ``0..t``."""

    site_range: tuple[int, int]
    rows: np.ndarray  # shape (t + 1, n_hi - n_lo + 1)

    def __post_init__(self):
        lo, hi = self.site_range
        if hi < lo:
            raise ValueError("empty site range")
        if self.rows.ndim != 2 or self.rows.shape[1] != hi - lo + 1:
            raise ValueError("rows must span exactly the site range")

    @property
    def time_extent(self) -> int:
        return self.rows.shape[0] - 1

    def covers(self, lo: int, hi: int) -> bool:
        return self.site_range[0] <= lo and hi <= self.site_range[1]

    def row(self, time: int) -> np.ndarray:
        # a static wall has a single row reused at every time
        return self.rows[min(time, self.time_extent)]


def walk_window(t: int, L: int) -> tuple[int, int]:
    """Sites any ``t``-step walk can see with blocks of length ``L``."""
    return (-t, t + L - 1)


def _rng(seed, *keys) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return make_rng(int(seed), *keys)


def gen_static_wall(spec: StaticWallSpec, site_range: tuple[int, int], seed) -> FieldWindow:
    lo, hi = site_range
    if hi < lo:
        raise ValueError("empty site range")
    rng = _rng(seed, STREAM_WALL)
    row = rng.choice(spec.alphabet_size, size=hi - lo + 1, p=np.asarray(spec.pmf))
    return FieldWindow((lo, hi), row[None, :].astype(np.int64))


def evolve_bsc(row: np.ndarray, p_i: float, seed) -> np.ndarray:
    """Flip every bit of ``row`` independently with probability ``p_i``."""
    rng = _rng(seed, STREAM_FIELD)
    flips = rng.random(row.shape) < p_i
    return np.bitwise_xor(np.asarray(row, dtype=np.int64), flips.astype(np.int64))


def bsc_equiv(p_i: float, t: int) -> float:
    """Crossover probability of ``t`` cascaded BSC(p_i) channels."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return 0.5 * (1.0 - (1.0 - 2.0 * p_i) ** t)


def evolve_ar1(row: np.ndarray, spec: Ar1FieldSpec, seed) -> np.ndarray:
    """One AR(1) step per site: ``rho * x + N(0, 1 - rho^2)``."""
    rng = _rng(seed, STREAM_FIELD)
    noise = rng.standard_normal(np.shape(row)) * math.sqrt(spec.innovation_var)
    return spec.rho * np.asarray(row, dtype=float) + noise


def gen_bsc_window(spec: BscFieldSpec, site_range: tuple[int, int], t: int, seed) -> FieldWindow:
    """Row 0 is the static wall for the same seed; rows 1..t follow BSC flips."""
    wall = gen_static_wall(StaticWallSpec.bernoulli(spec.p_x), site_range, seed)
    rng = make_rng(int(seed), STREAM_FIELD) if not isinstance(seed, np.random.Generator) else seed
    rows = np.empty((t + 1, wall.rows.shape[1]), dtype=np.int64)
    rows[0] = wall.rows[0]
    for k in range(1, t + 1):
        rows[k] = evolve_bsc(rows[k - 1], spec.p_i, rng)
    return FieldWindow(site_range, rows)


def gen_ar1_window(spec: Ar1FieldSpec, site_range: tuple[int, int], t: int, seed) -> FieldWindow:
    """Stationary N(0, 1) row 0 followed by ``t`` AR(1) steps."""
    lo, hi = site_range
    rng = _rng(seed, STREAM_FIELD)
    rows = np.empty((t + 1, hi - lo + 1))
    rows[0] = rng.standard_normal(hi - lo + 1)
    for k in range(1, t + 1):
        rows[k] = evolve_ar1(rows[k - 1], spec, rng)
    return FieldWindow((lo, hi), rows)


def empirical_entropy(symbols: np.ndarray) -> float:
    """Plug-in entropy estimate (bits) of a sequence of nonnegative integers."""
    counts = np.bincount(np.asarray(symbols).ravel())
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log2(p)).sum())


@dataclass
class LazyField:
    """Sample a dynamic field only where it is observed.

    ``observe(sites, time)`` returns the field at ``sites`` for one time
    instant.  Observation times must be nondecreasing for every site.
    """

    spec: object
    site_range: tuple[int, int]
    rng: np.random.Generator
    _last_time: np.ndarray = field(init=False, repr=False)
    _last_value: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        lo, hi = self.site_range
        n = hi - lo + 1
        self._last_time = np.full(n, -1, dtype=np.int64)
        dtype = float if isinstance(self.spec, Ar1FieldSpec) else np.int64
        self._last_value = np.zeros(n, dtype=dtype)

    def observe(self, sites: np.ndarray, time: int) -> np.ndarray:
        idx = np.asarray(sites, dtype=np.int64) - self.site_range[0]
        last_t = self._last_time[idx]
        if np.any(last_t > time):
            raise ValueError("observation times must be nondecreasing per site")
        fresh = last_t < 0
        gap = np.where(fresh, 0, time - last_t)
        prev = self._last_value[idx]
        spec = self.spec
        if isinstance(spec, Ar1FieldSpec):
            z = self.rng.standard_normal(idx.size)
            decay = spec.rho ** gap
            out = np.where(fresh, z, decay * prev + np.sqrt(1.0 - decay**2) * z)
        elif isinstance(spec, BscFieldSpec):
            u = self.rng.random(idx.size)
            flip_p = 0.5 * (1.0 - (1.0 - 2.0 * spec.p_i) ** gap)
            p1 = spec.p_x * (1.0 - bsc_equiv(spec.p_i, time)) + (1.0 - spec.p_x) * bsc_equiv(spec.p_i, time)
            out = np.where(fresh, (u < p1).astype(np.int64), prev ^ (u < flip_p).astype(np.int64))
        elif isinstance(spec, StaticWallSpec):
            draw = self.rng.choice(spec.alphabet_size, size=idx.size, p=np.asarray(spec.pmf))
            out = np.where(fresh, draw, prev)
        else:
            raise TypeError(f"unsupported field spec {type(spec).__name__}")
        self._last_time[idx] = time
        self._last_value[idx] = out
        return out
