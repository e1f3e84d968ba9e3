"""Operational coder: trajectory side information + closed-loop DPCM + ECSQ.

Every frame sample is predicted from earlier reconstructions at the same
wall site.  With ``memory="one_frame"`` only the previous frame is available
(the ``L - 1`` overlapping sites are predicted as ``rho * xhat`` and the
entering site as the stationary mean 0).  With ``memory="infinite"`` a
site-indexed store keeps the latest reconstruction of every site ever seen,
and a site last reconstructed ``g`` frames ago is predicted as
``rho^g * xhat``.  Residuals go through one entropy-constrained scalar
quantizer; the rate is the empirical entropy of its indices plus the
empirical entropy of the transmitted increments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .detect import Z95, mmse_detect
from .reality import Ar1FieldSpec
from .seeding import STREAM_CODEC, make_rng
from .view import ViewSequence, ViewSpec, extract_dynamic
from .walk import WalkParams, sample_path

MEMORY_MODES = ("one_frame", "infinite")
TRAJECTORY_MODES = ("genie", "estimated")
SNR_SATURATION_DB = 200.0


def snr(original, reconstructed) -> float:
    """``10 log10(sum x^2 / sum (x - xhat)^2)``; exact reconstructions saturate."""
    x = np.asarray(original, dtype=float)
    xh = np.asarray(reconstructed, dtype=float)
    if x.shape != xh.shape:
        raise ValueError("length mismatch")
    err = float(np.sum((x - xh) ** 2))
    sig = float(np.sum(x**2))
    if err == 0.0:
        return SNR_SATURATION_DB
    if sig == 0.0:
        return -SNR_SATURATION_DB
    return min(SNR_SATURATION_DB, 10.0 * math.log10(sig / err))


def _entropy_of_counts(counts) -> float:
    c = np.asarray(counts, dtype=float)
    c = c[c > 0]
    p = c / c.sum()
    return float(-(p * np.log2(p)).sum())


# --- entropy-constrained scalar quantizer -----------------------------------


@dataclass
class ECSQ:
    """Codebook ``levels`` with ideal code lengths ``lengths`` (bits).

    A sample ``x`` maps to ``argmin_j (x - levels[j])^2 + lam * lengths[j]``.
    The costs are lines in ``x`` after dropping ``x^2``, so the cells are the
    pieces of their lower envelope and quantization is a binary search.
    """

    levels: np.ndarray
    lengths: np.ndarray
    lam: float
    _thresholds: np.ndarray = field(init=False, repr=False)
    _cell_index: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        order = np.argsort(self.levels, kind="stable")
        self.levels = np.asarray(self.levels, dtype=float)[order]
        self.lengths = np.asarray(self.lengths, dtype=float)[order]
        self._build_envelope()

    @property
    def size(self) -> int:
        return self.levels.size

    @property
    def pmf(self) -> np.ndarray:
        return 2.0 ** (-self.lengths)

    def _build_envelope(self):
        # cost_j(x) - x^2 = c_j - 2 y_j x, slopes decreasing in j
        y = self.levels
        c = y**2 + self.lam * self.lengths
        hull: list[int] = []
        starts: list[float] = []
        for j in range(y.size):
            if hull and y[j] == y[hull[-1]]:
                if c[j] >= c[hull[-1]]:
                    continue
                hull.pop()
                starts.pop()
            while hull:
                k = hull[-1]
                x_cross = (c[j] - c[k]) / (2.0 * (y[j] - y[k]))
                if x_cross <= starts[-1]:
                    hull.pop()
                    starts.pop()
                else:
                    break
            if hull:
                k = hull[-1]
                starts.append((c[j] - c[k]) / (2.0 * (y[j] - y[k])))
            else:
                starts.append(-math.inf)
            hull.append(j)
        self._cell_index = np.asarray(hull, dtype=np.int64)
        self._thresholds = np.asarray(starts[1:], dtype=float)

    def quantize(self, x) -> np.ndarray:
        return self._cell_index[np.searchsorted(self._thresholds, x, side="right")]

    def quantize_bruteforce(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        cost = (x[..., None] - self.levels) ** 2 + self.lam * self.lengths
        return np.argmin(cost, axis=-1)

    def reconstruct(self, idx) -> np.ndarray:
        return self.levels[idx]

    def objective(self, x) -> tuple[float, float, float]:
        """``(distortion, index entropy in bits, D + lam * entropy)`` on samples ``x``."""
        idx = self.quantize(x)
        d = float(np.mean((x - self.levels[idx]) ** 2))
        r = _entropy_of_counts(np.bincount(idx, minlength=self.size))
        return d, r, d + self.lam * r


def high_rate_step(lam: float) -> float:
    """Uniform step minimizing ``D + lam R`` in the fine-quantization regime."""
    return math.sqrt(6.0 * lam / math.log(2.0))


def design_ecsq(samples, lam: float, max_iter: int = 300, rel_tol: float = 1e-9) -> ECSQ:
    """Iterative ECSQ design on training samples.

    Alternates entropy-biased nearest-cell assignment with centroid and
    code-length updates; cells that lose all their samples are deleted.
    The initial codebook is a symmetric uniform grid at half the high-rate
    optimal step.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    if x.size < 2:
        raise ValueError("need training samples")
    step = 0.5 * high_rate_step(lam)
    span = max(abs(x[0]), abs(x[-1]))
    n_half = int(min(math.ceil(span / step), 4096))
    levels = step * np.arange(-n_half, n_half + 1)
    lengths = np.full(levels.size, math.log2(levels.size))
    prev = math.inf
    for _ in range(max_iter):
        q = ECSQ(levels, lengths, lam)
        idx = q.quantize(x)
        counts = np.bincount(idx, minlength=q.size)
        keep = counts > 0
        sums = np.bincount(idx, weights=x, minlength=q.size)
        levels = sums[keep] / counts[keep]
        p = counts[keep] / x.size
        lengths = -np.log2(p)
        d = float(np.mean((x - levels[np.cumsum(keep)[idx] - 1]) ** 2))
        obj = d + lam * float(np.sum(p * lengths))
        if prev - obj <= rel_tol * max(obj, 1e-300):
            break
        prev = obj
    return ECSQ(levels, lengths, lam)


# --- DPCM --------------------------------------------------------------------


@dataclass(frozen=True)
class CodecConfig:
    walk: WalkParams
    field: Ar1FieldSpec
    L: int = 8
    horizon: int = 10_000
    memory: str = "infinite"
    lam: float = 1e-3
    trajectory: str = "genie"
    seed: int = 0

    def __post_init__(self):
        if self.horizon < 2:
            raise ValueError("horizon must be >= 2")
        if self.memory not in MEMORY_MODES:
            raise ValueError(f"memory must be one of {MEMORY_MODES}")
        if self.trajectory not in TRAJECTORY_MODES:
            raise ValueError(f"trajectory must be one of {TRAJECTORY_MODES}")
        if self.lam <= 0 or self.L < 2:
            raise ValueError("need lam > 0 and L >= 2")


@dataclass
class Bitstream:
    """Everything the decoder receives (rates are ideal code lengths)."""

    increments: np.ndarray  # (n, t) transmitted trajectory increments
    indices: np.ndarray  # (n, t + 1, L) quantizer indices
    quantizer: ECSQ
    rho: float
    memory: str


@dataclass
class CodecRun:
    measured_rate: np.ndarray  # bits per scalar, per trial
    side_info_rate: np.ndarray  # bits per scalar, per trial
    snr_db: np.ndarray  # per trial
    mse: np.ndarray  # per trial
    frame_mse: np.ndarray  # (t + 1,) averaged over trials
    residual_var: float
    trajectory_errors: int = 0

    @property
    def rate(self) -> float:
        return float(np.mean(self.measured_rate))

    @property
    def snr(self) -> float:
        """SNR of the trial-averaged MSE (unit-variance source)."""
        return -10.0 * math.log10(float(np.mean(self.mse)))

    @property
    def snr_ci95(self) -> float:
        n = self.snr_db.size
        return 0.0 if n < 2 else Z95 * float(np.std(self.snr_db, ddof=1)) / math.sqrt(n)


def _positions(increments: np.ndarray) -> np.ndarray:
    n = increments.shape[0]
    return np.concatenate([np.zeros((n, 1), np.int64), np.cumsum(increments, axis=1)], axis=1)


class _Predictor:
    """Site-indexed reconstruction store shared by encoder and decoder."""

    def __init__(self, n: int, t: int, L: int, rho: float, memory: str):
        self.lo = -t
        width = 2 * t + L
        self.val = np.zeros((n, width))
        self.time = np.full((n, width), -1, dtype=np.int64)
        self.rho = rho
        self.memory = memory
        self.rows = np.arange(n)[:, None]
        self.offs = np.arange(L)[None, :]

    def predict(self, pos: np.ndarray, i: int):
        cols = pos[:, None] + self.offs - self.lo
        last_t = self.time[self.rows, cols]
        last_v = self.val[self.rows, cols]
        if self.memory == "one_frame":
            pred = np.where(last_t == i - 1, self.rho * last_v, 0.0)
        else:
            gap = np.where(last_t >= 0, i - last_t, 0)
            pred = np.where(last_t >= 0, self.rho**gap * last_v, 0.0)
        return pred, cols

    def store(self, cols, i: int, xhat):
        self.val[self.rows, cols] = xhat
        self.time[self.rows, cols] = i


def dpcm_run(frames: np.ndarray, increments: np.ndarray, quantize, levels, rho: float, memory: str):
    """Closed-loop DPCM over a batch: ``frames`` (n, t+1, L), ``increments`` (n, t).

    ``quantize`` maps residuals to indices and ``levels`` maps indices back.
    Returns ``(indices, reconstructions, residuals)``.
    """
    n, t1, L = frames.shape
    pos = _positions(increments)
    pred_state = _Predictor(n, t1 - 1, L, rho, memory)
    idx_all = np.empty((n, t1, L), dtype=np.int64)
    rec = np.empty_like(frames, dtype=float)
    res_all = np.empty_like(frames, dtype=float)
    for i in range(t1):
        pred, cols = pred_state.predict(pos[:, i], i)
        res = frames[:, i, :] - pred
        idx = quantize(res)
        xhat = pred + levels[idx]
        pred_state.store(cols, i, xhat)
        idx_all[:, i, :] = idx
        rec[:, i, :] = xhat
        res_all[:, i, :] = res
    return idx_all, rec, res_all


def dpcm_decode(bits: Bitstream) -> np.ndarray:
    """Rebuild reconstructions from indices and side information alone."""
    n, t1, L = bits.indices.shape
    pos = _positions(bits.increments)
    pred_state = _Predictor(n, t1 - 1, L, bits.rho, bits.memory)
    rec = np.empty((n, t1, L))
    levels = bits.quantizer.levels
    for i in range(t1):
        pred, cols = pred_state.predict(pos[:, i], i)
        xhat = pred + levels[bits.indices[:, i, :]]
        pred_state.store(cols, i, xhat)
        rec[:, i, :] = xhat
    return rec


def estimate_increments(frames: np.ndarray, rho: float) -> np.ndarray:
    """Encoder-side trajectory estimate from consecutive original frames."""
    n, t1, L = frames.shape
    prev = frames[:, :-1, :].reshape(-1, L)
    cur = frames[:, 1:, :].reshape(-1, L)
    return mmse_detect(prev, cur, rho).reshape(n, t1 - 1).astype(np.int64)


def _side_info_rate(increments: np.ndarray, L: int) -> np.ndarray:
    """Empirical increment entropy per trial, spread over the ``L`` samples of a frame."""
    ups = np.count_nonzero(increments == 1, axis=1)
    rates = np.array([_entropy_of_counts([u, increments.shape[1] - u]) for u in ups])
    return rates / L


def dpcm_encode_batch(
    frames: np.ndarray, true_increments: np.ndarray, config: CodecConfig, quantizer: ECSQ
) -> tuple[CodecRun, Bitstream]:
    rho = config.field.rho
    if config.trajectory == "genie":
        sent = np.asarray(true_increments, dtype=np.int64)
    else:
        sent = estimate_increments(frames, rho)
    idx, rec, res = dpcm_run(frames, sent, quantizer.quantize, quantizer.levels, rho, config.memory)
    n, t1, L = frames.shape
    index_rate = np.array([
        _entropy_of_counts(np.bincount(idx[k].ravel(), minlength=quantizer.size)) for k in range(n)
    ])
    side = _side_info_rate(sent, L)
    err = (frames - rec) ** 2
    mse = err.reshape(n, -1).mean(axis=1)
    snr_db = np.array([snr(frames[k], rec[k]) for k in range(n)])
    run = CodecRun(
        measured_rate=index_rate + side,
        side_info_rate=side,
        snr_db=snr_db,
        mse=mse,
        frame_mse=err.mean(axis=(0, 2)),
        residual_var=float(np.mean(res**2)),
        trajectory_errors=int(np.count_nonzero(sent != true_increments)),
    )
    return run, Bitstream(sent, idx, quantizer, rho, config.memory)


def dpcm_encode(view: ViewSequence, config: CodecConfig, quantizer: ECSQ | None = None):
    """Code one view sequence; trains a quantizer on a calibration run if none is given."""
    if quantizer is None:
        quantizer = train_quantizer(config)
    frames = np.asarray(view.frames, dtype=float)[None]
    inc = np.asarray(view.path.increments, dtype=np.int64)[None]
    return dpcm_encode_batch(frames, inc, config, quantizer)


def simulate_views(config: CodecConfig, n_trials: int, seed: int, horizon: int | None = None):
    """Independent AR(1) view sequences stacked as ``(frames, increments)``."""
    t = config.horizon if horizon is None else horizon
    spec = ViewSpec(config.L)
    frames, incs = [], []
    for k in range(n_trials):
        trial_seed = int(make_rng(seed, STREAM_CODEC, k).integers(2**62))
        path = sample_path(config.walk, t, trial_seed)
        view = extract_dynamic(config.field, path, spec, trial_seed, method="lazy")
        frames.append(view.frames)
        incs.append(path.increments)
    return np.stack(frames).astype(float), np.stack(incs).astype(np.int64)


def train_quantizer(
    config: CodecConfig, calib_trials: int = 2, calib_horizon: int = 2000, passes: int = 2, max_train: int = 200_000
) -> ECSQ:
    """Fit the ECSQ to residuals of a closed-loop calibration run.

    The first pass uses a uniform quantizer at the high-rate step; later
    passes re-run the loop with the freshly designed ECSQ and refit.
    Calibration views use a seed stream disjoint from the measured trials.
    """
    frames, incs = simulate_views(config, calib_trials, config.seed + 1_000_003, calib_horizon)
    if config.trajectory == "estimated":
        incs = estimate_increments(frames, config.field.rho)
    step = high_rate_step(config.lam)
    grid = step * np.arange(-(1 << 20), (1 << 20) + 1)

    def uniform_q(r):
        return np.rint(r / step).astype(np.int64) + (1 << 20)

    quantize, levels = uniform_q, grid
    q = None
    for _ in range(passes):
        _, _, res = dpcm_run(frames, incs, quantize, levels, config.field.rho, config.memory)
        train = res.ravel()
        if train.size > max_train:
            train = train[:: int(math.ceil(train.size / max_train))]
        q = design_ecsq(train, config.lam)
        quantize, levels = q.quantize, q.levels
    return q


@dataclass
class SweepPoint:
    lam: float
    memory: str
    rate: float
    snr_db: float
    snr_ci95: float
    mse: float
    side_info_rate: float
    residual_var: float
    trajectory_errors: int
    analytic_rate: float
    analytic_valid: bool


def run_rd_sweep(
    walk: WalkParams,
    field_spec: Ar1FieldSpec,
    L: int,
    lams,
    memories=MEMORY_MODES,
    trials: int = 20,
    horizon: int = 10_000,
    trajectory: str = "genie",
    seed: int = 0,
    views=None,
) -> list[SweepPoint]:
    """Operational (rate, SNR) points for every (memory, lambda) pair.

    All points share the same simulated views.  Each point carries the
    analytic upper bound evaluated at its measured distortion.
    """
    from .rd import slb_ar1_upper

    if views is None:
        views = simulate_views(CodecConfig(walk, field_spec, L, horizon, seed=seed), trials, seed)
    frames, incs = views
    out = []
    for memory in memories:
        for lam in lams:
            cfg = CodecConfig(walk, field_spec, L, horizon, memory, float(lam), trajectory, seed)
            q = train_quantizer(cfg)
            run, _ = dpcm_encode_batch(frames, incs, cfg, q)
            mse = float(np.mean(run.mse))
            bound = slb_ar1_upper(walk, field_spec, L, mse)
            out.append(SweepPoint(
                lam=float(lam), memory=memory, rate=run.rate, snr_db=run.snr, snr_ci95=run.snr_ci95,
                mse=mse, side_info_rate=float(np.mean(run.side_info_rate)),
                residual_var=run.residual_var, trajectory_errors=run.trajectory_errors,
                analytic_rate=bound.rate, analytic_valid=bound.valid,
            ))
    return out


def snr_at_rate(points: list[SweepPoint], memory: str, rates) -> np.ndarray:
    """Linear interpolation of an operational SNR-vs-rate curve.

    Dominated points (higher rate, no better SNR) are dropped first, since a
    coder can always fall back to the cheaper operating point.
    """
    pts = sorted((p for p in points if p.memory == memory), key=lambda p: p.rate)
    frontier = []
    for p in pts:
        if not frontier or p.snr_db > frontier[-1].snr_db:
            frontier.append(p)
    r = np.array([p.rate for p in frontier])
    s = np.array([p.snr_db for p in frontier])
    return np.interp(rates, r, s, left=np.nan, right=np.nan)


def memory_gain_db(points: list[SweepPoint], rates) -> np.ndarray:
    """SNR advantage of infinite over one-frame memory at matched rates."""
    return snr_at_rate(points, "infinite", rates) - snr_at_rate(points, "one_frame", rates)
