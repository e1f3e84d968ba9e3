"""Camera views: blocks of ``L`` consecutive wall samples read at walk positions."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .reality import (
    Ar1FieldSpec,
    BscFieldSpec,
    FieldWindow,
    LazyField,
    StaticWallSpec,
    gen_ar1_window,
    gen_bsc_window,
    walk_window,
)
from .seeding import STREAM_FIELD, make_rng
from .walk import WalkPath

# Above this many (time x site) cells extract_dynamic switches to lazy sampling.
DENSE_CELL_LIMIT = 4_000_000


@dataclass(frozen=True)
class ViewSpec:
    block_length: int

    def __post_init__(self):
        if self.block_length < 2:
            raise ValueError("block length L must be at least 2")


@dataclass
class ViewSequence:
    """Frames ``V_0..V_t``; frame 0 is treated as known to the decoder."""

    frames: np.ndarray  # shape (t + 1, L)
    path: WalkPath
    spec: ViewSpec
    reality: str
    known_frames: int = 1

    @property
    def t(self) -> int:
        return self.frames.shape[0] - 1

    @property
    def L(self) -> int:
        return self.spec.block_length


def frame_sites(path: WalkPath, L: int) -> np.ndarray:
    """Site indices covered by every frame, shape ``(t + 1, L)``."""
    return path.positions[:, None] + np.arange(L)[None, :]


def extract_static(wall: FieldWindow, path: WalkPath, spec: ViewSpec) -> ViewSequence:
    L = spec.block_length
    lo, hi = int(path.positions.min()), int(path.positions.max()) + L - 1
    if not wall.covers(lo, hi):
        raise ValueError(f"wall {wall.site_range} does not cover sites [{lo}, {hi}]")
    idx = frame_sites(path, L) - wall.site_range[0]
    return ViewSequence(wall.row(0)[idx], path, spec, "static")


def extract_dynamic(
    field_spec: BscFieldSpec | Ar1FieldSpec | StaticWallSpec,
    path: WalkPath,
    spec: ViewSpec,
    seed: int,
    method: str = "auto",
) -> ViewSequence:
    """Frame ``i`` reads time ``i`` of an evolving field at sites ``W_i..W_i+L-1``.

    ``method="dense"`` evolves the whole window row by row (BSC rows reuse the
    static wall for the same seed at time 0); ``"lazy"`` samples only observed
    cells.  ``"auto"`` picks dense for small windows.
    """
    L = spec.block_length
    t = path.t
    window = walk_window(t, L)
    n_cells = (t + 1) * (window[1] - window[0] + 1)
    if method == "auto":
        method = "dense" if n_cells <= DENSE_CELL_LIMIT else "lazy"
    tag = type(field_spec).__name__.removesuffix("FieldSpec").removesuffix("Spec").lower()
    sites = frame_sites(path, L)

    if method == "dense":
        if isinstance(field_spec, BscFieldSpec):
            fw = gen_bsc_window(field_spec, window, t, seed)
        elif isinstance(field_spec, Ar1FieldSpec):
            fw = gen_ar1_window(field_spec, window, t, seed)
        else:
            raise TypeError("dense extraction needs a BSC or AR(1) field spec")
        frames = fw.rows[np.arange(t + 1)[:, None], sites - window[0]]
    elif method == "lazy":
        lazy = LazyField(field_spec, window, make_rng(seed, STREAM_FIELD, 1))
        frames = np.stack([lazy.observe(sites[i], i) for i in range(t + 1)])
    else:
        raise ValueError(f"unknown method {method!r}")
    return ViewSequence(frames, path, spec, tag)


def to_csv(view: ViewSequence, fh=None) -> str:
    """Columnar dump: one ``frame,offset,position,value`` row per sample."""
    buf = io.StringIO() if fh is None else fh
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["frame", "offset", "position", "value"])
    for i, frame in enumerate(view.frames):
        pos = int(view.path.positions[i])
        for j, v in enumerate(frame.tolist()):
            w.writerow([i, j, pos + j, repr(v)])
    return buf.getvalue() if fh is None else ""


def from_csv(text: str, spec: ViewSpec, reality: str = "static") -> ViewSequence:
    rows = list(csv.DictReader(io.StringIO(text)))
    t = max(int(r["frame"]) for r in rows)
    L = spec.block_length
    vals = [float(r["value"]) for r in rows]
    is_int = all(v.is_integer() for v in vals) and not any("." in r["value"] for r in rows)
    frames = np.zeros((t + 1, L), dtype=np.int64 if is_int else float)
    positions = np.zeros(t + 1, dtype=np.int64)
    for r, v in zip(rows, vals):
        i, j = int(r["frame"]), int(r["offset"])
        frames[i, j] = v
        positions[i] = int(r["position"]) - j
    return ViewSequence(frames, WalkPath.from_positions(positions), spec, reality)
