import math

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from plenoptic_rates.reality import (
    Ar1FieldSpec,
    BscFieldSpec,
    FieldWindow,
    StaticWallSpec,
    bsc_equiv,
    gen_bsc_window,
    gen_static_wall,
    walk_window,
)
from plenoptic_rates.view import (
    ViewSpec,
    extract_dynamic,
    extract_static,
    frame_sites,
    from_csv,
    to_csv,
)
from plenoptic_rates.walk import WalkParams, WalkPath, classify_step, last_visit_times, sample_path


def test_view_spec():
    with pytest.raises(ValueError):
        ViewSpec(1)


def test_static_example_right_step():
    wall = FieldWindow((0, 4), np.array([[10, 11, 12, 13, 14]]))
    v = extract_static(wall, WalkPath.from_positions([0, 1]), ViewSpec(4))
    assert v.frames.tolist() == [[10, 11, 12, 13], [11, 12, 13, 14]]


def test_static_example_left_step():
    wall = FieldWindow((-1, 1), np.array([[7, 8, 9]]))
    v = extract_static(wall, WalkPath.from_positions([0, -1]), ViewSpec(2))
    assert v.frames.tolist() == [[8, 9], [7, 8]]


def test_constant_wall_identical_frames():
    wall = gen_static_wall(StaticWallSpec((0.0, 1.0)), (-20, 30), seed=0)
    v = extract_static(wall, sample_path(WalkParams(0.4), 20, 1), ViewSpec(5))
    assert np.all(v.frames == v.frames[0])


def test_wall_too_small():
    wall = FieldWindow((0, 3), np.zeros((1, 4), dtype=int))
    with pytest.raises(ValueError):
        extract_static(wall, WalkPath.from_positions([0, -1]), ViewSpec(2))


@given(st.floats(0, 0.5), st.integers(1, 60), st.integers(2, 7), st.integers(0, 2**31))
@settings(max_examples=50)
def test_static_overlap_invariant(p, t, L, seed):
    path = sample_path(WalkParams(p), t, seed)
    wall = gen_static_wall(StaticWallSpec.uniform(3), walk_window(t, L), seed)
    v = extract_static(wall, path, ViewSpec(L))
    for i in range(1, t + 1):
        prev, cur = v.frames[i - 1], v.frames[i]
        if path.increments[i - 1] == 1:
            assert np.array_equal(cur[:-1], prev[1:])
        else:
            assert np.array_equal(cur[1:], prev[:-1])


def test_frame_sites():
    s = frame_sites(WalkPath.from_positions([0, -1, 0]), 3)
    assert s.tolist() == [[0, 1, 2], [-1, 0, 1], [0, 1, 2]]


def test_bsc_zero_innovation_is_static():
    spec = BscFieldSpec(0.5, 0.0)
    path = sample_path(WalkParams(0.4), 50, 3)
    dyn = extract_dynamic(spec, path, ViewSpec(4), seed=12, method="dense")
    wall = gen_static_wall(StaticWallSpec.bernoulli(0.5), walk_window(50, 4), 12)
    assert np.array_equal(dyn.frames, extract_static(wall, path, ViewSpec(4)).frames)


def test_dense_frames_read_field_rows():
    spec = BscFieldSpec(0.5, 0.2)
    path = sample_path(WalkParams(0.5), 30, 4)
    v = extract_dynamic(spec, path, ViewSpec(3), seed=2, method="dense")
    fw = gen_bsc_window(spec, walk_window(30, 3), 30, 2)
    for i in range(31):
        lo = path.positions[i] - fw.site_range[0]
        assert np.array_equal(v.frames[i], fw.rows[i, lo : lo + 3])


@pytest.mark.parametrize("method", ["dense", "lazy"])
def test_dynamic_replay(method):
    path = sample_path(WalkParams(0.5), 40, 5)
    a = extract_dynamic(Ar1FieldSpec(0.9), path, ViewSpec(4), seed=3, method=method)
    b = extract_dynamic(Ar1FieldSpec(0.9), path, ViewSpec(4), seed=3, method=method)
    assert np.array_equal(a.frames, b.frames)


def test_unknown_method():
    with pytest.raises(ValueError):
        extract_dynamic(Ar1FieldSpec(0.9), sample_path(WalkParams(0.5), 4, 0), ViewSpec(2), 0, method="x")


def test_near_unit_rho_revisits_close():
    rho, L, t = 0.9999, 8, 100
    path = sample_path(WalkParams(0.5), t, 6)
    v = extract_dynamic(Ar1FieldSpec(rho), path, ViewSpec(L), seed=6)
    sites = frame_sites(path, L)
    last = {}
    sq, bound = [], []
    for i in range(t + 1):
        for j in range(L):
            s = int(sites[i, j])
            if s in last:
                k, jj = last[s]
                sq.append((v.frames[i, j] - v.frames[k, jj]) ** 2)
                bound.append(2 * (1 - rho ** (i - k)))
            last[s] = (i, j)
    # E(x_i - x_k)^2 = 2(1 - rho^(i-k)); generous factor for the sample mean
    assert np.mean(sq) < 5 * np.mean(bound)
    assert np.mean(bound) < 0.05


def _revisit_pairs(method, spec, n_trials, t=12, L=3, p=0.5):
    """(earlier entry, revisit entry, lag) for the entering sample of revisit steps."""
    pairs = []
    for trial in range(n_trials):
        path = sample_path(WalkParams(p), t, 1000 + trial)
        v = extract_dynamic(spec, path, ViewSpec(L), seed=trial, method=method)
        last = last_visit_times(path.positions)
        for i in range(1, t + 1):
            c = classify_step(path, i)
            if c.new_site:
                continue
            s = int(last[i])
            pairs.append((v.frames[s, 0], v.frames[i, 0], i - s))
    return pairs


@pytest.mark.parametrize("method", ["dense", "lazy"])
def test_dynamic_revisit_consistency_ar1(method):
    rho = 0.8
    pairs = _revisit_pairs(method, Ar1FieldSpec(rho), 3000)
    lag = 2
    sel = np.array([(a, b) for a, b, g in pairs if g == lag])
    assert sel.shape[0] > 1000
    r = np.corrcoef(sel[:, 0], sel[:, 1])[0, 1]
    se = (1 - rho ** (2 * lag)) / math.sqrt(sel.shape[0])
    assert abs(r - rho**lag) <= 4 * se


@pytest.mark.parametrize("method", ["dense", "lazy"])
def test_dynamic_revisit_consistency_bsc(method):
    p_i = 0.1
    pairs = _revisit_pairs(method, BscFieldSpec(0.5, p_i), 3000)
    sel = np.array([(a, b) for a, b, g in pairs if g == 2])
    e = bsc_equiv(p_i, 2)
    rate = np.mean(sel[:, 0] != sel[:, 1])
    assert abs(rate - e) <= 4 * math.sqrt(e * (1 - e) / sel.shape[0])


def test_csv_roundtrip_int_and_float():
    path = sample_path(WalkParams(0.3), 12, 7)
    wall = gen_static_wall(StaticWallSpec.uniform(4), walk_window(12, 3), 7)
    v = extract_static(wall, path, ViewSpec(3))
    back = from_csv(to_csv(v), ViewSpec(3))
    assert np.array_equal(back.frames, v.frames)
    assert np.array_equal(back.path.positions, path.positions)
    g = extract_dynamic(Ar1FieldSpec(0.5), path, ViewSpec(3), seed=1)
    back = from_csv(to_csv(g), ViewSpec(3), reality="ar1")
    assert np.array_equal(back.frames, g.frames)
    header = to_csv(v).splitlines()[0]
    assert header == "frame,offset,position,value"
