import math

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from plenoptic_rates.entropy import binary_entropy, discrete_entropy, static_bounds
from plenoptic_rates.rd import (
    MAX_TOEPLITZ_DIM,
    BlahutArimotoError,
    RDCurve,
    RDPoint,
    ar1_correlation,
    blahut_arimoto,
    mixture_cond_rd,
    rx_bernoulli,
    slb_ar1_upper,
    slb_validity,
    static_lossy_upper,
    toeplitz_min_eig,
)
from plenoptic_rates.reality import Ar1FieldSpec
from plenoptic_rates.walk import WalkParams, first_passage_probs

from oracles import h2, phi

AR1_RATE = -5.095877251384577  # h(V|V^-, W), p_w = 0.5, L = 8, rho = 0.99


def hamming(m):
    return 1.0 - np.eye(m)


# --- types ---


def test_rd_point_invariants():
    with pytest.raises(ValueError):
        RDPoint(-0.1, 1.0, True, "operational")
    with pytest.raises(ValueError):
        RDPoint(0.1, -1.0, True, "operational")


def test_rd_curve_sorted():
    c = RDCurve([RDPoint(0.2, 0.5, True, "analytic_bound"), RDPoint(0.1, 1.0, True, "analytic_bound")])
    assert c.distortions.tolist() == [0.1, 0.2]
    assert c.rates.tolist() == [1.0, 0.5]


# --- marginal R(D) ---


def test_rx_bernoulli_examples():
    assert rx_bernoulli(0.5, 0.0) == 1.0
    assert rx_bernoulli(0.5, 0.5) == 0.0
    assert rx_bernoulli(0.5, 0.11) == pytest.approx(1 - h2(0.11), abs=1e-15)
    assert rx_bernoulli(0.5, 0.11) == pytest.approx(0.5, abs=1e-3)
    assert rx_bernoulli(0.2, 0.3) == 0.0
    with pytest.raises(ValueError):
        rx_bernoulli(0.5, -0.1)


@given(st.floats(0.01, 0.5), st.floats(0, 0.5), st.floats(0, 0.5))
def test_rx_bernoulli_convex_nonincreasing(p, a, b):
    lo, hi = min(a, b), max(a, b)
    assert rx_bernoulli(p, hi) <= rx_bernoulli(p, lo) + 1e-15
    mid = 0.5 * (lo + hi)
    assert rx_bernoulli(p, mid) <= 0.5 * (rx_bernoulli(p, lo) + rx_bernoulli(p, hi)) + 1e-12


@pytest.mark.parametrize("p", [0.5, 0.3])
@pytest.mark.parametrize("d", [0.05, 0.11, 0.25])
def test_blahut_arimoto_bernoulli(p, d):
    if d >= min(p, 1 - p):
        return
    res = blahut_arimoto([1 - p, p], hamming(2), target_d=d)
    assert res.distortion == pytest.approx(d, abs=1e-7)
    assert res.rate == pytest.approx(rx_bernoulli(p, d), abs=1e-4)
    assert res.rate_lower - 1e-9 <= res.rate <= res.rate_upper + 1e-9


def test_blahut_arimoto_trivial_cases():
    assert blahut_arimoto([0.25] * 4, hamming(4), target_d=0.0).rate == pytest.approx(2.0, abs=1e-4)
    for d in (0.0, 0.1, 0.5):
        assert blahut_arimoto([1.0, 0.0, 0.0], hamming(3), target_d=d).rate == pytest.approx(0.0, abs=1e-6)
    assert blahut_arimoto([0.5, 0.5], hamming(2), target_d=0.6).rate == 0.0


def test_blahut_arimoto_errors():
    with pytest.raises(ValueError):
        blahut_arimoto([0.5, 0.5], hamming(3), target_d=0.1)
    with pytest.raises(ValueError):
        blahut_arimoto([0.5, 0.5], hamming(2))
    with pytest.raises(ValueError):
        blahut_arimoto([0.5, 0.5], hamming(2), slope=1.0, tol=0.0)
    with pytest.raises(BlahutArimotoError):
        blahut_arimoto([0.2, 0.3, 0.5], hamming(3), slope=5.0, tol=1e-12, max_iter=2)


@given(st.lists(st.floats(0.05, 1.0), min_size=3, max_size=5), st.floats(0.5, 8.0))
@settings(max_examples=20, deadline=None)
def test_blahut_arimoto_above_shannon_lower_bound(weights, slope):
    # Hamming SLB: R(D) >= H(X) - H(D) - D log2(m - 1)
    pmf = np.array(weights) / sum(weights)
    m = pmf.size
    res = blahut_arimoto(pmf, hamming(m), slope=slope)
    d = res.distortion
    slb = discrete_entropy(pmf) - h2(d) - d * math.log2(m - 1)
    assert res.rate >= slb - 1e-6


# --- static lossy bound ---


def test_static_lossy_upper_examples():
    assert static_lossy_upper(WalkParams(0.5), 0.7) == pytest.approx(1.0)
    assert static_lossy_upper(WalkParams(0.0), rx_bernoulli(0.3, 0.0)) == pytest.approx(h2(0.3))
    got = static_lossy_upper(WalkParams(0.25), rx_bernoulli(0.5, 0.11))
    assert got == pytest.approx(h2(0.25) + 0.5 * (1 - h2(0.11)), abs=1e-15)
    assert got == pytest.approx(1.0613, abs=1e-3)
    with pytest.raises(ValueError):
        static_lossy_upper(WalkParams(0.25), -1.0)


@pytest.mark.parametrize("p", [0.0, 0.2, 0.4])
def test_static_lossy_lossless_limit(p):
    w = WalkParams(p)
    hx = h2(0.3)
    assert static_lossy_upper(w, rx_bernoulli(0.3, 0.0)) == pytest.approx(static_bounds(w, hx).upper)


@pytest.mark.parametrize("p", [0.1, 0.3])
def test_new_site_construction_direction(p):
    # rate of coding only fresh sites: E[new sites]/t * R_X(D), approaching (1-2p) R_X(D) from above
    rx = rx_bernoulli(0.5, 0.1)
    target = (1 - 2 * p) * rx
    gaps = []
    for t in (100, 1000, 10_000):
        rate = float(np.mean(first_passage_probs(WalkParams(p), t))) * rx
        gaps.append(rate - target)
    assert all(g >= -1e-12 for g in gaps)
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[-1] < 1e-2


# --- Shannon lower bound ---


def test_slb_validity_examples():
    v = slb_validity(0.99)
    assert v.d_max == pytest.approx(0.01 / 1.99)
    assert round(v.snr_threshold_db, 1) == 23.0
    assert round(slb_validity(0.9).snr_threshold_db, 1) == 12.8
    assert slb_validity(0.9).d_max == pytest.approx(1 / 19)
    assert slb_validity(0.0).d_max == 1.0
    with pytest.raises(ValueError):
        slb_validity(1.0)


def test_slb_ar1_boundary_invalid():
    w, ar1 = WalkParams(0.5), Ar1FieldSpec(0.99)
    d_max = slb_validity(0.99).d_max
    assert not slb_ar1_upper(w, ar1, 8, d_max).valid
    assert slb_ar1_upper(w, ar1, 8, 0.999 * d_max).valid
    assert not slb_ar1_upper(w, ar1, 8, 0.5).valid
    with pytest.raises(ValueError):
        slb_ar1_upper(w, ar1, 8, 0.0)


def test_slb_ar1_slope():
    w, ar1 = WalkParams(0.5), Ar1FieldSpec(0.99)
    d1 = 10**-2.5
    d2 = d1 / 2
    r1 = slb_ar1_upper(w, ar1, 8, d1).rate
    r2 = slb_ar1_upper(w, ar1, 8, d2).rate
    assert r2 - r1 == pytest.approx(0.5 * math.log2(d1 / d2), abs=1e-12)


def test_slb_ar1_value():
    pt = slb_ar1_upper(WalkParams(0.5), Ar1FieldSpec(0.99), 8, 0.003)
    ref = (1.0 + AR1_RATE - 8 * phi(0.003)) / 8
    assert pt.rate == pytest.approx(ref, abs=1e-6)
    assert pt.meta["rate_per_frame"] == pytest.approx(8 * ref, abs=1e-6)
    assert pt.kind == "analytic_bound" and pt.valid


# --- Toeplitz ---


def test_toeplitz_examples():
    assert toeplitz_min_eig(0.7, 1) == pytest.approx(1.0)
    assert toeplitz_min_eig(0.5, 2) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        toeplitz_min_eig(0.5, 0)
    with pytest.raises(ValueError):
        toeplitz_min_eig(0.5, MAX_TOEPLITZ_DIM + 1)


def test_toeplitz_decreasing_to_limit():
    eigs = [toeplitz_min_eig(0.9, t) for t in range(2, 257, 2)]
    assert np.all(np.diff(eigs) < 0)
    assert min(eigs) >= 1 / 19 - 1e-12


def test_interlacing_random_deletions():
    rng = np.random.default_rng(0)
    for _ in range(100):
        t = int(rng.integers(2, 65))
        rho = float(rng.uniform(0.05, 0.99))
        full = toeplitz_min_eig(rho, t)
        keep = np.sort(rng.choice(t, size=int(rng.integers(1, t + 1)), replace=False))
        sub = ar1_correlation(rho, t)[np.ix_(keep, keep)]
        assert np.linalg.eigvalsh(sub)[0] >= full - 1e-12


# --- mixtures ---


def test_mixture_examples():
    assert mixture_cond_rd([(1.0, 1.0)], 0.25) == pytest.approx(1.0)
    assert mixture_cond_rd([(0.5, 1.0), (0.5, 4.0)], 0.5) == pytest.approx(1.0)
    cov = ar1_correlation(0.9, 6)
    d = toeplitz_min_eig(0.9, 6)
    assert math.isfinite(mixture_cond_rd([(0.3, cov), (0.7, 2 * cov)], d))
    with pytest.raises(ValueError):
        mixture_cond_rd([(1.0, cov)], 1.5 * d)
    with pytest.raises(ValueError):
        mixture_cond_rd([(1.0, 1.0)], 0.0)


def test_mixture_matches_log_det():
    # for d below every eigenvalue the rate is (log2 det(C) - n log2 d) / (2n)
    cov = ar1_correlation(0.8, 5)
    d = 0.5 * toeplitz_min_eig(0.8, 5)
    ref = (np.linalg.slogdet(cov)[1] / math.log(2) - 5 * math.log2(d)) / 10
    assert mixture_cond_rd([(1.0, cov)], d) == pytest.approx(ref, abs=1e-12)
