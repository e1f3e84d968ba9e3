import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from plenoptic_rates.walk import (
    MAX_CATALAN_INDEX,
    StepClass,
    WalkParams,
    WalkPath,
    catalan,
    classify_step,
    first_passage_probs,
    last_visit_times,
    new_site_flags,
    recurrence_prob,
    recurrence_probs,
    recurrence_table,
    return_prob,
    return_probs,
    return_weighted_sum,
    sample_path,
    simulate_first_passage,
    simulate_recurrence,
    simulate_returns,
)

from oracles import return_terms

p_ws = st.floats(min_value=0.0, max_value=0.5, allow_nan=False)


def enumerate_paths(p, t):
    """All (increments, probability) pairs of a t-step walk."""
    for inc in itertools.product((-1, 1), repeat=t):
        up = inc.count(1)
        yield inc, p**up * (1 - p) ** (t - up)


# --- parameters and paths ---


@pytest.mark.parametrize("bad", [-0.1, 0.51, 1.0, float("nan")])
def test_walk_params_rejects(bad):
    with pytest.raises(ValueError):
        WalkParams(bad)


def test_walkpath_validation():
    with pytest.raises(ValueError):
        WalkPath.from_positions([1, 2])
    with pytest.raises(ValueError):
        WalkPath.from_positions([0, 2])


@given(st.lists(st.sampled_from([-1, 1]), min_size=1, max_size=60))
def test_path_invariants(inc):
    path = WalkPath.from_increments(inc)
    pos = path.positions
    assert pos[0] == 0
    assert np.all(np.abs(np.diff(pos)) == 1)
    assert np.all(pos % 2 == np.arange(pos.size) % 2)
    assert path.new_site_count <= path.t
    seen = {0}
    for i in range(1, pos.size):
        assert path.new_site_flags[i - 1] == (pos[i] not in seen)
        seen.add(int(pos[i]))


# --- catalan ---


@pytest.mark.parametrize("k,expected", [(0, 1), (3, 5), (5, 42)])
def test_catalan_examples(k, expected):
    assert catalan(k) == expected


def test_catalan_recurrence():
    # C_{n+1} = sum_i C_i C_{n-i}
    c = [catalan(k) for k in range(40)]
    for n in range(39):
        assert c[n + 1] == sum(c[i] * c[n - i] for i in range(n + 1))
    assert catalan(30) == 3814986502092304


def test_catalan_bounds():
    with pytest.raises(ValueError):
        catalan(-1)
    with pytest.raises(OverflowError):
        catalan(MAX_CATALAN_INDEX + 1)
    assert catalan(MAX_CATALAN_INDEX) > 0


# --- return / recurrence probabilities ---


def test_return_prob_examples():
    assert return_prob(WalkParams(0.3), 3) == 0.0
    assert return_prob(WalkParams(0.5), 2) == pytest.approx(0.5, abs=1e-15)
    assert return_prob(WalkParams(0.1), 2) == pytest.approx(0.18, abs=1e-15)


def test_recurrence_prob_examples():
    assert recurrence_prob(WalkParams(0.5), 1) == 0.0
    assert recurrence_prob(WalkParams(0.5), 2) == pytest.approx(0.5, abs=1e-15)
    assert 1 - recurrence_prob(WalkParams(0.5), 10_000) < 0.02


@pytest.mark.parametrize("p", [0.1, 0.3, 0.5])
def test_return_probs_match_enumeration(p):
    # first return to the origin, counted over all paths
    t = 12
    exact = np.zeros(t)
    for inc, w in enumerate_paths(p, t):
        pos = np.cumsum(inc)
        hits = np.flatnonzero(pos == 0)
        if hits.size:
            exact[hits[0]] += w
    np.testing.assert_allclose(return_probs(WalkParams(p), t), exact, atol=1e-15)


@pytest.mark.parametrize("p", [0.1, 0.3, 0.5])
def test_recurrence_matches_enumeration(p):
    # revisit of any earlier site, the event behind the time-reversal identity
    t = 12
    exact = np.zeros(t)
    for inc, w in enumerate_paths(p, t):
        pos = np.concatenate(([0], np.cumsum(inc)))
        flags = new_site_flags(pos)
        exact += w * (~flags)
    np.testing.assert_allclose(recurrence_probs(WalkParams(p), t), exact, atol=1e-14)


@pytest.mark.parametrize("p", [0.05, 0.2, 0.5])
def test_log_domain_matches_ratio_recurrence(p):
    ref = [pk for _, pk in return_terms(p, 3000)]
    got = return_probs(WalkParams(p), 6000)[1::2]
    np.testing.assert_allclose(got, ref, rtol=1e-10, atol=1e-300)
    # scalar path agrees with vectorized
    for k in (1, 7, 60, 61, 500):
        assert return_prob(WalkParams(p), 2 * k) == pytest.approx(ref[k - 1], rel=1e-10)


@given(p_ws, st.integers(1, 400))
def test_recurrence_monotone_and_bounded(p, t):
    r = recurrence_probs(WalkParams(p), t)
    assert np.all(np.diff(r) >= -1e-15)
    assert r[-1] <= 2 * p + 1e-12
    assert np.all(return_probs(WalkParams(p), t)[0::2] == 0)


@pytest.mark.parametrize("p", np.arange(0.05, 0.451, 0.05).round(2).tolist())
def test_return_mass_truncated(p):
    r = recurrence_probs(WalkParams(p), 10_000)
    assert abs(r[-1] - 2 * p) < 1e-2
    assert np.all(np.diff(r) >= 0)


def test_first_passage_complement():
    fp = first_passage_probs(WalkParams(0.3), 50)
    np.testing.assert_allclose(fp, 1 - recurrence_probs(WalkParams(0.3), 50))


def test_recurrence_table():
    tab = recurrence_table(WalkParams(0.4), 9)
    assert tab.catalan == (1, 1, 2, 5, 14, 42)
    assert tab.return_probs.size == 9
    np.testing.assert_allclose(tab.recurrence_probs, np.cumsum(tab.return_probs))


# --- series with tail bound ---


@pytest.mark.parametrize("p", [0.1, 0.3, 0.5])
def test_weighted_sum_tail_certified(p):
    weight = lambda k: 0.9 ** (2 * k)
    res = return_weighted_sum(WalkParams(p), weight, tol=1e-12)
    ref = math.fsum(0.9 ** (2 * k) * pk for k, pk in return_terms(p, 20_000))
    assert abs(res.value - ref) <= res.tail_bound + 1e-14
    assert res.tail_bound <= 1e-12


def test_weighted_sum_zero_walk():
    res = return_weighted_sum(WalkParams(0.0), lambda k: np.ones(k.shape))
    assert res.value == 0.0 and res.tail_bound == 0.0


def test_weighted_sum_respects_cap():
    # constant weight at p=0.5: the remaining mass decays like 1/sqrt(K)
    res = return_weighted_sum(WalkParams(0.5), lambda k: np.ones(k.shape), tol=1e-12, max_pairs=1024)
    assert res.pairs == 1024
    assert res.tail_bound > 1e-3
    assert res.value + res.tail_bound >= 1.0 - 1e-12


# --- sampling ---


def test_sample_path_panning():
    path = sample_path(WalkParams(0.0), 5, seed=11)
    assert path.positions.tolist() == [0, -1, -2, -3, -4, -5]
    assert path.new_site_count == 5


def test_sample_path_deterministic():
    a = sample_path(WalkParams(0.5), 3, seed=7)
    b = sample_path(WalkParams(0.5), 3, seed=7)
    assert np.array_equal(a.positions, b.positions)
    c = sample_path(WalkParams(0.5), 200, seed=8)
    d = sample_path(WalkParams(0.5), 200, seed=9)
    assert not np.array_equal(c.positions, d.positions)


@given(p_ws, st.integers(1, 300), st.integers(0, 2**32))
@settings(max_examples=40)
def test_sampled_paths_parity(p, t, seed):
    path = sample_path(WalkParams(p), t, seed)
    assert np.all(path.positions % 2 == np.arange(t + 1) % 2)


def test_classify_step_examples():
    assert classify_step(WalkPath.from_positions([0, 1, 0]), 2) == StepClass(False, 0)
    assert classify_step(WalkPath.from_positions([0, -1, -2]), 2) == StepClass(True)
    assert classify_step(WalkPath.from_positions([0, 1, 2, 1]), 3) == StepClass(False, 1)
    with pytest.raises(IndexError):
        classify_step(WalkPath.from_positions([0, 1]), 2)


@given(st.lists(st.sampled_from([-1, 1]), min_size=1, max_size=40))
def test_classify_consistent_with_last_visit(inc):
    path = WalkPath.from_increments(inc)
    last = last_visit_times(path.positions)
    for i in range(1, path.t + 1):
        c = classify_step(path, i)
        assert c.new_site == (last[i] == -1)
        if not c.new_site:
            assert c.s == last[i]


# --- Monte-Carlo agreement ---


@pytest.mark.slow
def test_mc_return_frequencies():
    n = 1_000_000
    for p in np.arange(0.05, 0.501, 0.05).round(2):
        counts = simulate_returns(WalkParams(p), 20, n, seed=3)
        exact = return_probs(WalkParams(p), 20)
        se = np.sqrt(np.maximum(exact * (1 - exact), 1e-12) / n)
        assert np.all(np.abs(counts / n - exact) <= 4 * se + 1e-12), p


@pytest.mark.parametrize("p,t", [(0.3, 7), (0.5, 10), (0.1, 16)])
def test_mc_recurrence(p, t):
    n = 200_000
    hits = simulate_recurrence(WalkParams(p), t, n, seed=5)
    exact = recurrence_prob(WalkParams(p), t)
    assert abs(hits / n - exact) <= 4 * math.sqrt(exact * (1 - exact) / n)


def test_mc_first_passage_small_t():
    freq, se = simulate_first_passage(WalkParams(0.3), 9, 100_000, seed=2)
    assert abs(freq - first_passage_probs(WalkParams(0.3), 9)[-1]) <= 4 * se


@pytest.mark.slow
def test_mean_new_site_fraction():
    # finite-t expectation is the mean first-passage probability; it tends to 1 - 2p slowly
    p, t, n = 0.5, 100_000, 1000
    fracs = np.array([sample_path(WalkParams(p), t, seed).new_site_count / t for seed in range(n)])
    expected = float(np.mean(first_passage_probs(WalkParams(p), t)))
    assert abs(fracs.mean() - expected) <= 3 * fracs.std(ddof=1) / math.sqrt(n)
    assert expected < 0.01
