import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from repulsive_abc.assess import (
    close_pair_counts,
    mc_p_value,
    mc_test,
    rps_compare,
    rps_single,
    sample_regions,
)
from repulsive_abc.inference.mcmc import PosteriorSamples, posterior_predictive
from repulsive_abc.inference.priors import PriorSpec, parse_prior
from repulsive_abc.models import ModelKind
from repulsive_abc.pattern import PointPattern, Window, close_pair_count, counts_in_regions
from repulsive_abc.simulate import simulate_hpp

UNIT = Window.unit()
HPP_KIND = ModelKind("hpp")
HPP_PRIOR = PriorSpec(HPP_KIND, (parse_prior("lam", "gamma(200, 2)"),))


def rps_brute(pred, obs):
    T = len(pred)
    first = sum(abs(a - obs) for a in pred) / T
    second = sum(abs(a - b) for a, b in itertools.product(pred, pred)) / (2 * T * T)
    return first - second


def test_rps_hand_oracles():
    assert rps_single([0, 2], 1) == pytest.approx(0.5, abs=1e-15)
    assert rps_single([5, 5, 5], 7) == pytest.approx(2.0, abs=1e-15)
    assert rps_single([4, 4, 4, 4], 4) == 0.0
    with pytest.raises(ValueError):
        rps_single([], 3)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 60), min_size=1, max_size=30), st.integers(0, 60), st.integers(-20, 20))
def test_rps_properties(pred, obs, shift):
    v = rps_single(pred, obs)
    assert v == pytest.approx(rps_brute(pred, obs), abs=1e-9)
    assert v >= 0
    assert rps_single([p + shift for p in pred], obs + shift) == pytest.approx(v, abs=1e-9)
    assert (v == 0) == all(p == obs for p in pred)


def test_mc_p_value_extremes():
    assert mc_p_value(0, np.arange(1, 1000)) == pytest.approx(0.002)
    assert mc_p_value(5, np.full(999, 5)) == 1.0
    assert mc_p_value(10**6, np.arange(999)) == pytest.approx(0.002)


def test_mc_p_value_rank_arithmetic():
    sims = np.array([1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19])
    # observed 3: 3 sims <= obs, 17 sims >= obs
    assert mc_p_value(3, sims) == pytest.approx(2 * 4 / 20)
    rng = np.random.default_rng(0)
    x = rng.integers(0, 10, 99)
    assert mc_p_value(4, x) == mc_p_value(4, rng.permutation(x))


def test_close_pair_counts_vector():
    p = PointPattern(np.random.default_rng(1).random((120, 2)), UNIT)
    radii = (0.01, 0.03, 0.05, 0.1)
    assert close_pair_counts(p, radii).tolist() == [close_pair_count(p, r) for r in radii]


def test_mc_test_validation():
    y = simulate_hpp(100, UNIT, np.random.default_rng(2))
    with pytest.raises(ValueError):
        mc_test(y, HPP_PRIOR, HPP_KIND, (0.05,), 18, np.random.default_rng(0))
    with pytest.raises(ValueError):
        mc_test(y, HPP_PRIOR, HPP_KIND, (0.5,), 19, np.random.default_rng(0))
    with pytest.raises(ValueError):
        mc_test(y, HPP_PRIOR, ModelKind("dpp_gauss"), (0.05,), 19, np.random.default_rng(0))


def test_mc_test_result_fields_and_thread_independence():
    y = simulate_hpp(100, UNIT, np.random.default_rng(3))
    a = mc_test(y, HPP_PRIOR, HPP_KIND, (0.03, 0.05), 39, np.random.default_rng(4), n_jobs=1)
    b = mc_test(y, HPP_PRIOR, HPP_KIND, (0.03, 0.05), 39, np.random.default_rng(4), n_jobs=3)
    np.testing.assert_array_equal(a.simulated, b.simulated)
    assert a.simulated.shape == (39, 2)
    assert np.all((a.p_values >= 2 / 40 - 1e-12) & (a.p_values <= 1))
    q = a.quantiles()
    assert q.shape == (2, 3) and np.all(q[:, 0] <= q[:, 2])
    for k in range(2):
        assert a.p_values[k] == mc_p_value(a.observed[k], a.simulated[:, k])


def test_mc_test_uniform_under_the_null():
    rng = np.random.default_rng(5)
    small = 0
    for _ in range(200):
        lam = HPP_PRIOR.sample(rng)[0]
        y = simulate_hpp(lam, UNIT, rng)
        res = mc_test(y, HPP_PRIOR, HPP_KIND, (0.05,), 99, rng)
        small += res.p_values[0] <= 0.1
    assert 0.05 <= small / 200 <= 0.17


def test_sample_regions_geometry():
    w = Window(0, 2, 0, 1)
    regs = sample_regions(w, 2000, 0.1, np.random.default_rng(6))
    side = regs[:, 1] - regs[:, 0]
    np.testing.assert_allclose(side, regs[:, 3] - regs[:, 2])
    q = side**2 / w.area()
    assert q.max() < 0.1 and q.min() >= 0
    assert np.all((regs[:, 0] >= 0) & (regs[:, 1] <= 2) & (regs[:, 2] >= 0) & (regs[:, 3] <= 1))
    with pytest.raises(ValueError):
        sample_regions(UNIT, 5, 1.5, np.random.default_rng(0))


def fake_posterior(lam):
    return PosteriorSamples(HPP_KIND, np.array([[lam]]), np.array([1]), np.array([lam]), 1.0, 0, 1.0)


def test_rps_compare_identical_fits_score_identically():
    y = simulate_hpp(100, UNIT, np.random.default_rng(7))
    s = fake_posterior(100.0)
    out = rps_compare(y, [("a", s), ("b", s)], J=50, q_max=0.1, T=40, rng=np.random.default_rng(8))
    assert out[0].mean == out[1].mean
    np.testing.assert_array_equal(out[0].regions, out[1].regions)
    assert out[0].mean == pytest.approx(out[0].rps.mean())
    assert np.all(out[0].rps >= 0)


def test_rps_compare_matches_manual_computation():
    y = simulate_hpp(100, UNIT, np.random.default_rng(9))
    s = fake_posterior(90.0)
    rng = np.random.default_rng(10)
    (res,) = rps_compare(y, [("hpp", s)], J=30, q_max=0.1, T=25, rng=rng)
    # replay the documented draw order
    rng = np.random.default_rng(10)
    regions = sample_regions(UNIT, 30, 0.1, rng)
    seed = int(rng.integers(0, 2**63))
    pats = posterior_predictive(s, UNIT, 25, np.random.default_rng(seed))
    counts = np.array([counts_in_regions(p, regions) for p in pats])
    obs = counts_in_regions(y, regions)
    want = [rps_brute(counts[:, j].tolist(), obs[j]) for j in range(30)]
    np.testing.assert_allclose(res.rps, want, atol=1e-12)


def test_rps_compare_reproducible():
    y = simulate_hpp(100, UNIT, np.random.default_rng(11))
    fits = [("x", fake_posterior(100.0)), ("y", fake_posterior(140.0))]
    a = rps_compare(y, fits, 40, 0.1, 30, np.random.default_rng(12), n_jobs=1)
    b = rps_compare(y, fits, 40, 0.1, 30, np.random.default_rng(12), n_jobs=2)
    for u, v in zip(a, b):
        assert u.rps.tobytes() == v.rps.tobytes()
    # a badly wrong intensity scores worse
    assert a[0].mean < a[1].mean
