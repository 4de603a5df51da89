import numpy as np
import pytest

from repulsive_abc.inference.lasso import RankDeficientError, lasso_select, ols_fit


def synthetic(rng, n=2000, F=21, true=(0, 4, 11), snr=10.0):
    X = rng.normal(size=(n, F))
    beta = np.zeros(F)
    beta[list(true)] = rng.choice([-1, 1], len(true)) * rng.uniform(0.5, 1.5, len(true))
    signal = X @ beta
    noise_sd = np.sqrt(signal.var() / snr)
    return X, 1.0 + signal + rng.normal(0, noise_sd, n)


def test_ols_fit_matches_lstsq():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(100, 4))
    Y = rng.normal(size=(100, 2))
    b0, B = ols_fit(X, Y)
    A = np.column_stack([np.ones(100), X])
    ref = np.linalg.lstsq(A, Y, rcond=None)[0]
    np.testing.assert_allclose(b0, ref[0], atol=1e-12)
    np.testing.assert_allclose(B, ref[1:].T, atol=1e-12)


def test_ols_subset_zero_outside():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(50, 5))
    _, B = ols_fit(X, rng.normal(size=50), cols=[3, 1])
    assert np.all(B[0, [0, 2, 4]] == 0)


def test_ols_rank_deficient():
    X = np.random.default_rng(2).normal(size=(30, 2))
    X = np.column_stack([X, X[:, 0]])
    with pytest.raises(RankDeficientError):
        ols_fit(X, np.ones(30))


def test_penalty_zero_is_ols():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(300, 6)) * [1, 10, 0.1, 1, 5, 2]
    Y = np.column_stack([X @ rng.normal(size=6) + rng.normal(size=300), rng.normal(size=300)])
    fit = lasso_select(X, Y, penalty=0.0)
    b0, B = ols_fit(X, Y)
    np.testing.assert_allclose(fit.pen_coef, B, atol=1e-8)
    np.testing.assert_allclose(fit.coef, B, atol=1e-8)
    np.testing.assert_allclose(fit.intercept, b0, atol=1e-8)


def test_small_penalty_approaches_ols():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(400, 5))
    y = X @ [1, -2, 0.5, 0, 3] + rng.normal(size=400)
    _, B = ols_fit(X, y)
    fit = lasso_select(X, y, penalty=1e-9)
    np.testing.assert_allclose(fit.pen_coef[0], B[0], atol=1e-6)


def test_huge_penalty_shrinks_to_mean():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(200, 4))
    y = 3.0 + X[:, 0] + rng.normal(size=200)
    with pytest.warns(UserWarning, match="dropped every feature"):
        fit = lasso_select(X, y, penalty=1e6)
    assert np.all(fit.pen_coef == 0)
    assert fit.pen_intercept[0] == pytest.approx(y.mean(), abs=1e-12)
    assert fit.active == (0,)


def test_constant_feature_never_selected():
    rng = np.random.default_rng(6)
    X = np.column_stack([rng.normal(size=200), np.full(200, 2.0)])
    y = 2 * X[:, 0] + rng.normal(size=200)
    fit = lasso_select(X, y, rng=np.random.default_rng(0))
    assert fit.active == (0,)


def test_folds_argument():
    X = np.random.default_rng(7).normal(size=(20, 2))
    with pytest.raises(ValueError):
        lasso_select(X, X[:, 0], k_folds=1)


def test_cv_choice_is_reproducible():
    rng = np.random.default_rng(8)
    X, y = synthetic(rng, n=500)
    a = lasso_select(X, y, rng=np.random.default_rng(1))
    b = lasso_select(X, y, rng=np.random.default_rng(1))
    assert a.active == b.active
    np.testing.assert_array_equal(a.coef, b.coef)


def test_recovers_three_true_features():
    true = (0, 4, 11)
    hits = 0
    for seed in range(50):
        rng = np.random.default_rng(1000 + seed)
        X, y = synthetic(rng, true=true)
        fit = lasso_select(X, y, rng=rng)
        hits += fit.active == true
    assert hits >= 45


def test_min_rule_keeps_at_least_the_one_se_set():
    rng = np.random.default_rng(9)
    X, y = synthetic(rng, n=800)
    a = lasso_select(X, y, rng=np.random.default_rng(2), cv_rule="min")
    b = lasso_select(X, y, rng=np.random.default_rng(2), cv_rule="1se")
    assert set(b.active) <= set(a.active)
    assert a.penalty[0] <= b.penalty[0]
    with pytest.raises(ValueError):
        lasso_select(X, y, cv_rule="median")
