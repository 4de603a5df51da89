"""Per-component linear regression of parameters on features, with lasso screening."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.linear_model import lasso_path

__all__ = ["LassoFit", "lasso_select", "ols_fit", "RankDeficientError"]


class RankDeficientError(ValueError):
    pass


@dataclass(frozen=True)
class LassoFit:
    """Regression of each parameter component on the features.

    ``intercept``/``coef`` are the refit (unpenalized on the active set)
    values; ``pen_intercept``/``pen_coef`` those at the CV-chosen penalty,
    both on the original feature scale. Inactive features have zero
    coefficients.
    """

    active: tuple[int, ...]
    intercept: np.ndarray  # (p,)
    coef: np.ndarray  # (p, F)
    pen_intercept: np.ndarray
    pen_coef: np.ndarray
    penalty: np.ndarray  # (p,) chosen penalty per component
    component_active: tuple[tuple[int, ...], ...]


def ols_fit(X: np.ndarray, Y: np.ndarray, cols=None) -> tuple[np.ndarray, np.ndarray]:
    """Least squares with intercept on the columns ``cols`` of ``X``.

    Returns ``(intercept (p,), coef (p, F))`` with zeros outside ``cols``.
    """
    X = np.asarray(X, float)
    Y = np.asarray(Y, float)
    if Y.ndim == 1:
        Y = Y[:, None]
    F = X.shape[1]
    cols = list(range(F)) if cols is None else sorted(cols)
    A = np.column_stack([np.ones(len(X)), X[:, cols]])
    rank = np.linalg.matrix_rank(A)
    if rank < A.shape[1]:
        raise RankDeficientError(f"design has rank {rank} < {A.shape[1]} columns")
    sol, *_ = np.linalg.lstsq(A, Y, rcond=None)
    coef = np.zeros((Y.shape[1], F))
    coef[:, cols] = sol[1:].T
    return sol[0].copy(), coef


def _penalty_grid(Xs, y, n_alphas, eps):
    top = np.max(np.abs(Xs.T @ y)) / len(y)
    if top <= 0:
        return np.array([1.0])
    return np.geomspace(top, top * eps, n_alphas)


def _standardize(X, mu=None, sd=None):
    if mu is None:
        mu, sd = X.mean(0), X.std(0)
    safe = np.where(sd > 0, sd, 1.0)
    return (X - mu) / safe, mu, sd


def _path(X, y, alphas):
    """Coefficients on the original scale along ``alphas``: (intercepts, coefs (F, A))."""
    Xs, mu, sd = _standardize(X)
    yc = y - y.mean()
    live = sd > 0
    coefs = np.zeros((X.shape[1], len(alphas)))
    if live.any():
        _, c, _ = lasso_path(Xs[:, live], yc, alphas=alphas, tol=1e-10, max_iter=100_000)
        coefs[live] = c / sd[live, None]
    intercepts = y.mean() - mu @ coefs
    return intercepts, coefs


def _cv_penalty(X, y, k_folds, folds, n_alphas, eps, refit, rule):
    Xs, _, _ = _standardize(X)
    alphas = _penalty_grid(Xs, y - y.mean(), n_alphas, eps)
    err = np.zeros((k_folds, len(alphas)))  # per-fold mean squared error
    for f in range(k_folds):
        test = folds == f
        b0, B = _path(X[~test], y[~test], alphas)
        if refit:
            # score the least-squares refit on each active set along the path
            cache = {}
            for a in range(len(alphas)):
                key = tuple(np.flatnonzero(B[:, a]))
                if key not in cache:
                    c0, c = ols_fit(X[~test], y[~test], key)
                    cache[key] = ((y[test] - c0[0] - X[test] @ c[0]) ** 2).mean()
                err[f, a] = cache[key]
        else:
            pred = b0[None, :] + X[test] @ B
            err[f] = ((y[test, None] - pred) ** 2).mean(0)
    mean = err.mean(0)
    best = int(np.argmin(mean))
    if rule == "1se":
        # largest penalty (alphas run high to low) within one standard error of the minimum
        se = err[:, best].std(ddof=1) / np.sqrt(k_folds)
        best = int(np.flatnonzero(mean <= mean[best] + se)[0])
    return alphas[best]


def lasso_select(
    X: np.ndarray,
    Y: np.ndarray,
    penalty=None,
    k_folds: int = 5,
    rng: np.random.Generator | None = None,
    n_alphas: int = 100,
    eps: float = 1e-4,
    fallback: int = 0,
    cv_refit: bool = True,
    cv_rule: str = "1se",
) -> LassoFit:
    """Lasso per response column with the penalty chosen by k-fold CV.

    Parameters
    ----------
    X : (L, F) array
        Features; standardized internally before penalization.
    Y : (L, p) array
        Responses, one regression per column.
    penalty : float or sequence, optional
        Fixed penalty (per component or shared) instead of CV. ``0`` gives
        ordinary least squares.
    k_folds : int
        Number of CV folds (at least 2).
    fallback : int
        Feature kept alone when every feature is dropped.
    cv_refit : bool
        Score each penalty by the CV error of the least-squares refit on its
        active set (the estimator actually used downstream) rather than of
        the shrunken lasso fit. Plain lasso CV keeps many noise features.
    cv_rule : {"1se", "min"}
        ``"min"`` takes the penalty with the smallest mean CV error;
        ``"1se"`` the largest penalty whose mean error is within one
        standard error of that minimum, which drops features whose gain
        is indistinguishable from fold noise.
    """
    X = np.asarray(X, float)
    Y = np.asarray(Y, float)
    if Y.ndim == 1:
        Y = Y[:, None]
    L, F = X.shape
    p = Y.shape[1]
    if k_folds < 2:
        raise ValueError("need at least 2 folds")
    if cv_rule not in ("1se", "min"):
        raise ValueError(f"unknown cv_rule {cv_rule!r}")
    if penalty is None:
        rng = rng if rng is not None else np.random.default_rng(0)
        folds = rng.permutation(np.arange(L) % k_folds)
        pens = np.array([_cv_penalty(X, Y[:, j], k_folds, folds, n_alphas, eps, cv_refit, cv_rule) for j in range(p)])
    else:
        pens = np.broadcast_to(np.asarray(penalty, float), (p,)).copy()
        if np.any(pens < 0):
            raise ValueError("penalties must be nonnegative")

    pen_b0 = np.zeros(p)
    pen_B = np.zeros((p, F))
    comp_active = []
    for j in range(p):
        if pens[j] == 0:
            b0, c = ols_fit(X, Y[:, j])
            pen_b0[j], pen_B[j] = b0[0], c[0]
        else:
            b0, B = _path(X, Y[:, j], np.array([pens[j]]))
            pen_b0[j], pen_B[j] = b0[0], B[:, 0]
        comp_active.append(tuple(int(i) for i in np.flatnonzero(pen_B[j] != 0)))

    active = sorted(set().union(*comp_active))
    if not active:
        warnings.warn(f"lasso dropped every feature; keeping feature {fallback} alone", stacklevel=2)
        active = [fallback]
    b0, B = ols_fit(X, Y, active)
    return LassoFit(tuple(active), b0, B, pen_b0, pen_B, pens, tuple(comp_active))
