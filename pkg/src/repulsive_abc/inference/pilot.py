"""Pilot run: prior-predictive simulations and the regression summary."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ..models import ModelKind
from ..parallel import pmap, task_rngs
from ..pattern import PointPattern, SummaryConfig, Window
from ..simulate import StraussSimControls, simulate
from .features import PatternSummary, feature_names, features_from, summarize
from .lasso import LassoFit, lasso_select, ols_fit
from .priors import PriorSpec, to_transformed

__all__ = ["PilotResult", "pilot_run", "prior_predictive", "fit_regression", "distance", "PERCENTILES"]

# reported percentiles of the pilot distances (in percent)
PERCENTILES = (0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 25.0, 50.0)


def distance(theta_hat, theta_obs, vars) -> float | np.ndarray:
    """``sum_j (theta_hat_j - theta_obs_j)^2 / vars_j``; rows of a 2-D ``theta_hat`` each get one value."""
    th = np.asarray(theta_hat, float)
    to = np.asarray(theta_obs, float)
    v = np.asarray(vars, float)
    if th.shape[-1] != to.shape[-1] or to.shape != v.shape:
        raise ValueError("theta_hat, theta_obs and vars must have matching lengths")
    if np.any(v <= 0):
        raise ValueError("variances must be strictly positive")
    out = (((th - to) ** 2) / v).sum(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def fit_regression(
    theta: np.ndarray,
    eta: np.ndarray,
    use_lasso: bool = True,
    k_folds: int = 5,
    rng: np.random.Generator | None = None,
    penalty=None,
) -> tuple[np.ndarray, np.ndarray, tuple[int, ...], LassoFit | None]:
    """Per-component regression ``theta_j ~ a_j + b_j . eta``.

    Returns ``(a, b, active, lasso)``; ``b`` has zeros on screened-out features.
    """
    if use_lasso:
        fit = lasso_select(eta, theta, penalty=penalty, k_folds=k_folds, rng=rng)
        return fit.intercept, fit.coef, fit.active, fit
    a, b = ols_fit(eta, theta)
    return a, b, tuple(range(eta.shape[1])), None


@dataclass(frozen=True)
class PilotResult:
    """Outcome of the pilot run.

    ``theta`` holds the drawn parameters on the log scale and ``eta`` their
    features. ``intercept`` is the fitted value at the observed data (zero
    features), so it doubles as the observed-data estimate.
    """

    kind: ModelKind
    cfg: SummaryConfig
    theta: np.ndarray
    eta: np.ndarray
    psi: np.ndarray
    n_points: np.ndarray
    intercept: np.ndarray
    coef: np.ndarray
    var_hat: np.ndarray
    percentiles: dict
    p_star: float
    epsilon: float
    active: tuple[int, ...]
    feature_names: tuple[str, ...]
    obs_summary: PatternSummary = field(repr=False)
    dropped_empty: int = 0
    lasso: LassoFit | None = field(default=None, repr=False)

    @property
    def theta_obs(self) -> np.ndarray:
        return self.intercept

    def predict(self, eta) -> np.ndarray:
        return self.intercept + np.asarray(eta, float) @ self.coef.T

    def distance_of(self, eta) -> float:
        return distance(self.predict(eta), self.intercept, self.var_hat)


def prior_predictive(
    prior: PriorSpec,
    kind: ModelKind,
    w: Window,
    cfg: SummaryConfig,
    L: int,
    rng: np.random.Generator,
    n_jobs: int = 1,
    strauss_controls: StraussSimControls | None = None,
) -> list[tuple[np.ndarray, PatternSummary]]:
    """``L`` draws ``theta ~ prior``, ``x ~ model(theta)``, kept as summaries of ``x``."""
    if prior.kind != kind:
        raise ValueError("prior and model kind disagree")

    def one(task_rng):
        th = prior.sample(task_rng)
        x = simulate(kind.make(th), w, task_rng, strauss_controls)
        return th, summarize(x, cfg)

    return pmap(one, task_rngs(rng, L), n_jobs)


def pilot_run(
    prior: PriorSpec,
    kind: ModelKind,
    y_obs: PointPattern,
    cfg: SummaryConfig,
    L: int,
    rng: np.random.Generator,
    p_star: float = 1.0,
    use_lasso: bool = True,
    k_folds: int = 5,
    penalty=None,
    n_jobs: int = 1,
    strauss_controls: StraussSimControls | None = None,
    enforce_size: bool = True,
    draws: list | None = None,
) -> PilotResult:
    """Simulate ``L`` prior-predictive patterns and fit the regression summary.

    Parameters
    ----------
    p_star : float
        Percentile (in percent) of the pilot distances used as tolerance.
    enforce_size : bool
        Require ``L >= 50 (1 + M)``.
    draws : list, optional
        Output of :func:`prior_predictive` for the same prior, window and
        summary radii. The simulations do not depend on the data, so one set
        can serve several observed patterns. ``L`` must match its length.
    """
    if prior.kind != kind:
        raise ValueError("prior and model kind disagree")
    cfg.check_window(y_obs.window)
    F = cfg.m + (1 if cfg.include_log_n else 0)
    if enforce_size and L < 50 * (1 + cfg.m):
        raise ValueError(f"L={L} below 50*(1+M)={50 * (1 + cfg.m)}")
    if not 0 < p_star <= 100:
        raise ValueError("p_star must lie in (0, 100]")
    obs = summarize(y_obs, cfg)
    if cfg.include_log_n and obs.n == 0:
        raise ValueError("observed pattern is empty")

    if draws is None:
        draws = prior_predictive(prior, kind, y_obs.window, cfg, L, rng, n_jobs, strauss_controls)
    elif len(draws) != L:
        raise ValueError(f"got {len(draws)} precomputed draws for L={L}")
    elif any(d.window != y_obs.window or len(d.sqrt_k) != cfg.m for _, d in draws):
        raise ValueError("precomputed draws were made for another window or radius grid")
    keep = [(th, s) for th, s in draws if not (cfg.include_log_n and s.n == 0)]
    dropped = L - len(keep)
    if dropped:
        warnings.warn(f"{dropped} pilot draws produced empty patterns and were dropped", stacklevel=2)
    if len(keep) < F + 2:
        raise ValueError("too few usable pilot draws")
    theta = np.array([to_transformed(th, kind) for th, _ in keep])
    eta = np.array([features_from(s, obs, cfg) for _, s in keep])
    n_points = np.array([s.n for _, s in keep])

    a, b, active, fit = fit_regression(theta, eta, use_lasso, k_folds, rng, penalty)
    pred = a + eta @ b.T
    var_hat = pred.var(axis=0, ddof=1)
    if np.any(var_hat <= 0):
        raise ValueError("a fitted component has zero variance over the pilot draws")
    psi = distance(pred, a, var_hat)
    table = {q: float(np.percentile(psi, q)) for q in sorted(set(PERCENTILES) | {p_star})}
    return PilotResult(
        kind, cfg, theta, eta, psi, n_points, a, b, var_hat, table, p_star, table[p_star],
        active, tuple(feature_names(cfg)), obs, dropped, fit,
    )
