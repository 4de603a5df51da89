"""ABC-MCMC driven by the pilot regression summary.

Each iteration proposes ``phi*`` by a Gaussian random walk on the log scale
and first applies the prior Metropolis-Hastings test, which needs no
simulation. A surviving proposal then enters a race: patterns are simulated
at ``phi*`` and at the current ``phi`` in rounds until one of them lands
within the tolerance. The proposal is accepted when its own pattern hits
(simultaneous hits count for the proposal). The chain targets
``prior(theta) * P_theta(distance <= eps)``, the usual ABC posterior; with
``eps = inf`` every simulation hits and the chain is MH on the prior.
"""
from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..models import ModelKind
from ..parallel import pmap
from ..pattern import PointPattern, Window
from ..simulate import StraussSimControls, simulate
from .features import EmptyPatternError, features_from, summarize
from .pilot import PilotResult
from .priors import PriorSpec, to_transformed

__all__ = ["PosteriorSamples", "AbcNonConvergence", "abc_mcmc", "run_chains", "posterior_predictive"]


class AbcNonConvergence(RuntimeError):
    """Almost every recent proposal exhausted the simulation cap."""


@dataclass(frozen=True)
class PosteriorSamples:
    """Retained ABC-MCMC states.

    ``theta`` is on the natural scale, one row per retained state.
    ``sim_count`` is the number of simulations spent in the iteration that
    produced each row; ``n_points`` is the size of the tolerance-matching
    pattern attached to the state (NaN until the first match).
    """

    kind: ModelKind
    theta: np.ndarray
    sim_count: np.ndarray
    n_points: np.ndarray
    acceptance_rate: float
    cap_events: int
    epsilon: float
    seed: int | None = None
    prior: tuple[str, ...] = ()
    proposal_scale: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def param_names(self) -> tuple[str, ...]:
        return self.kind.param_names

    def __len__(self) -> int:
        return len(self.theta)

    def summary(self) -> dict:
        """Mean, sd and central 95% interval per parameter (and for n)."""
        out = {}
        cols = list(zip(self.param_names, self.theta.T))
        n = self.n_points[np.isfinite(self.n_points)]
        if n.size:
            cols.append(("n", n))
        for name, v in cols:
            lo, hi = np.quantile(v, [0.025, 0.975])
            out[name] = {
                "mean": float(np.mean(v)),
                "sd": float(np.std(v, ddof=1)) if len(v) > 1 else 0.0,
                "q025": float(lo),
                "q975": float(hi),
            }
        return out


class _Matcher:
    def __init__(self, pilot: PilotResult, kind, window, eps, ctrl):
        self.pilot, self.kind, self.window, self.eps, self.ctrl = pilot, kind, window, eps, ctrl

    def __call__(self, phi, rng) -> tuple[bool, int]:
        """Simulate once at ``phi``; return (within tolerance, point count)."""
        x = simulate(self.kind.make(np.exp(phi)), self.window, rng, self.ctrl)
        if math.isinf(self.eps):
            return True, x.n()
        s = summarize(x, self.pilot.cfg)
        try:
            psi = self.pilot.distance_of(features_from(s, self.pilot.obs_summary, self.pilot.cfg))
        except EmptyPatternError:
            return False, 0
        return psi <= self.eps, x.n()


def abc_mcmc(
    pilot: PilotResult,
    prior: PriorSpec,
    y_obs: PointPattern,
    n_keep: int,
    rng: np.random.Generator,
    epsilon: float | None = None,
    proposal_scale=None,
    sim_cap: int = 100,
    init=None,
    strauss_controls: StraussSimControls | None = None,
    window: int = 1000,
    seed: int | None = None,
) -> PosteriorSamples:
    """Run one ABC-MCMC chain and keep ``n_keep`` consecutive states.

    Parameters
    ----------
    epsilon : float, optional
        Tolerance; defaults to the pilot's. Matches use ``distance <= eps``.
    proposal_scale : array, optional
        Random-walk sd per log-parameter; default ``0.5 * sqrt(var_hat)``.
    sim_cap : int
        Maximum race rounds per iteration before the proposal is rejected.
    init : array, optional
        Natural-scale start. Default: the pilot intercept mapped back when it
        lies in the prior support, else a prior draw.
    window : int
        Length of the sliding window for the cap-event failure check.
    """
    kind = pilot.kind
    if prior.kind != kind:
        raise ValueError("prior and pilot model kinds disagree")
    if y_obs.window != pilot.obs_summary.window:
        raise ValueError("observed pattern window differs from the pilot's")
    if n_keep < 1 or sim_cap < 1:
        raise ValueError("n_keep and sim_cap must be positive")
    eps = pilot.epsilon if epsilon is None else float(epsilon)
    if eps < 0:
        raise ValueError("tolerance must be nonnegative")
    p = len(kind.param_names)
    scale = 0.5 * np.sqrt(pilot.var_hat) if proposal_scale is None else np.broadcast_to(
        np.asarray(proposal_scale, float), (p,)
    ).copy()
    if np.any(scale <= 0):
        raise ValueError("proposal scale must be positive")

    if init is not None:
        theta0 = np.asarray(init, float)
        if not prior.in_support(theta0):
            raise ValueError("initial value outside the prior support")
    else:
        theta0 = np.exp(pilot.intercept)
        if not prior.in_support(theta0):
            theta0 = prior.sample(rng)
    phi = to_transformed(theta0, kind)
    lp = prior.logpdf_transformed(phi)
    match = _Matcher(pilot, kind, y_obs.window, eps, strauss_controls)

    # attach a matching pattern size to the start when one turns up quickly
    n_cur = math.nan
    for _ in range(sim_cap):
        ok, n = match(phi, rng)
        if ok:
            n_cur = float(n)
            break

    thetas = np.empty((n_keep, p))
    sims = np.empty(n_keep, dtype=np.int64)
    npts = np.empty(n_keep)
    accepted = 0
    caps = 0
    recent: deque[bool] = deque(maxlen=window)
    for it in range(n_keep):
        used = 0
        capped = False
        prop = phi + scale * rng.standard_normal(p)
        lp_prop = prior.logpdf_transformed(prop)
        if lp_prop > -math.inf and math.log(rng.random()) < lp_prop - lp:
            for _ in range(sim_cap):
                hit, n = match(prop, rng)
                used += 1
                if hit:
                    phi, lp, n_cur = prop, lp_prop, float(n)
                    accepted += 1
                    break
                hit_cur, n_c = match(phi, rng)
                used += 1
                if hit_cur:
                    break
            else:
                capped = True
                caps += 1
        recent.append(capped)
        if len(recent) == window and sum(recent) > 0.99 * window:
            raise AbcNonConvergence(
                f"{sum(recent)} of the last {window} iterations hit the simulation cap; raise epsilon or sim_cap"
            )
        thetas[it] = np.exp(phi)
        sims[it] = max(used, 1)
        npts[it] = n_cur
    if caps:
        warnings.warn(f"{caps} of {n_keep} iterations hit the simulation cap", stacklevel=2)
    if not all(prior.in_support(t) for t in thetas):
        raise AssertionError("a retained state left the prior support")
    return PosteriorSamples(
        kind, thetas, sims, npts, accepted / n_keep, caps, eps, seed, tuple(prior.describe()), scale
    )


def run_chains(
    pilot: PilotResult,
    prior: PriorSpec,
    y_obs: PointPattern,
    n_keep: int,
    rngs: list[np.random.Generator],
    n_jobs: int = 1,
    **kw,
) -> list[PosteriorSamples]:
    """Independent chains, one per generator, returned separately in input order."""
    return pmap(lambda r: abc_mcmc(pilot, prior, y_obs, n_keep, r, **kw), rngs, n_jobs)


def posterior_predictive(
    samples: PosteriorSamples,
    w: Window,
    T: int,
    rng: np.random.Generator,
    strauss_controls: StraussSimControls | None = None,
    n_jobs: int = 1,
) -> list[PointPattern]:
    """Composition sampling: ``T`` states drawn with replacement, one pattern each."""
    if len(samples) == 0:
        raise ValueError("no posterior samples")
    if T < 0:
        raise ValueError("T must be nonnegative")
    if T == 0:
        return []
    idx = rng.integers(0, len(samples), size=T)
    tasks = list(zip(idx, rng.spawn(T)))
    kind = samples.kind
    return pmap(lambda t: simulate(kind.make(samples.theta[t[0]]), w, t[1], strauss_controls), tasks, n_jobs)
