"""Model checking by prior-predictive Monte Carlo tests and comparison by RPS."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .inference.mcmc import PosteriorSamples, posterior_predictive
from .inference.priors import PriorSpec
from .models import ModelKind
from .parallel import pmap, task_rngs
from .pattern import PointPattern, Window, counts_in_regions, pair_distances
from .simulate import StraussSimControls, simulate

__all__ = [
    "McTestResult",
    "RpsResult",
    "close_pair_counts",
    "mc_p_value",
    "mc_test",
    "rps_single",
    "sample_regions",
    "rps_compare",
]


def close_pair_counts(p: PointPattern, radii: Sequence[float]) -> np.ndarray:
    """``s_r`` (unordered pairs within ``r``) for every ``r`` in ``radii``."""
    radii = np.asarray(radii, float)
    d = np.sort(pair_distances(p, float(radii.max()))[4])
    return np.searchsorted(d, radii, side="right")


def mc_p_value(observed: float, simulated) -> float:
    """Two-sided rank p-value ``2 min(p_lo, p_hi)`` capped at 1, with add-one counts."""
    sim = np.asarray(simulated)
    U = sim.size
    lo = (1 + np.count_nonzero(sim <= observed)) / (U + 1)
    hi = (1 + np.count_nonzero(sim >= observed)) / (U + 1)
    return float(min(1.0, 2.0 * min(lo, hi)))


@dataclass(frozen=True)
class McTestResult:
    radii: tuple[float, ...]
    p_values: np.ndarray
    U: int
    observed: np.ndarray  # s_r(y) per radius
    simulated: np.ndarray  # (U, len(radii)) s_r of the simulated patterns

    def quantiles(self, qs=(0.025, 0.5, 0.975)) -> np.ndarray:
        """Simulated ``s_r`` quantiles, one row per radius."""
        return np.quantile(self.simulated, qs, axis=0).T


def mc_test(
    y_obs: PointPattern,
    prior: PriorSpec,
    kind: ModelKind,
    radii: Sequence[float],
    U: int,
    rng: np.random.Generator,
    n_jobs: int = 1,
    strauss_controls: StraussSimControls | None = None,
) -> McTestResult:
    """Prior-predictive Monte Carlo test of ``kind`` using close-pair counts."""
    if U < 19:
        raise ValueError("U must be at least 19")
    if prior.kind != kind:
        raise ValueError("prior and model kind disagree")
    radii = tuple(float(r) for r in radii)
    if not radii or min(radii) <= 0:
        raise ValueError("radii must be positive")
    if max(radii) >= y_obs.window.min_side() / 2:
        raise ValueError("radii must stay below half the shorter window side")

    def one(r):
        x = simulate(kind.make(prior.sample(r)), y_obs.window, r, strauss_controls)
        return close_pair_counts(x, radii)

    sims = np.array(pmap(one, task_rngs(rng, U), n_jobs))
    obs = close_pair_counts(y_obs, radii)
    pv = np.array([mc_p_value(obs[k], sims[:, k]) for k in range(len(radii))])
    return McTestResult(radii, pv, U, obs, sims)


def rps_single(predictive, observed) -> float:
    """Ranked probability score of integer count draws against one observation.

    ``mean|N - obs| - mean over all ordered pairs |N - N'| / 2``.
    """
    x = np.sort(np.asarray(predictive, dtype=float).ravel())
    T = x.size
    if T == 0:
        raise ValueError("need at least one predictive draw")
    first = np.abs(x - observed).mean()
    # sum over ordered pairs of |x_i - x_j| from the sorted values
    k = np.arange(T)
    pair_sum = 2.0 * np.dot(2 * k - T + 1, x)
    return float(max(first - pair_sum / (2.0 * T * T), 0.0))


@dataclass(frozen=True)
class RpsResult:
    name: str
    regions: np.ndarray  # (J, 4) rows x0, x1, y0, y1
    rps: np.ndarray  # (J,)
    mean: float
    q_max: float
    T: int


def sample_regions(w: Window, J: int, q_max: float, rng: np.random.Generator) -> np.ndarray:
    """``J`` squares of area ``q |D|``, ``q ~ U(0, q_max)``, placed uniformly inside ``w``."""
    if not 0 < q_max:
        raise ValueError("q_max must be positive")
    if np.sqrt(q_max * w.area()) > w.min_side():
        raise ValueError("a square of area q_max |D| does not fit in the window")
    q = rng.uniform(0.0, q_max, size=J)
    side = np.sqrt(q * w.area())
    x0 = w.x_min + rng.random(J) * (w.width - side)
    y0 = w.y_min + rng.random(J) * (w.height - side)
    return np.column_stack([x0, x0 + side, y0, y0 + side])


def rps_compare(
    y_obs: PointPattern,
    fits: Sequence[tuple[str, PosteriorSamples]],
    J: int,
    q_max: float,
    T: int,
    rng: np.random.Generator,
    n_jobs: int = 1,
    strauss_controls: StraussSimControls | None = None,
) -> list[RpsResult]:
    """Mean RPS per fitted model over shared random square regions.

    Every model sees the same regions and the same predictive seed, so the
    comparison is paired and a repeated fit gives an identical score.
    """
    if T < 1 or J < 1:
        raise ValueError("J and T must be positive")
    regions = sample_regions(y_obs.window, J, q_max, rng)
    obs = counts_in_regions(y_obs, regions)
    pred_seed = int(rng.integers(0, 2**63))
    out = []
    for name, samples in fits:
        pats = posterior_predictive(
            samples, y_obs.window, T, np.random.default_rng(pred_seed), strauss_controls, n_jobs
        )
        counts = np.array([counts_in_regions(x, regions) for x in pats])  # (T, J)
        rps = np.array([rps_single(counts[:, j], obs[j]) for j in range(J)])
        out.append(RpsResult(name, regions, rps, float(rps.mean()), q_max, T))
    return out
