"""Feature vectors comparing a simulated pattern with the observed one."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..pattern import PointPattern, SummaryConfig, Window, k_hat_curve

__all__ = [
    "PatternSummary",
    "EmptyPatternError",
    "summarize",
    "features_from",
    "features",
    "feature_names",
]


class EmptyPatternError(ValueError):
    """The simulated pattern has no points so ``log n`` is undefined."""


@dataclass(frozen=True)
class PatternSummary:
    """Point count and ``sqrt(K-hat)`` on the configured radii, computed once per pattern."""

    n: int
    sqrt_k: np.ndarray
    window: Window


def summarize(p: PointPattern, cfg: SummaryConfig) -> PatternSummary:
    """Summaries of ``p``; with fewer than two points K-hat is an empty sum (0)."""
    if p.n() < 2:
        sk = np.zeros(cfg.m)
    else:
        sk = np.sqrt(k_hat_curve(p, cfg.r_grid, cfg.edge_correction))
    return PatternSummary(p.n(), sk, p.window)


def features_from(sx: PatternSummary, sy: PatternSummary, cfg: SummaryConfig) -> np.ndarray:
    """``(log n(x) - log n(y), (sqrt K_r(x) - sqrt K_r(y))^2 for r in grid)``."""
    if sx.window != sy.window:
        raise ValueError("patterns live on different windows")
    k = (sx.sqrt_k - sy.sqrt_k) ** 2
    if not cfg.include_log_n:
        return k
    if sx.n == 0 or sy.n == 0:
        raise EmptyPatternError("log point count undefined for an empty pattern")
    return np.concatenate([[math.log(sx.n) - math.log(sy.n)], k])


def features(x: PointPattern, y_obs: PointPattern, cfg: SummaryConfig) -> np.ndarray:
    return features_from(summarize(x, cfg), summarize(y_obs, cfg), cfg)


def feature_names(cfg: SummaryConfig) -> list[str]:
    names = [f"k_{r:g}" for r in cfg.r_grid]
    return (["log_n"] + names) if cfg.include_log_n else names
