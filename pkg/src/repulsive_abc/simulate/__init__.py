"""Forward samplers for the supported point-process models."""
from __future__ import annotations

import numpy as np

from ..models import HPP, DppGauss, DppPowerExp, ModelSpec, Strauss
from ..pattern import PointPattern, Window
from .dpp import (
    DppSamplingError,
    SpectralApprox,
    build_spectral_approx,
    dpp_spectral_density,
    simulate_dpp,
)
from .strauss import StraussRunaway, StraussSimControls, papangelou_strauss, simulate_strauss

__all__ = [
    "simulate",
    "simulate_hpp",
    "simulate_strauss",
    "simulate_dpp",
    "papangelou_strauss",
    "dpp_spectral_density",
    "build_spectral_approx",
    "SpectralApprox",
    "StraussSimControls",
    "StraussRunaway",
    "DppSamplingError",
    "SimulationError",
]

SimulationError = (StraussRunaway, DppSamplingError)


def simulate_hpp(lam: float, w: Window, rng: np.random.Generator) -> PointPattern:
    if not lam > 0:
        raise ValueError("intensity must be positive")
    n = rng.poisson(lam * w.area())
    u = rng.random((n, 2))
    pts = np.column_stack([w.x_min + w.width * u[:, 0], w.y_min + w.height * u[:, 1]])
    return PointPattern(pts, w)


def simulate(
    m: ModelSpec,
    w: Window,
    rng: np.random.Generator,
    strauss_controls: StraussSimControls | None = None,
) -> PointPattern:
    """Draw one pattern from ``m`` on ``w``; deterministic given the generator state."""
    if isinstance(m, HPP):
        return simulate_hpp(m.lam, w, rng)
    if isinstance(m, Strauss):
        return simulate_strauss(m, w, rng, strauss_controls)
    if isinstance(m, (DppGauss, DppPowerExp)):
        return simulate_dpp(m, w, rng)
    raise TypeError(f"unsupported model {m!r}")
