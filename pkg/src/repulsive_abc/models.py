"""Parameterizations of the four point-process families."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import ClassVar, Mapping

from scipy.special import gamma as gamma_fn

__all__ = [
    "HPP",
    "Strauss",
    "DppGauss",
    "DppPowerExp",
    "ModelSpec",
    "ModelKind",
    "sigma_max",
    "alpha_max",
    "MODEL_TYPES",
]

# floating slack when checking the DPP existence bounds
_BOUND_RTOL = 1e-12


def sigma_max(tau: float) -> float:
    """Largest Gaussian-kernel range for which the DPP exists on the plane."""
    return 1.0 / math.sqrt(math.pi * tau)


def alpha_max(tau: float, nu: float) -> float:
    """Largest power-exponential scale for which the DPP exists."""
    return math.sqrt(gamma_fn(2.0 / nu + 1.0) * math.pi / tau)


@dataclass(frozen=True)
class HPP:
    lam: float

    kind: ClassVar[str] = "hpp"
    free: ClassVar[tuple[str, ...]] = ("lam",)

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"HPP intensity must be positive, got {self.lam}")


@dataclass(frozen=True)
class Strauss:
    """Strauss process with optional hard core ``h < R``."""

    beta: float
    gamma: float
    R: float
    h: float = 0.0

    kind: ClassVar[str] = "strauss"
    free: ClassVar[tuple[str, ...]] = ("beta", "gamma")

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not self.R > 0:
            raise ValueError(f"R must be positive, got {self.R}")
        if self.h < 0 or (self.h > 0 and self.h >= self.R):
            raise ValueError(f"hard-core radius must satisfy 0 <= h < R, got h={self.h}, R={self.R}")


@dataclass(frozen=True)
class DppGauss:
    """DPP with kernel ``tau * exp(-|x-y|^2 / sigma^2)``."""

    tau: float
    sigma: float

    kind: ClassVar[str] = "dpp_gauss"
    free: ClassVar[tuple[str, ...]] = ("tau", "sigma")

    def __post_init__(self):
        if not (self.tau > 0 and self.sigma > 0):
            raise ValueError("tau and sigma must be positive")
        if self.sigma > sigma_max(self.tau) * (1 + _BOUND_RTOL):
            raise ValueError(
                f"sigma={self.sigma} exceeds sigma_max={sigma_max(self.tau):.6g}; the DPP does not exist"
            )

    @property
    def intensity(self) -> float:
        return self.tau


@dataclass(frozen=True)
class DppPowerExp:
    """DPP with power-exponential spectral density (``nu`` usually fixed)."""

    tau: float
    alpha: float
    nu: float

    kind: ClassVar[str] = "dpp_powexp"
    free: ClassVar[tuple[str, ...]] = ("tau", "alpha")

    def __post_init__(self):
        if not (self.tau > 0 and self.alpha > 0 and self.nu > 0):
            raise ValueError("tau, alpha and nu must be positive")
        if self.alpha > alpha_max(self.tau, self.nu) * (1 + _BOUND_RTOL):
            raise ValueError(
                f"alpha={self.alpha} exceeds alpha_max={alpha_max(self.tau, self.nu):.6g}; the DPP does not exist"
            )

    @property
    def intensity(self) -> float:
        return self.tau


ModelSpec = HPP | Strauss | DppGauss | DppPowerExp
MODEL_TYPES = {cls.kind: cls for cls in (HPP, Strauss, DppGauss, DppPowerExp)}


@dataclass(frozen=True)
class ModelKind:
    """A model family with its non-estimated parameters pinned.

    ``ModelKind("strauss", {"R": 0.05})`` describes Strauss models with
    interaction radius 0.05 whose ``beta`` and ``gamma`` are to be inferred.
    """

    name: str
    fixed: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in MODEL_TYPES:
            raise ValueError(f"unknown model kind {self.name!r}; choose from {sorted(MODEL_TYPES)}")
        cls = MODEL_TYPES[self.name]
        allowed = {f.name for f in fields(cls)} - set(cls.free)
        extra = set(self.fixed) - allowed
        if extra:
            raise ValueError(f"{self.name} cannot fix {sorted(extra)}")
        if self.name == "dpp_powexp" and "nu" not in self.fixed:
            raise ValueError("dpp_powexp needs a fixed nu")
        if self.name == "strauss" and "R" not in self.fixed:
            raise ValueError("strauss needs a fixed interaction radius R")
        object.__setattr__(self, "fixed", {k: float(v) for k, v in self.fixed.items()})

    @property
    def param_names(self) -> tuple[str, ...]:
        return MODEL_TYPES[self.name].free

    def make(self, values) -> ModelSpec:
        """Build a spec from free-parameter values (mapping or sequence)."""
        if not isinstance(values, Mapping):
            values = dict(zip(self.param_names, (float(v) for v in values)))
        return MODEL_TYPES[self.name](**values, **self.fixed)

    def values(self, m: ModelSpec) -> tuple[float, ...]:
        if m.kind != self.name:
            raise ValueError(f"expected a {self.name} spec, got {m.kind}")
        return tuple(float(getattr(m, k)) for k in self.param_names)

    @classmethod
    def of(cls, m: ModelSpec) -> "ModelKind":
        fixed = {f.name: getattr(m, f.name) for f in fields(m) if f.name not in m.free}
        return cls(m.kind, fixed)

