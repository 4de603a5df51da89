"""Independent (or bound-coupled) priors over the free model parameters."""
from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy import stats

from ..models import ModelKind, ModelSpec, alpha_max, sigma_max

__all__ = [
    "Uniform",
    "Gamma",
    "Beta",
    "ParamPrior",
    "PriorSpec",
    "parse_prior",
    "transform_params",
    "inverse_transform",
    "to_transformed",
    "GAMMA_CLAMP",
]

GAMMA_CLAMP = 1e-8


def _bound_sigma_max(values, fixed):
    return sigma_max(values["tau"])


def _bound_alpha_max(values, fixed):
    return alpha_max(values["tau"], fixed["nu"])


BOUNDS = {"sigma_max": _bound_sigma_max, "alpha_max": _bound_alpha_max}


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float | None = None  # None: upper limit supplied by the parameter's bound

    def describe(self, bound=None):
        return f"uniform({self.lo:g}, {bound if self.hi is None else format(self.hi, 'g')})"


@dataclass(frozen=True)
class Gamma:
    """Gamma with shape/rate parameterization (mean shape/rate)."""

    shape: float
    rate: float

    def describe(self, bound=None):
        return f"gamma({self.shape:g}, {self.rate:g})"


@dataclass(frozen=True)
class Beta:
    a: float
    b: float

    def describe(self, bound=None):
        s = f"beta({self.a:g}, {self.b:g})"
        return f"{s} * {bound}" if bound else s


@dataclass(frozen=True)
class ParamPrior:
    """Prior for one parameter.

    ``bound`` names an upper limit computed from earlier parameters
    (``"sigma_max"`` or ``"alpha_max"``). A bounded ``Uniform`` runs from
    ``lo`` to the bound; a bounded ``Beta`` is the law of ``value / bound``.
    """

    name: str
    dist: Uniform | Gamma | Beta
    bound: str | None = None

    def __post_init__(self):
        if self.bound is not None and self.bound not in BOUNDS:
            raise ValueError(f"unknown bound {self.bound!r}")
        d = self.dist
        if isinstance(d, Uniform):
            if (d.hi is None) != (self.bound is not None):
                raise ValueError(f"{self.name}: a uniform prior needs exactly one of an upper limit or a bound")
            if d.hi is not None and not d.hi > d.lo:
                raise ValueError(f"{self.name}: uniform needs lo < hi")
        elif isinstance(d, Gamma):
            if self.bound is not None:
                raise ValueError(f"{self.name}: gamma priors cannot be bounded")
            if not (d.shape > 0 and d.rate > 0):
                raise ValueError(f"{self.name}: gamma needs positive shape and rate")
        elif isinstance(d, Beta):
            if not (d.a > 0 and d.b > 0):
                raise ValueError(f"{self.name}: beta needs positive parameters")

    def _frozen(self, upper):
        d = self.dist
        if isinstance(d, Uniform):
            hi = upper if d.hi is None else d.hi
            return stats.uniform(d.lo, hi - d.lo), 1.0
        if isinstance(d, Gamma):
            return stats.gamma(d.shape, scale=1.0 / d.rate), 1.0
        scale = upper if self.bound is not None else 1.0
        return stats.beta(d.a, d.b), scale

    def logpdf(self, x: float, upper: float | None) -> float:
        d = self.dist
        if isinstance(d, Uniform):
            hi = upper if d.hi is None else d.hi
            if not hi > d.lo:
                return -math.inf
            return -math.log(hi - d.lo) if d.lo <= x <= hi else -math.inf
        dist, scale = self._frozen(upper)
        return float(dist.logpdf(x / scale)) - math.log(scale)

    def sample(self, rng: np.random.Generator, upper: float | None) -> float:
        d = self.dist
        if isinstance(d, Uniform):
            hi = upper if d.hi is None else d.hi
            return float(d.lo + (hi - d.lo) * rng.random())
        if isinstance(d, Gamma):
            return float(rng.gamma(d.shape, 1.0 / d.rate))
        z = float(rng.beta(d.a, d.b))
        return z * (upper if self.bound is not None else 1.0)

    def describe(self) -> str:
        return f"{self.name} ~ {self.dist.describe(self.bound)}"


@dataclass(frozen=True)
class PriorSpec:
    """Joint prior over ``kind.param_names``, sampled in that order."""

    kind: ModelKind
    params: tuple[ParamPrior, ...]

    def __post_init__(self):
        names = tuple(p.name for p in self.params)
        if names != self.kind.param_names:
            raise ValueError(f"prior for {self.kind.name} must cover {self.kind.param_names} in order, got {names}")
        if self.kind.name == "strauss":
            g = self.params[1]
            lo, hi = _support(g)
            if lo < 0 or hi > 1:
                raise ValueError("gamma prior support must lie within [0, 1]")

    def _upper(self, p: ParamPrior, values: Mapping[str, float]):
        return BOUNDS[p.bound](values, self.kind.fixed) if p.bound else None

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        values: dict[str, float] = {}
        for p in self.params:
            values[p.name] = p.sample(rng, self._upper(p, values))
        return np.array([values[k] for k in self.kind.param_names])

    def logpdf(self, theta) -> float:
        values: dict[str, float] = {}
        total = 0.0
        for p, x in zip(self.params, theta):
            total += p.logpdf(float(x), self._upper(p, values))
            if total == -math.inf:
                return total
            values[p.name] = float(x)
        return total

    def in_support(self, theta) -> bool:
        return self.logpdf(theta) > -math.inf

    def logpdf_transformed(self, phi) -> float:
        """Log density of the log-transformed parameters (includes the Jacobian)."""
        phi = np.asarray(phi, dtype=float)
        lp = self.logpdf(np.exp(phi))
        return lp + float(phi.sum()) if lp > -math.inf else lp

    def describe(self) -> list[str]:
        return [p.describe() for p in self.params]


def _support(p: ParamPrior) -> tuple[float, float]:
    d = p.dist
    if isinstance(d, Uniform):
        return d.lo, (math.inf if d.hi is None else d.hi)
    if isinstance(d, Gamma):
        return 0.0, math.inf
    return 0.0, (math.inf if p.bound else 1.0)


_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_PATTERNS = [
    (re.compile(rf"^uniform\(\s*({_NUM})\s*,\s*({_NUM})\s*\)$"), lambda m: (Uniform(float(m[1]), float(m[2])), None)),
    (re.compile(rf"^uniform\(\s*({_NUM})\s*,\s*(sigma_max|alpha_max)\s*\)$"), lambda m: (Uniform(float(m[1])), m[2])),
    (re.compile(rf"^gamma\(\s*({_NUM})\s*,\s*({_NUM})\s*\)$"), lambda m: (Gamma(float(m[1]), float(m[2])), None)),
    (re.compile(rf"^beta\(\s*({_NUM})\s*,\s*({_NUM})\s*\)$"), lambda m: (Beta(float(m[1]), float(m[2])), None)),
    (
        re.compile(rf"^beta\(\s*({_NUM})\s*,\s*({_NUM})\s*\)\s*\*\s*(sigma_max|alpha_max)$"),
        lambda m: (Beta(float(m[1]), float(m[2])), m[3]),
    ),
]


def parse_prior(name: str, text: str) -> ParamPrior:
    """Parse ``uniform(50, 400)``, ``uniform(0.001, sigma_max)``,
    ``gamma(200, 2)``, ``beta(1, 6)`` or ``beta(6, 1) * alpha_max``."""
    t = text.strip().lower()
    for rx, build in _PATTERNS:
        m = rx.match(t)
        if m:
            dist, bound = build(m)
            return ParamPrior(name, dist, bound)
    raise ValueError(f"cannot parse prior for {name}: {text!r}")


def transform_params(m: ModelSpec) -> np.ndarray:
    """Log of the free parameters; a Strauss ``gamma`` of 0 is clamped first."""
    kind = ModelKind.of(m)
    vals = np.array(kind.values(m), dtype=float)
    if m.kind == "strauss" and vals[1] < GAMMA_CLAMP:
        warnings.warn(f"gamma={vals[1]} clamped to {GAMMA_CLAMP} before log transform", stacklevel=2)
        vals[1] = GAMMA_CLAMP
    if np.any(vals <= 0):
        raise ValueError(f"cannot log-transform nonpositive parameters {vals}")
    return np.log(vals)


def to_transformed(values, kind: ModelKind) -> np.ndarray:
    """Log scale for raw free-parameter values, with the Strauss ``gamma`` clamp applied silently."""
    v = np.array(values, dtype=float)
    if kind.name == "strauss":
        v[1] = max(v[1], GAMMA_CLAMP)
    return np.log(v)


def inverse_transform(phi, kind: ModelKind) -> ModelSpec:
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (len(kind.param_names),):
        raise ValueError(f"expected {len(kind.param_names)} transformed values, got shape {phi.shape}")
    return kind.make(np.exp(phi))
