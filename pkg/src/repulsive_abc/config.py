"""INI-style run configuration with a record of every resolved value.

Each subcommand reads the keys it needs through :class:`RunConfig`, which
applies defaults, validates types and remembers what it returned. The
record (``resolved``) is embedded in every output so a run can be repeated.
"""
from __future__ import annotations

import configparser
import math
from pathlib import Path

import numpy as np

from .inference.priors import ParamPrior, PriorSpec, parse_prior
from .models import MODEL_TYPES, ModelKind
from .pattern import SummaryConfig, Window
from .simulate import StraussSimControls

__all__ = ["ConfigError", "RunConfig"]

_MISSING = object()


class ConfigError(ValueError):
    pass


class RunConfig:
    def __init__(self, parser: configparser.ConfigParser, base: Path):
        self._p = parser
        self.base = base
        self.resolved: dict[str, dict[str, object]] = {}

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        p = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        p.optionxform = str  # keep key case (R, h)
        try:
            p.read(path)
        except configparser.Error as e:
            raise ConfigError(f"{path}: {e}") from None
        return cls(p, path.parent)

    @classmethod
    def from_string(cls, text: str, base=".") -> "RunConfig":
        p = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        p.optionxform = str
        p.read_string(text)
        return cls(p, Path(base))

    def _record(self, section, key, value):
        self.resolved.setdefault(section, {})[key] = value
        return value

    def has(self, section, key=None) -> bool:
        if key is None:
            return self._p.has_section(section)
        return self._p.has_option(section, key)

    def keys(self, section) -> list[str]:
        return list(self._p[section]) if self._p.has_section(section) else []

    def raw(self, section, key, default=_MISSING) -> str:
        if self._p.has_option(section, key):
            return self._p.get(section, key).strip()
        if default is _MISSING:
            raise ConfigError(f"missing [{section}] {key}")
        return default

    def str(self, section, key, default=_MISSING) -> str:
        return self._record(section, key, self.raw(section, key, default))

    def _typed(self, section, key, default, conv, what):
        v = self.raw(section, key, default)
        if v is default and default is not _MISSING:
            return self._record(section, key, v)
        try:
            return self._record(section, key, conv(v))
        except (TypeError, ValueError):
            raise ConfigError(f"[{section}] {key} = {v!r} is not {what}") from None

    def int(self, section, key, default=_MISSING, minimum=None) -> int:
        v = self._typed(section, key, default, int, "an integer")
        if minimum is not None and v is not None and v < minimum:
            raise ConfigError(f"[{section}] {key} must be >= {minimum}")
        return v

    def float(self, section, key, default=_MISSING) -> float:
        return self._typed(section, key, default, float, "a number")

    def bool(self, section, key, default=_MISSING) -> bool:
        def conv(v):
            t = v.lower()
            if t in ("1", "true", "yes", "on"):
                return True
            if t in ("0", "false", "no", "off"):
                return False
            raise ValueError(v)

        return self._typed(section, key, default, conv, "a boolean")

    def floats(self, section, key, default=_MISSING) -> tuple[float, ...]:
        def conv(v):
            if isinstance(v, tuple):
                return v
            return tuple(float(x) for x in v.replace(",", " ").split())

        return self._typed(section, key, default, conv, "a list of numbers")

    def path(self, section, key) -> Path:
        p = Path(self.str(section, key))
        p = p if p.is_absolute() else self.base / p
        if not p.exists():
            raise ConfigError(f"[{section}] {key}: file not found: {p}")
        return p

    # composite blocks

    def window(self) -> Window:
        vals = [self.float("window", k, d) for k, d in
                (("x_min", 0.0), ("x_max", 1.0), ("y_min", 0.0), ("y_max", 1.0))]
        try:
            return Window(*vals)
        except ValueError as e:
            raise ConfigError(f"[window] {e}") from None

    def model_kind(self, section="model", allow_profile=False) -> tuple[ModelKind, bool]:
        """Model kind with its fixed parameters; ``R = profile`` defers R to profiling."""
        name = self.str(section, "kind")
        if name not in MODEL_TYPES:
            raise ConfigError(f"[{section}] kind must be one of {sorted(MODEL_TYPES)}")
        cls = MODEL_TYPES[name]
        fixed = {}
        profile = False
        for k in self.keys(section):
            if k == "kind" or k in cls.free:
                continue
            if name == "strauss" and k == "R" and self.raw(section, k).lower() == "profile":
                if not allow_profile:
                    raise ConfigError(f"[{section}] R = profile is only valid for fit")
                profile = True
                self.str(section, k)
                continue
            fixed[k] = self.float(section, k)
        if profile:
            fixed["R"] = 1.0  # placeholder until profiled
        try:
            return ModelKind(name, fixed), profile
        except ValueError as e:
            raise ConfigError(f"[{section}] {e}") from None

    def model_spec(self, section="model"):
        kind, _ = self.model_kind(section)
        vals = {k: self.float(section, k) for k in kind.param_names}
        try:
            return kind.make(vals)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"[{section}] {e}") from None

    def prior(self, kind: ModelKind, section="prior") -> PriorSpec:
        params: list[ParamPrior] = []
        for name in kind.param_names:
            text = self.str(section, name)
            try:
                params.append(parse_prior(name, text))
            except ValueError as e:
                raise ConfigError(f"[{section}] {e}") from None
        try:
            return PriorSpec(kind, tuple(params))
        except ValueError as e:
            raise ConfigError(f"[{section}] {e}") from None

    def summary(self, R: float | None = None) -> SummaryConfig:
        """Summary radii; ``r_grid = R`` means the single Strauss radius ``R``."""
        s = "summary"
        if self.has(s, "r_grid") and self.raw(s, "r_grid") == "R":
            if R is None:
                raise ConfigError("[summary] r_grid = R needs a Strauss model")
            self.str(s, "r_grid")
            grid = (R,)
        elif self.has(s, "r_grid"):
            grid = self.floats(s, "r_grid")
        else:
            r_max = self.float(s, "r_max")
            m = self.int(s, "m", minimum=1)
            grid = tuple(r_max * np.arange(1, m + 1) / m)
        try:
            return SummaryConfig(
                grid,
                include_log_n=self.bool(s, "include_log_n", True),
                edge_correction=self.str(s, "edge_correction", "translation"),
                allow_large_r=self.bool(s, "allow_large_r", False),
            )
        except ValueError as e:
            raise ConfigError(f"[summary] {e}") from None

    def strauss_controls(self) -> StraussSimControls:
        s = "strauss"
        try:
            return StraussSimControls(
                burn_in_sweeps=self.int(s, "burn_in_sweeps", 200),
                p_birth=self.float(s, "p_birth", 0.4),
                p_death=self.float(s, "p_death", 0.4),
                p_shift=self.float(s, "p_shift", 0.2),
                max_points=self.int(s, "max_points", 100_000),
            )
        except ValueError as e:
            raise ConfigError(f"[strauss] {e}") from None

    def epsilon(self, section, key) -> float | None:
        v = self.raw(section, key, None)
        if v is None:
            return None
        if v.lower() in ("inf", "infinity"):
            self._record(section, key, "inf")
            return math.inf
        eps = self.float(section, key)
        if not eps >= 0:
            raise ConfigError(f"[{section}] {key} must be nonnegative")
        return eps
