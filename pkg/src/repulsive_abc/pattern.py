"""Point patterns on rectangular windows and their second-order summaries.

Everything here is a pure function of its inputs. The K-function uses the
translation edge correction, which has an exact closed form on rectangles.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

__all__ = [
    "Window",
    "PointPattern",
    "SummaryConfig",
    "pair_distances",
    "close_pair_count",
    "translation_correction",
    "k_hat",
    "k_hat_curve",
    "l_hat",
    "l_curve",
    "count_in_region",
    "counts_in_regions",
]


@dataclass(frozen=True)
class Window:
    """Closed axis-aligned rectangle ``[x_min, x_max] x [y_min, y_max]``."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        vals = (self.x_min, self.x_max, self.y_min, self.y_max)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"window bounds must be finite, got {vals}")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError(f"degenerate window {vals}")

    @classmethod
    def unit(cls) -> "Window":
        return cls(0.0, 1.0, 0.0, 1.0)

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    def area(self) -> float:
        return self.width * self.height

    def min_side(self) -> float:
        return min(self.width, self.height)

    def contains(self, xy) -> np.ndarray:
        """Boolean mask of rows of ``xy`` lying in the closed window."""
        xy = np.atleast_2d(np.asarray(xy, dtype=float))
        return (
            (xy[:, 0] >= self.x_min)
            & (xy[:, 0] <= self.x_max)
            & (xy[:, 1] >= self.y_min)
            & (xy[:, 1] <= self.y_max)
        )

    def covers(self, other: "Window") -> bool:
        return (
            other.x_min >= self.x_min
            and other.x_max <= self.x_max
            and other.y_min >= self.y_min
            and other.y_max <= self.y_max
        )

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.x_max, self.y_min, self.y_max)


@dataclass(frozen=True)
class PointPattern:
    """A finite planar point set observed in ``window``.

    ``points`` is stored as a read-only ``(n, 2)`` float array.
    """

    points: np.ndarray
    window: Window

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.size == 0:
            pts = np.empty((0, 2))
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"points must have shape (n, 2), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        outside = np.flatnonzero(~self.window.contains(pts)) if len(pts) else []
        if len(outside):
            raise ValueError(f"points outside window at rows {outside[:10].tolist()}")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def n(self) -> int:
        return int(self.points.shape[0])

    def __len__(self) -> int:
        return self.n()

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]

    def intensity(self) -> float:
        return self.n() / self.window.area()


@dataclass(frozen=True)
class SummaryConfig:
    """Radii at which K-hat is evaluated for summary statistics.

    Parameters
    ----------
    r_grid : sequence of float
        Strictly increasing positive radii.
    include_log_n : bool
        Whether the log point count enters the feature vector.
    edge_correction : {"translation", "none"}
        ``"none"`` gives K-hat proportional to the raw close-pair count,
        which keeps (log n, K-hat_R) exactly sufficient for the Strauss
        model at radius R.
    allow_large_r : bool
        Permit radii at or beyond half the shorter window side (warns).
    """

    r_grid: tuple[float, ...]
    include_log_n: bool = True
    edge_correction: str = "translation"
    allow_large_r: bool = field(default=False, compare=False)

    def __post_init__(self):
        r = tuple(float(v) for v in np.atleast_1d(self.r_grid))
        object.__setattr__(self, "r_grid", r)
        if len(r) < 1:
            raise ValueError("r_grid must contain at least one radius")
        if any(v <= 0 for v in r):
            raise ValueError("radii must be positive")
        if any(b <= a for a, b in zip(r, r[1:])):
            raise ValueError("radii must be strictly increasing")
        if self.edge_correction not in ("translation", "none"):
            raise ValueError(f"unknown edge correction {self.edge_correction!r}")

    @classmethod
    def equally_spaced(cls, r_max: float, m: int, **kw) -> "SummaryConfig":
        """``m`` radii ``r_max/m, 2 r_max/m, ..., r_max``."""
        return cls(tuple(r_max * np.arange(1, m + 1) / m), **kw)

    @property
    def m(self) -> int:
        return len(self.r_grid)

    def check_window(self, w: Window) -> None:
        cap = w.min_side() / 2
        if self.r_grid[-1] >= cap:
            msg = f"largest radius {self.r_grid[-1]} >= half the shorter side ({cap})"
            if not self.allow_large_r:
                raise ValueError(msg)
            warnings.warn(msg, stacklevel=2)


def pair_distances(p: PointPattern, r_max: float):
    """Unordered index pairs ``(i, j)`` with ``i < j`` at distance ``<= r_max``.

    Returns ``(i, j, dx, dy, d)`` arrays. The KD-tree only proposes
    candidates; membership is decided on the exact Euclidean distance so the
    result agrees with a brute-force double loop.
    """
    pts = p.points
    if p.n() < 2:
        e = np.empty(0)
        return np.empty(0, int), np.empty(0, int), e, e, e
    tree = cKDTree(pts)
    cand = tree.query_pairs(r_max * (1 + 1e-9) + 1e-300, output_type="ndarray")
    if len(cand) == 0:
        e = np.empty(0)
        return np.empty(0, int), np.empty(0, int), e, e, e
    i, j = cand[:, 0], cand[:, 1]
    dx = pts[i, 0] - pts[j, 0]
    dy = pts[i, 1] - pts[j, 1]
    d = np.sqrt(dx * dx + dy * dy)
    keep = d <= r_max
    return i[keep], j[keep], dx[keep], dy[keep], d[keep]


def close_pair_count(p: PointPattern, R: float) -> int:
    """Number of unordered pairs at distance ``<= R``."""
    if R <= 0:
        raise ValueError("R must be positive")
    return int(len(pair_distances(p, R)[0]))


def translation_correction(xi, eta, w: Window) -> float:
    """Translation edge-correction weight ``|D| / ((a-|dx|)(b-|dy|))``."""
    dx = abs(float(xi[0]) - float(eta[0]))
    dy = abs(float(xi[1]) - float(eta[1]))
    if dx >= w.width or dy >= w.height:
        raise ValueError(f"displacement ({dx}, {dy}) does not fit in the window")
    return w.area() / ((w.width - dx) * (w.height - dy))


def _pair_weights(w: Window, dx, dy, correction: str) -> np.ndarray:
    if correction == "none":
        return np.ones_like(dx)
    return w.area() / ((w.width - np.abs(dx)) * (w.height - np.abs(dy)))


def k_hat_curve(p: PointPattern, radii: Sequence[float], correction: str = "translation") -> np.ndarray:
    """K-hat at each radius in ``radii`` (any order) in a single pass.

    Patterns with fewer than two points raise; callers that need a value for
    such patterns handle the case themselves.
    """
    n = p.n()
    if n < 2:
        raise ValueError(f"K-hat needs at least 2 points, got {n}")
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0:
        return np.empty(0)
    _, _, dx, dy, d = pair_distances(p, float(radii.max()))
    keep = d > 0
    d, wts = d[keep], _pair_weights(p.window, dx[keep], dy[keep], correction)
    order = np.argsort(d, kind="stable")
    d, cum = d[order], np.concatenate([[0.0], np.cumsum(wts[order])])
    idx = np.searchsorted(d, radii, side="right")
    # each unordered pair stands for two ordered pairs
    return p.window.area() * 2.0 * cum[idx] / (n * (n - 1))


def k_hat(p: PointPattern, r: float, correction: str = "translation") -> float:
    if r <= 0:
        raise ValueError("r must be positive")
    return float(k_hat_curve(p, [r], correction)[0])


def l_hat(p: PointPattern, r: float, correction: str = "translation") -> float:
    return math.sqrt(k_hat(p, r, correction) / math.pi)


def l_curve(p: PointPattern, cfg: SummaryConfig) -> list[tuple[float, float]]:
    """``(r, L-hat(r) - r)`` over the configured grid."""
    k = k_hat_curve(p, cfg.r_grid, cfg.edge_correction)
    return [(r, math.sqrt(kv / math.pi) - r) for r, kv in zip(cfg.r_grid, k)]


def count_in_region(p: PointPattern, b: Window) -> int:
    if not p.window.covers(b):
        raise ValueError("region must lie inside the pattern window")
    return int(np.count_nonzero(b.contains(p.points))) if p.n() else 0


def counts_in_regions(p: PointPattern, regions: np.ndarray) -> np.ndarray:
    """Point counts for many closed rectangles given as rows ``(x0, x1, y0, y1)``."""
    regions = np.asarray(regions, dtype=float)
    if p.n() == 0:
        return np.zeros(len(regions), dtype=np.int64)
    x, y = p.x[None, :], p.y[None, :]
    inside = (
        (x >= regions[:, 0:1])
        & (x <= regions[:, 1:2])
        & (y >= regions[:, 2:3])
        & (y <= regions[:, 3:4])
    )
    return inside.sum(axis=1)
