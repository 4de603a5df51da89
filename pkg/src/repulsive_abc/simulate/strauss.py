"""Strauss / Strauss-hard-core simulation by birth-death-shift Metropolis-Hastings.

The chain state lives in flat arrays indexed ``0..n-1`` plus a uniform cell
grid whose cells are at least twice the interaction reach, so every
conditional-intensity evaluation only visits a 2x2 block of cells.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from ..models import Strauss
from ..pattern import PointPattern, Window

__all__ = ["StraussSimControls", "papangelou_strauss", "simulate_strauss", "StraussRunaway"]


class StraussRunaway(RuntimeError):
    """The chain exceeded its hard cap on the number of points."""


@dataclass(frozen=True)
class StraussSimControls:
    burn_in_sweeps: int = 200
    p_birth: float = 0.4
    p_death: float = 0.4
    p_shift: float = 0.2
    max_points: int = 100_000

    def __post_init__(self):
        probs = (self.p_birth, self.p_death, self.p_shift)
        if min(probs) < 0 or abs(sum(probs) - 1.0) > 1e-12:
            raise ValueError(f"proposal probabilities must be nonnegative and sum to 1, got {probs}")
        if self.burn_in_sweeps < 1:
            raise ValueError("burn_in_sweeps must be >= 1")
        if self.max_points < 1:
            raise ValueError("max_points must be >= 1")


def papangelou_strauss(u, p: PointPattern, m: Strauss) -> float:
    """Conditional intensity of adding ``u`` to ``p``.

    A point of ``p`` coinciding with ``u`` is treated as ``u`` itself and
    skipped.
    """
    pts = p.points
    if len(pts) == 0:
        return m.beta
    d = np.hypot(pts[:, 0] - u[0], pts[:, 1] - u[1])
    d = d[d > 0]
    if m.h > 0 and np.any(d < m.h):
        return 0.0
    t = int(np.count_nonzero(d <= m.R))
    if t == 0:
        return m.beta
    return m.beta * m.gamma**t


_U = np.uint64


@numba.njit(cache=True, nogil=True, inline="always")
def _rand(state):
    """xoroshiro128+ uniform on [0, 1); far cheaper than numba's np.random here."""
    s0 = state[0]
    s1 = state[1]
    result = s0 + s1
    s1 ^= s0
    state[0] = ((s0 << _U(24)) | (s0 >> _U(40))) ^ s1 ^ (s1 << _U(16))
    state[1] = (s1 << _U(37)) | (s1 >> _U(27))
    return (result >> _U(11)) * (1.0 / 9007199254740992.0)


_FAR = 1e30  # coordinate of empty cell slots; never within any radius


@numba.njit(cache=True, nogil=True, inline="always")
def _cell_of(x, y, x0, y0, icx, icy, ncx, ncy):
    """Interior cell holding (x, y); the grid has a one-cell empty halo."""
    cx = min(max(int((x - x0) * icx), 0), ncx - 1)
    cy = min(max(int((y - y0) * icy), 0), ncy - 1)
    return (cx + 1) * (ncy + 2) + cy + 1


@numba.njit(cache=True, nogil=True, inline="always")
def _neighbours(ux, uy, CX, CY, x0, y0, icx, icy, ncx, ncy, R2, h2):
    """Return (number of points within R, hard-core violated) for location u.

    Cells are at least twice the reach wide, so the disc around u meets at
    most the 2x2 block on the side of u's cell that u is closest to. Every
    cell is scanned over its full fixed capacity (empty slots sit far away),
    which keeps the loop free of data-dependent branches. A point evaluating
    its own neighbourhood is parked far away by the caller first.
    """
    fx = (ux - x0) * icx
    fy = (uy - y0) * icy
    cx = min(max(int(fx), 0), ncx - 1)
    cy = min(max(int(fy), 0), ncy - 1)
    gx = cx if fx - cx < 0.5 else cx + 1
    gy = cy if fy - cy < 0.5 else cy + 1
    cap = CX.shape[1]
    t = 0
    dmin = np.inf
    for ox in range(2):
        for oy in range(2):
            c = (gx + ox) * (ncy + 2) + gy + oy
            for s in range(cap):
                dx = CX[c, s] - ux
                dy = CY[c, s] - uy
                d2 = dx * dx + dy * dy
                t += d2 <= R2
                dmin = min(dmin, d2)
    return t, dmin < h2


@numba.njit(cache=True, nogil=True, inline="always")
def _neighbours_of(i, xs, ys, cell_of, slot_of, CX, CY, x0, y0, icx, icy, ncx, ncy, R2, h2):
    """``_neighbours`` for existing point ``i``, excluding ``i`` itself."""
    c = cell_of[i]
    s = slot_of[i]
    CX[c, s] = _FAR
    res = _neighbours(xs[i], ys[i], CX, CY, x0, y0, icx, icy, ncx, ncy, R2, h2)
    CX[c, s] = xs[i]
    return res


@numba.njit(cache=True, nogil=True, inline="always")
def _cond_intensity(t, hard, beta, gamma, gpow):
    if hard:
        return 0.0
    if t < gpow.shape[0]:
        return beta * gpow[t]
    return beta * gamma**t


@numba.njit(cache=True, nogil=True, inline="always")
def _cell_remove(c, s, CX, CY, CID, cnt, slot_of):
    last = cnt[c] - 1
    moved = CID[c, last]
    CX[c, s] = CX[c, last]
    CY[c, s] = CY[c, last]
    CID[c, s] = moved
    slot_of[moved] = s
    CX[c, last] = _FAR
    CY[c, last] = _FAR
    CID[c, last] = -1
    cnt[c] = last


@numba.njit(cache=True, nogil=True, inline="always")
def _cell_add(c, i, x, y, CX, CY, CID, cnt, cell_of, slot_of):
    s = cnt[c]
    CX[c, s] = x
    CY[c, s] = y
    CID[c, s] = i
    cell_of[i] = c
    slot_of[i] = s
    cnt[c] = s + 1


@numba.njit(cache=True, nogil=True)
def _strauss_chain(
    state, n0, beta, gamma, R, h, x0, y0, a, b, sweeps, p_birth, p_death, max_n, cell_cap
):
    """Run the chain. Status: 0 ok, 1 runaway, 2 cell overflow."""
    area = a * b
    reach = 2.0 * max(R, h)
    ncx = min(max(int(a / reach), 1), 256)
    ncy = min(max(int(b / reach), 1), 256)
    icx = ncx / a
    icy = ncy / b
    R2 = R * R
    h2 = h * h
    # beta * gamma^t via a lookup for the small t that dominate; gamma == 0
    # gives zero intensity for any t > 0
    gpow = np.empty(64)
    gpow[0] = 1.0
    for k in range(1, 64):
        gpow[k] = gpow[k - 1] * gamma

    ncell = (ncx + 2) * (ncy + 2)
    xs = np.empty(max_n + 1)
    ys = np.empty(max_n + 1)
    cell_of = np.empty(max_n + 1, np.int64)
    slot_of = np.empty(max_n + 1, np.int64)
    CX = np.full((ncell, cell_cap), _FAR)
    CY = np.full((ncell, cell_cap), _FAR)
    CID = np.full((ncell, cell_cap), -1, np.int64)
    cnt = np.zeros(ncell, np.int64)
    n = 0

    # overdispersed start: Poisson(beta) thinned to feasibility
    for _ in range(n0):
        ux = x0 + a * _rand(state)
        uy = y0 + b * _rand(state)
        t, hard = _neighbours(ux, uy, CX, CY, x0, y0, icx, icy, ncx, ncy, R2, h2)
        if hard or (gamma == 0.0 and t > 0):
            continue
        if n >= max_n:
            return xs[:n], ys[:n], 1
        c = _cell_of(ux, uy, x0, y0, icx, icy, ncx, ncy)
        if cnt[c] >= cell_cap:
            return xs[:n], ys[:n], 2
        xs[n] = ux
        ys[n] = uy
        _cell_add(c, n, ux, uy, CX, CY, CID, cnt, cell_of, slot_of)
        n += 1

    base_len = int(math.ceil(beta * area))
    for _sweep in range(sweeps):
        steps = max(n, base_len)
        for _step in range(steps):
            move = _rand(state)
            if move < p_birth:
                ux = x0 + a * _rand(state)
                uy = y0 + b * _rand(state)
                t, hard = _neighbours(ux, uy, CX, CY, x0, y0, icx, icy, ncx, ncy, R2, h2)
                lam = _cond_intensity(t, hard, beta, gamma, gpow)
                if _rand(state) * (n + 1) < lam * area:
                    if n >= max_n:
                        return xs[:n], ys[:n], 1
                    c = _cell_of(ux, uy, x0, y0, icx, icy, ncx, ncy)
                    if cnt[c] >= cell_cap:
                        return xs[:n], ys[:n], 2
                    xs[n] = ux
                    ys[n] = uy
                    _cell_add(c, n, ux, uy, CX, CY, CID, cnt, cell_of, slot_of)
                    n += 1
            else:
                if n == 0:
                    continue
                i = int(_rand(state) * n)
                if i >= n:
                    i = n - 1
                t, hard = _neighbours_of(i, xs, ys, cell_of, slot_of, CX, CY, x0, y0, icx, icy, ncx, ncy, R2, h2)
                lam_i = _cond_intensity(t, hard, beta, gamma, gpow)
                if move < p_birth + p_death:
                    if _rand(state) * lam_i * area >= n:
                        continue
                    _cell_remove(cell_of[i], slot_of[i], CX, CY, CID, cnt, slot_of)
                    # relabel point n-1 as i
                    n -= 1
                    if i != n:
                        xs[i] = xs[n]
                        ys[i] = ys[n]
                        cell_of[i] = cell_of[n]
                        slot_of[i] = slot_of[n]
                        CID[cell_of[i], slot_of[i]] = i
                else:
                    ux = x0 + a * _rand(state)
                    uy = y0 + b * _rand(state)
                    ci = cell_of[i]
                    CX[ci, slot_of[i]] = _FAR
                    t2, hard2 = _neighbours(ux, uy, CX, CY, x0, y0, icx, icy, ncx, ncy, R2, h2)
                    CX[ci, slot_of[i]] = xs[i]
                    lam_u = _cond_intensity(t2, hard2, beta, gamma, gpow)
                    if _rand(state) * lam_i >= lam_u:
                        continue
                    c_new = _cell_of(ux, uy, x0, y0, icx, icy, ncx, ncy)
                    c = cell_of[i]
                    if c_new == c:
                        CX[c, slot_of[i]] = ux
                        CY[c, slot_of[i]] = uy
                    else:
                        if cnt[c_new] >= cell_cap:
                            return xs[:n], ys[:n], 2
                        _cell_remove(c, slot_of[i], CX, CY, CID, cnt, slot_of)
                        _cell_add(c_new, i, ux, uy, CX, CY, CID, cnt, cell_of, slot_of)
                    xs[i] = ux
                    ys[i] = uy
    return xs[:n], ys[:n], 0


def simulate_strauss(
    m: Strauss, w: Window, rng: np.random.Generator, ctrl: StraussSimControls | None = None
) -> PointPattern:
    """Approximately stationary draw from the Strauss (hard-core) model on ``w``."""
    ctrl = ctrl or StraussSimControls()
    seed = rng.integers(1, 2**63, size=2).astype(np.uint64)
    n0 = int(rng.poisson(m.beta * w.area()))
    reach = 2.0 * max(m.R, m.h)
    ncells = min(max(int(w.width / reach), 1), 256) * min(max(int(w.height / reach), 1), 256)
    # every slot is scanned, so start tight; beta bounds the density since gamma <= 1
    mu = m.beta * w.area() / ncells
    cap = max(4, int(mu + 4.0 * math.sqrt(mu) + 3.0))
    while True:
        xs, ys, status = _strauss_chain(
            seed.copy(), n0, float(m.beta), float(m.gamma), float(m.R), float(m.h),
            w.x_min, w.y_min, w.width, w.height, int(ctrl.burn_in_sweeps),
            ctrl.p_birth, ctrl.p_death, int(ctrl.max_points), cap,
        )
        if status == 2:
            # cell capacity does not touch the random stream, so rerunning is exact
            cap *= 2
            continue
        if status == 1:
            raise StraussRunaway(f"Strauss chain exceeded {ctrl.max_points} points for {m}")
        break
    pts = np.column_stack([xs, ys])
    # guard against round-off pushing a coordinate past the closed boundary
    np.clip(pts[:, 0], w.x_min, w.x_max, out=pts[:, 0])
    np.clip(pts[:, 1], w.y_min, w.y_max, out=pts[:, 1])
    return PointPattern(pts, w)
