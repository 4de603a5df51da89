"""Determinantal point processes via truncated Fourier-basis spectral expansion.

The kernel on a rectangle of sides ``a x b`` is approximated by
``C(x, y) = sum_k lam_k psi_k(x) conj(psi_k(y))`` with
``psi_k(x) = exp(2 pi i (k1 x1/a + k2 x2/b)) / sqrt(ab)`` and
``lam_k = phi(k1/a, k2/b)``, ``phi`` being the spectral density of the
stationary kernel. Sampling follows the projection-DPP recipe: Bernoulli
selection of basis functions, then sequential rejection sampling of points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr
from scipy.linalg.blas import zgeru
from scipy.special import gamma as gamma_fn

from ..models import DppGauss, DppPowerExp
from ..pattern import PointPattern, Window

__all__ = [
    "SpectralApprox",
    "DppSamplingError",
    "dpp_spectral_density",
    "build_spectral_approx",
    "simulate_dpp",
]

RETAINED_MASS = 0.99
# relative size of a ring contribution below which E[N] is considered converged
_CONVERGED = 1e-14
_EIG_TOL = 1e-9
# fraction of remaining dimensions at which the sampler changes representation
_SWITCH = 0.4


class DppSamplingError(RuntimeError):
    pass


def dpp_spectral_density(m: DppGauss | DppPowerExp, freq) -> np.ndarray:
    """Spectral density at frequency vectors ``freq`` (shape ``(..., 2)``)."""
    freq = np.asarray(freq, dtype=float)
    r2 = np.sum(freq * freq, axis=-1)
    if isinstance(m, DppGauss):
        s2 = m.sigma * m.sigma
        return m.tau * math.pi * s2 * np.exp(-(math.pi**2) * s2 * r2)
    if isinstance(m, DppPowerExp):
        c = m.tau * m.alpha**2 / (math.pi * gamma_fn(2.0 / m.nu + 1.0))
        return c * np.exp(-((m.alpha * np.sqrt(r2)) ** m.nu))
    raise TypeError(f"not a DPP spec: {m!r}")


@dataclass(frozen=True)
class SpectralApprox:
    """Retained frequencies and eigenvalues for one model on one window."""

    freqs: np.ndarray  # (K, 2) integer frequencies
    eigenvalues: np.ndarray  # (K,)
    window: Window
    expected_n: float  # E[N(D)] summed to convergence
    retained_n: float  # sum of retained eigenvalues
    half_width: int  # retained square is |k|_inf <= half_width

    def __post_init__(self):
        if self.eigenvalues.size and self.eigenvalues.max() > 1 + _EIG_TOL:
            raise ValueError(
                f"eigenvalue {self.eigenvalues.max():.6g} > 1: the DPP does not exist for this model"
            )


def _ring(K: int) -> np.ndarray:
    """Integer frequencies with ``max(|k1|, |k2|) == K``."""
    if K == 0:
        return np.zeros((1, 2), dtype=np.int64)
    span = np.arange(-K, K + 1)
    inner = np.arange(-K + 1, K)
    return np.concatenate([
        np.column_stack([span, np.full_like(span, K)]),
        np.column_stack([span, np.full_like(span, -K)]),
        np.column_stack([np.full_like(inner, K), inner]),
        np.column_stack([np.full_like(inner, -K), inner]),
    ])


def build_spectral_approx(m: DppGauss | DppPowerExp, w: Window) -> SpectralApprox:
    """Truncate the expansion to the smallest square keeping 99% of E[N]."""
    scale = np.array([1.0 / w.width, 1.0 / w.height])
    ring_sums = []
    total = 0.0
    K = 0
    while True:
        s = float(dpp_spectral_density(m, _ring(K) * scale).sum())
        ring_sums.append(s)
        total += s
        if K > 0 and s <= _CONVERGED * total:
            break
        K += 1
    cum = np.cumsum(ring_sums)
    # smallest K with E[N] - retained < 1% of E[N]
    half = int(np.argmax(total - cum < (1 - RETAINED_MASS) * total))
    k = np.arange(-half, half + 1)
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    freqs = np.column_stack([k1.ravel(), k2.ravel()])
    lam = dpp_spectral_density(m, freqs * scale)
    return SpectralApprox(freqs, lam, w, total, float(lam.sum()), half)


def _sample_projection(freqs: np.ndarray, rng: np.random.Generator, max_attempts: int) -> np.ndarray:
    """Sequentially sample ``len(freqs)`` points on the unit square.

    With ``v(x)`` the vector of the ``n`` selected basis functions
    (``|v(x)|^2 = n`` on the unit square), the density of the next point is
    proportional to the squared norm of ``v(x)`` projected off the directions
    already used. It never exceeds ``n``, so a uniform proposal accepted with
    probability ``proj / n`` is exact.

    Early on the used directions ``E`` are few and ``n - |E^H v|^2`` is cheap.
    Once fewer than ``_SWITCH * n`` dimensions remain we switch to an explicit
    orthonormal basis ``Q`` of the remaining space, shrunk by one Householder
    reflection per accepted point, so each candidate costs ``O(n i)``.
    """
    n = len(freqs)
    u1, inv1 = np.unique(freqs[:, 0], return_inverse=True)
    u2, inv2 = np.unique(freqs[:, 1], return_inverse=True)
    u1 = 2j * math.pi * u1
    u2 = 2j * math.pi * u2
    # conjugated bases kept in Fortran order so column slices stay contiguous
    Ec = np.zeros((n, n), dtype=complex, order="F")
    Qc = None
    out = np.empty((n, 2))
    for step in range(n):
        i = n - step  # dimension of the remaining space
        if Qc is None and i <= _SWITCH * n:
            full, _ = qr(Ec[:, :step].conj(), mode="full")
            Qc = np.asfortranarray(full[:, step:].conj())
        tried = 0
        while True:
            batch = min(int(1.3 * n / i) + 1, 4096)
            st = rng.random((batch, 2))
            u = rng.random(batch)
            V = np.exp(np.outer(st[:, 0], u1))[:, inv1] * np.exp(np.outer(st[:, 1], u2))[:, inv2]
            if Qc is None:
                C = V @ Ec[:, :step]
                dens = n - (np.einsum("ij,ij->i", C.real, C.real) + np.einsum("ij,ij->i", C.imag, C.imag))
            else:
                C = V @ Qc
                dens = np.einsum("ij,ij->i", C.real, C.real) + np.einsum("ij,ij->i", C.imag, C.imag)
            hit = np.flatnonzero(u * n < dens)
            if hit.size:
                j = hit[0]
                break
            tried += batch
            if tried > max_attempts:
                raise DppSamplingError(f"rejection sampler exceeded {max_attempts} attempts at point {step}")
        out[step] = st[j]
        if i == 1:
            break
        norm = math.sqrt(dens[j])
        if Qc is None:
            # Gram-Schmidt: conj(e) = (conj(v) - conj(E) conj(c)) / |w|
            Ec[:, step] = (V[j].conj() - Ec[:, :step] @ C[j].conj()) / norm
        else:
            # Householder reflector P = I - 2 h h^H sending c to a multiple of
            # e1; columns 2..i of Q P span the complement of the new direction
            c = C[j] / norm
            phase = c[0] / abs(c[0]) if abs(c[0]) > 0 else 1.0
            hv = c.copy()
            hv[0] += phase
            hv /= np.linalg.norm(hv)
            x = Qc @ hv.conj()
            Qc = zgeru(-2.0, x, hv[1:], a=Qc[:, 1:], overwrite_a=True)
    return out


def simulate_dpp(
    m: DppGauss | DppPowerExp,
    w: Window,
    rng: np.random.Generator,
    approx: SpectralApprox | None = None,
    max_attempts: int = 1_000_000,
) -> PointPattern:
    if approx is None:
        approx = build_spectral_approx(m, w)
    elif approx.window != w:
        raise ValueError("spectral approximation was built for a different window")
    bern_rng, point_rng = rng.spawn(2)
    keep = bern_rng.random(approx.eigenvalues.shape[0]) < approx.eigenvalues
    freqs = approx.freqs[keep]
    if len(freqs) == 0:
        return PointPattern(np.empty((0, 2)), w)
    st = _sample_projection(freqs, point_rng, max_attempts)
    pts = np.column_stack([w.x_min + w.width * st[:, 0], w.y_min + w.height * st[:, 1]])
    return PointPattern(pts, w)
