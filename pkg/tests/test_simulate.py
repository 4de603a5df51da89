import math

import numpy as np
import pytest
from scipy import integrate, special, stats

from repulsive_abc.models import HPP, DppGauss, DppPowerExp, ModelKind, Strauss, alpha_max, sigma_max
from repulsive_abc.pattern import PointPattern, Window, close_pair_count, k_hat
from repulsive_abc.simulate import (
    StraussRunaway,
    StraussSimControls,
    build_spectral_approx,
    dpp_spectral_density,
    papangelou_strauss,
    simulate,
    simulate_dpp,
    simulate_hpp,
    simulate_strauss,
)

UNIT = Window.unit()


def min_pair_distance(p):
    d = np.sqrt(((p.points[:, None] - p.points[None]) ** 2).sum(-1))
    d[np.diag_indices(p.n())] = np.inf
    return d.min()


def mc_ks_pvalue(sample, cdf, draw, reps, rng):
    """Monte Carlo p-value of the KS distance for a discrete law."""
    def ks(x):
        x = np.sort(x)
        grid = np.arange(x.min(), x.max() + 1)
        emp = np.searchsorted(x, grid, side="right") / len(x)
        return np.abs(emp - cdf(grid)).max()

    obs = ks(sample)
    ref = np.array([ks(draw(rng, len(sample))) for _ in range(reps)])
    return (1 + np.count_nonzero(ref >= obs)) / (reps + 1)


# models


def test_model_validation():
    with pytest.raises(ValueError):
        Strauss(200, 1.5, 0.05)
    with pytest.raises(ValueError):
        Strauss(200, 0.5, 0.05, h=0.05)
    with pytest.raises(ValueError):
        DppGauss(100, 0.06)
    with pytest.raises(ValueError):
        DppPowerExp(100, 0.2, 10)
    with pytest.raises(ValueError):
        HPP(0)
    assert alpha_max(100, 10) == pytest.approx(0.1698, abs=1e-4)
    assert sigma_max(100) == pytest.approx(0.0564, abs=1e-4)


def test_model_kind_round_trip():
    k = ModelKind("strauss", {"R": 0.05})
    m = k.make([200, 0.1])
    assert m == Strauss(200, 0.1, 0.05)
    assert k.values(m) == (200.0, 0.1)
    assert ModelKind.of(m) == ModelKind("strauss", {"R": 0.05, "h": 0.0})
    with pytest.raises(ValueError):
        ModelKind("strauss")
    with pytest.raises(ValueError):
        ModelKind("dpp_powexp")
    with pytest.raises(ValueError):
        ModelKind("hpp", {"R": 1})


# HPP


def test_hpp_count_moments():
    rng = np.random.default_rng(1)
    n = np.array([simulate_hpp(100, UNIT, rng).n() for _ in range(1000)])
    assert abs(n.mean() - 100) < 3 * math.sqrt(100 / 1000)
    assert abs(n.var(ddof=1) / 100 - 1) < 0.1


def test_hpp_scaled_window():
    w = Window(2, 4, -1, 0.5)
    p = simulate_hpp(10, w, np.random.default_rng(0))
    assert np.all(w.contains(p.points))


# Papangelou intensity


def test_papangelou_examples():
    pts = PointPattern([[0.5, 0.52], [0.53, 0.5], [0.9, 0.9]], UNIT)
    u = (0.5, 0.5)
    assert papangelou_strauss(u, pts, Strauss(200, 1.0, 0.05)) == 200
    assert papangelou_strauss(u, pts, Strauss(200, 0.1, 0.05)) == pytest.approx(2.0, rel=1e-12)
    near = PointPattern([[0.505, 0.5]], UNIT)
    assert papangelou_strauss(u, near, Strauss(200, 0.5, 0.05, h=0.01)) == 0.0
    assert papangelou_strauss(u, PointPattern(np.empty((0, 2)), UNIT), Strauss(200, 0.1, 0.05)) == 200


def test_papangelou_nonincreasing_in_neighbours():
    m = Strauss(150, 0.3, 0.1)
    u = np.array([0.5, 0.5])
    vals = []
    for t in range(6):
        ang = np.linspace(0, 2 * np.pi, t, endpoint=False)
        pts = u + 0.05 * np.column_stack([np.cos(ang), np.sin(ang)])
        vals.append(papangelou_strauss(u, PointPattern(pts.reshape(-1, 2), UNIT), m))
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    assert vals[3] == pytest.approx(150 * 0.3**3)


# Strauss sampler


def test_strauss_gamma_one_is_poisson():
    rng = np.random.default_rng(2)
    n = np.array([simulate_strauss(Strauss(200, 1.0, 0.05), UNIT, rng).n() for _ in range(500)])
    p = mc_ks_pvalue(n, lambda g: stats.poisson.cdf(g, 200), lambda r, k: r.poisson(200, k), 999, rng)
    assert p > 0.01


def test_strauss_hard_core_gamma_zero():
    rng = np.random.default_rng(3)
    for _ in range(30):
        p = simulate_strauss(Strauss(200, 0.0, 0.05), UNIT, rng)
        assert close_pair_count(p, 0.05) == 0


def test_strauss_hard_core_radius_every_run():
    rng = np.random.default_rng(4)
    m = Strauss(300, 0.4, 0.05, h=0.02)
    for _ in range(50):
        p = simulate_strauss(m, UNIT, rng)
        assert min_pair_distance(p) >= 0.02


def test_strauss_mean_count():
    rng = np.random.default_rng(5)
    n = np.array([simulate_strauss(Strauss(200, 0.1, 0.05), UNIT, rng).n() for _ in range(200)])
    assert abs(n.mean() - 88) <= 10


def test_strauss_non_unit_window():
    w = Window(-2, 0, 1, 2)
    p = simulate_strauss(Strauss(100, 0.2, 0.05), w, np.random.default_rng(0))
    assert np.all(w.contains(p.points))
    assert 100 < p.n() < 260


def test_strauss_runaway_cap():
    with pytest.raises(StraussRunaway):
        simulate_strauss(Strauss(2000, 1.0, 0.01), UNIT, np.random.default_rng(0), StraussSimControls(max_points=100))


def test_strauss_controls_validation():
    with pytest.raises(ValueError):
        StraussSimControls(p_birth=0.5, p_death=0.5, p_shift=0.5)
    with pytest.raises(ValueError):
        StraussSimControls(burn_in_sweeps=0)


def test_strauss_shift_only_preserves_count():
    ctrl = StraussSimControls(burn_in_sweeps=5, p_birth=0.0, p_death=0.0, p_shift=1.0)
    rng = np.random.default_rng(9)
    a = simulate_strauss(Strauss(100, 0.5, 0.05), UNIT, np.random.default_rng(9), ctrl)
    # starting count is the Poisson draw taken right after the seed
    rng.integers(1, 2**63, size=2)
    assert a.n() == rng.poisson(100)


# DPP spectral approximation


def test_spectral_density_examples():
    assert dpp_spectral_density(DppGauss(100, sigma_max(100)), [0, 0]) == pytest.approx(1.0, abs=1e-12)
    assert dpp_spectral_density(DppGauss(100, 0.05), [0, 0]) == pytest.approx(100 * math.pi * 0.0025, rel=1e-12)
    assert dpp_spectral_density(DppPowerExp(100, alpha_max(100, 10), 10), [0, 0]) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("k", [0.0, 3.0, 8.5])
def test_gaussian_spectral_density_matches_quadrature(k):
    tau, s = 100.0, 0.05
    # radial Fourier transform of tau * exp(-r^2 / s^2)
    f = lambda r: 2 * math.pi * r * tau * math.exp(-r * r / (s * s)) * special.j0(2 * math.pi * k * r)
    val, _ = integrate.quad(f, 0, 20 * s, limit=200)
    assert dpp_spectral_density(DppGauss(tau, s), [k, 0]) == pytest.approx(val, rel=1e-8)


@pytest.mark.parametrize(
    "m",
    [DppGauss(100, 0.05), DppGauss(100, 0.01), DppPowerExp(100, 0.1, 10), DppGauss(500, sigma_max(500))],
)
def test_trace_identity(m):
    ap = build_spectral_approx(m, UNIT)
    assert 0.99 * m.tau <= ap.retained_n <= m.tau * (1 + 1e-9)
    assert ap.expected_n == pytest.approx(m.tau, rel=1e-6)
    assert ap.eigenvalues.min() >= 0 and ap.eigenvalues.max() <= 1 + 1e-9


def test_trace_identity_rectangle():
    w = Window(0, 2, 0, 0.5)
    ap = build_spectral_approx(DppGauss(100, 0.05), w)
    assert 0.99 * 100 <= ap.retained_n <= 100


def test_boundary_spec_has_unit_top_eigenvalue():
    for m in (DppGauss(100, sigma_max(100)), DppPowerExp(100, alpha_max(100, 10), 10)):
        assert build_spectral_approx(m, UNIT).eigenvalues.max() == pytest.approx(1.0, abs=1e-9)


def test_small_sigma_flattens_spectrum():
    wide = build_spectral_approx(DppGauss(100, 0.05), UNIT)
    narrow = build_spectral_approx(DppGauss(100, 0.01), UNIT)
    assert len(narrow.eigenvalues) > len(wide.eigenvalues)
    assert narrow.eigenvalues.max() < wide.eigenvalues.max()


def test_dpp_mean_count_and_repulsion():
    m = DppGauss(100, 0.05)
    ap = build_spectral_approx(m, UNIT)
    rng = np.random.default_rng(7)
    pats = [simulate_dpp(m, UNIT, rng, ap) for _ in range(500)]
    n = np.array([p.n() for p in pats])
    assert abs(n.mean() / ap.retained_n - 1) < 0.03
    k = np.mean([k_hat(p, 0.02) for p in pats])
    assert k < math.pi * 0.02**2


def test_dpp_empty_when_no_eigenvalue_drawn():
    m = DppGauss(100, 0.05)
    ap = build_spectral_approx(m, UNIT)
    # a window-matching approximation with all eigenvalues zero draws no frequency
    zero = type(ap)(ap.freqs, np.zeros_like(ap.eigenvalues), UNIT, ap.expected_n, 0.0, ap.half_width)
    assert simulate_dpp(m, UNIT, np.random.default_rng(0), zero).n() == 0


def test_dpp_rejects_foreign_approximation():
    m = DppGauss(100, 0.05)
    ap = build_spectral_approx(m, Window(0, 2, 0, 1))
    with pytest.raises(ValueError):
        simulate_dpp(m, UNIT, np.random.default_rng(0), ap)


def test_dpp_points_distinct_and_inside():
    w = Window(1, 3, 0, 1)
    p = simulate_dpp(DppPowerExp(100, 0.1, 10), w, np.random.default_rng(8))
    assert np.all(w.contains(p.points))
    assert min_pair_distance(p) > 0


# dispatch and determinism


@pytest.mark.parametrize(
    "m", [HPP(100), Strauss(200, 0.1, 0.05), DppGauss(100, 0.05), DppPowerExp(100, 0.1, 10)]
)
def test_simulate_is_deterministic(m):
    a = simulate(m, UNIT, np.random.default_rng(42))
    b = simulate(m, UNIT, np.random.default_rng(42))
    assert a.points.tobytes() == b.points.tobytes()
    c = simulate(m, UNIT, np.random.default_rng(43))
    assert a.points.tobytes() != c.points.tobytes()


def test_simulate_dispatch():
    rng = np.random.default_rng(0)
    assert simulate(HPP(50), UNIT, rng).window == UNIT
    with pytest.raises(TypeError):
        simulate(object(), UNIT, rng)
