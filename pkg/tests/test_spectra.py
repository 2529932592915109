import math

import numpy as np
import pytest

from mfz import spectra
from mfz.atoms import shat
from mfz.dims import alpha_bar, alpha_lower_bracket, alpha_star_bracket
from mfz.errors import NotABarrier, NotConcave, Unresolved
from mfz.spectra import (
    SpectrumCurve,
    beta_k,
    curvature,
    dim_range_inner,
    legendre,
    multifractal_spectrum,
    q_crossing,
    q_grid,
    tau,
    tau_curve,
    tau_hat,
    tau_hat_curve,
    tau_piecewise,
    tau_raw,
    tau_slack,
)
from mfz.system import cantor_convolution, iterate, uniform

C3 = cantor_convolution(3)
IT = iterate(C3, 2)  # base 9, barrier digits 5, 6, 7


def test_q_grid():
    g = q_grid()
    assert g[0] == -20 and g[-1] == 10 and len(g) == 601
    assert 0.0 in g and 1.0 in g
    with pytest.raises(ValueError):
        q_grid(1, 0, 0.1)


def test_tau_examples():
    for k in (1, 4, 8):
        t1 = tau(C3, 1, k)
        assert t1 == (0.0, "exact")
        t0 = tau(C3, 0, k)
        assert t0.direction == "lower_approx"
        assert t0.value == pytest.approx(-math.log(C3.n_atoms(k)) / (k * math.log(3)))
    t2 = tau(C3, 2, 1)
    raw = -math.log(sum(p * p for p in C3.p)) / math.log(3)
    assert t2.direction == "upper_approx"
    assert t2.value == pytest.approx(raw + math.log(2) / math.log(3))
    assert tau_slack(C3, 2, 1) == pytest.approx(math.log(2) / math.log(3))
    assert tau_slack(C3, -2, 1) == 0 and tau_slack(C3, 1, 1) == 0


def test_tau_zero_near_minus_one():
    assert abs(tau(C3, 0, 12).value + 1) <= 0.05


def test_tau_raw_curve_concave_increasing():
    c = tau_curve(C3, 8, q_grid(-10, 10, 0.1), certified=False)
    assert c.is_concave()
    assert np.all(np.diff(c.values) > 0)
    assert c.directions[0] == "lower_approx"


def test_tau_curve_directions():
    c = tau_curve(C3, 4, [-1.0, 0.0, 0.5, 1.0, 2.0])
    assert c.directions == ("lower_approx", "lower_approx", "upper_approx", "exact", "upper_approx")
    assert c.values[3] == 0.0
    for q, v in zip(c.x, c.values):
        assert v == pytest.approx(tau(C3, q, 4).value, abs=1e-12)


def test_tau_hat_examples():
    for q in (-2.0, 0.5, 3.0):
        assert tau_hat(IT, 5, q, 2).value == pytest.approx(IT.delta * shat(IT, 5, 2, q) / 2)
    assert tau_hat(IT, 5, 0.0, 2).direction == "upper_approx"
    with pytest.raises(NotABarrier):
        tau_hat(IT, 4, 0.0, 3)
    with pytest.raises(ValueError):
        tau_hat_curve(IT, 5, 1)


def test_tau_hat_decreases_in_k_and_is_concave():
    qs = q_grid()
    c = {k: tau_hat_curve(IT, 5, k, qs) for k in (2, 4, 8)}
    assert np.all(c[4].values <= c[2].values + 1e-10)
    assert np.all(c[8].values <= c[4].values + 1e-10)
    for cur in c.values():
        assert cur.is_concave()
        assert np.all(np.diff(cur.values) > 0)


@pytest.mark.parametrize("k", [2, 3, 4, 6])
def test_tau_hat_at_zero_bound(k):
    # S^_k(0) counts J_{k-1} + 1 atoms, roughly xi d^(k-1)
    v = tau_hat(IT, 5, 0.0, k).value
    bound = (math.log(IT.d) + abs(math.log(IT.xi))) / (k * math.log(IT.d))
    assert abs(abs(v) - 1) <= bound


def test_tau_vs_tau_hat_for_positive_q():
    # the gap is O(1/k): positive, shrinking along doublings, with a Richardson-cancelled limit near 0
    for q in (0.5, 1.0, 2.0, 4.0):
        gap = {k: tau_hat(IT, 5, q, k // 2).value - tau_raw(C3, q, k) for k in (4, 8, 12)}
        assert all(g > 0 for g in gap.values())
        assert gap[4] > gap[8] > gap[12]
        assert abs(2 * gap[8] - gap[4]) <= 0.02


def test_beta_k():
    betas = [beta_k(IT, 5, k) for k in (2, 4, 6)]
    for k, b in zip((2, 4, 6), betas):
        assert 0 < b < 1
        assert abs(shat(IT, 5, k, b)) <= 1e-10
    assert betas[0] < betas[1] < betas[2]


def test_q_crossing_cantor3():
    q0 = q_crossing(IT, 5, 6)
    assert q0 < 0
    assert tau_hat(IT, 5, q0, 6).value == pytest.approx(alpha_bar(IT) * q0, abs=1e-10)
    # piecewise: linear below, tau^ above
    assert tau_piecewise(IT, 5, 2 * q0, 6, q0) == (alpha_bar(IT) * 2 * q0, "exact")
    assert tau_piecewise(IT, 5, 0.5, 6, q0) == tau_hat(IT, 5, 0.5, 6)


def test_q_crossing_none_when_formalism_holds():
    u = uniform(4, 4)
    assert q_crossing(u, 2, 4) is None
    assert tau_piecewise(u, 2, -5.0, 4) == tau_hat(u, 2, -5.0, 4)


def test_q_crossing_unresolved(monkeypatch):
    import mfz.dims

    monkeypatch.setattr(mfz.dims, "alpha_star_upper", lambda s, k: 99.0)
    with pytest.raises(Unresolved):
        q_crossing(IT, 5, 3)


def test_beta_unresolved(monkeypatch):
    monkeypatch.setattr(spectra, "shat", lambda *a: 1.0)
    with pytest.raises(Unresolved):
        beta_k(IT, 5, 3)


def curve(x, g, axis="q"):
    x = np.asarray(x, dtype=float)
    return SpectrumCurve(axis, x, np.asarray(g, dtype=float), ("approx",) * len(x))


def test_curvature_uniform_matches_second_difference():
    x = np.linspace(0, 1, 11)
    g = np.sin(3 * x)
    np.testing.assert_allclose(curvature(x, g), g[2:] - 2 * g[1:-1] + g[:-2], atol=1e-14)


def test_legendre_linear():
    x = np.linspace(-1, 1, 21)
    out = legendre(curve(x, 2 * x + 1))
    assert out.axis == "alpha"
    np.testing.assert_allclose(out.x, [2.0])
    np.testing.assert_allclose(out.values, [-1.0])
    far = legendre(curve(x, 2 * x + 1), at=[2.0, 3.0])
    assert far.values[0] == pytest.approx(-1.0) and far.values[1] == -np.inf


def test_legendre_parabola():
    x = q_grid(-5, 5, 0.01)
    out = legendre(curve(x, -x * x / 2))
    a = np.array([-2.0, 0.0, 1.5])
    got = legendre(curve(x, -x * x / 2), at=a).values
    # min_q (q a + q^2/2) = -a^2/2, exact at grid points a in the grid
    np.testing.assert_allclose(got, -a * a / 2, atol=1e-4)
    assert out.is_concave()


def test_legendre_double_conjugate():
    c = tau_hat_curve(IT, 5, 6, q_grid(-10, 10, 0.1))
    back = legendre(legendre(c))
    inner = (back.x > c.x[0]) & (back.x < c.x[-1])
    np.testing.assert_allclose(back.values[inner], np.interp(back.x[inner], c.x, c.values), atol=1e-12)


def test_legendre_rejects_convex():
    x = np.linspace(-1, 1, 11)
    with pytest.raises(NotConcave):
        legendre(curve(x, x * x))


def test_legendre_ties_pick_smaller_x():
    x = np.array([0.0, 1.0, 2.0])
    out = legendre(curve(x, [0.0, 1.0, 2.0]))
    assert out.provenance["argmin"][0] == 0.0


def test_spectrum_curve_validation():
    with pytest.raises(ValueError):
        curve([0, 0, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        SpectrumCurve("q", np.arange(3.0), np.zeros(2), ("approx",) * 3)


def test_multifractal_spectrum_peak():
    qs = q_grid(-10, 10, 0.05)
    sp = multifractal_spectrum(IT, 5, 6, qs, k_bounds=3)
    peak = np.nanmax(sp.curve.values)
    assert peak == pytest.approx(-tau_hat(IT, 5, 0.0, 6).value, abs=1e-12)
    assert sp.window[0] < sp.window[1]
    lo, hi = sp.window
    np.testing.assert_array_equal(sp.trusted, (sp.curve.x > lo) & (sp.curve.x < hi))
    # f(alpha) <= alpha on the tangent line at q = 1
    th1 = tau_hat(IT, 5, 1.0, 6).value
    assert np.all(sp.curve.values <= sp.curve.x - th1 + 1e-9)


def test_dim_range_inner():
    s = IT
    r = {k: dim_range_inner(s, 5, k) for k in (2, 4, 6)}
    env = (alpha_lower_bracket(C3, 8).lower, alpha_star_bracket(C3, 8).upper)
    for k, v in r.items():
        assert v.lo < v.hi
        assert env[0] <= v.lo and v.hi <= env[1]
        assert v.beta_k == pytest.approx(beta_k(s, 5, k))
    # k = 2 by hand: the block is eta(5, c) for the 13 second digits c
    from itertools import product

    eta = np.zeros(13)
    for u, v in product(range(13), repeat=2):
        j = u * 9 + v - 45
        if 0 <= j <= 12:
            eta[j] += s.p[u] * s.p[v]
    assert r[2].lo == pytest.approx(-math.log(eta.max()) / (2 * math.log(9)), rel=1e-12)
    assert r[2].hi == pytest.approx(-math.log(eta.min()) / (2 * math.log(9)), rel=1e-12)
