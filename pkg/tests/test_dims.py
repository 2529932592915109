import math
from fractions import Fraction

import numpy as np
import pytest

from mfz.dims import (
    GOLDEN,
    abs_continuity_certificate,
    alpha_bar,
    alpha_lower_bracket,
    alpha_star_bracket,
    alpha_star_upper,
    dim_at_xi,
    formalism_holds,
    gamma_bracket,
    golden_closed_form,
    interior_periodic_scan,
    isolated_top,
    periodic_dim,
    report,
)
from mfz.errors import DegenerateWord
from mfz.matrices import build_matrices, spectral_radius
from mfz.spectra import tau, tau_hat
from mfz.system import cantor_convolution, find_barrier, iterate, new_system, uniform

C3 = cantor_convolution(3)
C4 = cantor_convolution(4)


def test_closed_forms():
    assert alpha_bar(C3) == pytest.approx(math.log(8) / math.log(3))
    assert dim_at_xi(C3) == alpha_bar(C3)
    s = new_system(3, 3, (0.2, 0.3, 0.4, 0.1))
    assert alpha_bar(s) == pytest.approx(-math.log(0.2) / math.log(3))
    assert dim_at_xi(s) == pytest.approx(-math.log(0.1) / math.log(3))


def test_periodic_dim_examples():
    assert periodic_dim(C4, [1]) == pytest.approx(math.log(16 / 5) / math.log(3), abs=1e-12)
    # repeating a word does not change the point
    assert periodic_dim(C4, [1, 2]) == pytest.approx(periodic_dim(C4, [1, 2, 1, 2]), rel=1e-12)
    assert periodic_dim(C4, [1, 2]) == pytest.approx(periodic_dim(C4, [2, 1]), rel=1e-12)
    with pytest.raises(DegenerateWord):
        periodic_dim(C4, [0, 0])
    with pytest.raises(DegenerateWord):
        periodic_dim(C4, [4])
    with pytest.raises(ValueError):
        periodic_dim(C4, [])


@pytest.mark.parametrize("d,expected", [(3, 0.823842), (4, 0.813843)])
def test_golden(d, expected):
    assert golden_closed_form(d) == pytest.approx(expected, abs=1e-6)
    s = uniform(d, d)
    t = build_matrices(s)
    assert spectral_radius(t[0] @ t[1]) == pytest.approx((GOLDEN / (d + 1)) ** 2, abs=1e-12)
    assert periodic_dim(s, [0, 1]) == pytest.approx(golden_closed_form(d), abs=1e-12)
    br = alpha_lower_bracket(s, 6)
    assert br.contains(golden_closed_form(d))
    with pytest.raises(ValueError):
        golden_closed_form(2)


def test_brackets_shrink_and_contain_periodic_points():
    for s in (C3, C4):
        prev = None
        for k in (2, 4, 6):
            lo = alpha_lower_bracket(s, k)
            st = alpha_star_bracket(s, k)
            assert lo.lower <= lo.upper and st.lower <= st.upper
            if prev:
                assert lo.lower >= prev[0].lower - 1e-12
                assert st.upper <= prev[1].upper + 1e-12
            prev = (lo, st)
        dims = interior_periodic_scan(s, 4)
        assert dims.min() >= prev[0].lower - 1e-12
        assert dims.max() <= prev[1].upper + 1e-12


def test_ordering_chain():
    rep = report(C3, 6)
    assert rep.alpha_lower.lower <= rep.alpha_lower.upper
    assert rep.alpha_lower.lower <= rep.gamma.lower <= rep.gamma.upper
    assert rep.alpha_star.lower <= rep.alpha_star.upper
    assert rep.alpha_lower.lower <= rep.alpha_star.lower
    d = rep.to_dict()
    assert d["alpha_bar"] == {"value": alpha_bar(C3), "direction": "exact"}
    assert set(d["alpha_lower"]) >= {"lower", "upper", "k", "norm"}


def test_alpha_star_upper_matches_bracket():
    for k in (2, 5):
        assert alpha_star_upper(C4, k) == pytest.approx(alpha_star_bracket(C4, k).upper, rel=1e-12)


def test_isolation_cantor4():
    assert isolated_top(C4)
    assert alpha_star_bracket(C4, 8).upper < alpha_bar(C4)
    assert not isolated_top(uniform(4, 4))


def test_formalism_flags():
    assert formalism_holds(uniform(3, 3)) and formalism_holds(uniform(4, 4))
    assert not formalism_holds(C3) and not formalism_holds(C4)
    assert not formalism_holds(uniform(3, 5))  # m > 2d - 2
    exact = new_system(4, 4, [Fraction(1, 6), Fraction(1, 6), Fraction(1, 3), Fraction(1, 6), Fraction(1, 6)])
    assert formalism_holds(exact)


@pytest.mark.parametrize("d", [3, 4])
@pytest.mark.parametrize("q", [-5.0, -1.0])
def test_formalism_sandwich(d, q):
    s = uniform(d, d)
    level, atoms = find_barrier(s)
    it = iterate(s, level)
    gaps = []
    for k in (6, 8, 10):
        lo = tau(s, q, k)
        hi = tau_hat(it, atoms[0], q, k // level)
        assert lo.direction == "lower_approx" and hi.direction == "upper_approx"
        gaps.append(hi.value - lo.value)
    assert min(gaps) >= 0
    assert gaps[0] > gaps[1] > gaps[2]


def test_abs_continuity():
    assert abs_continuity_certificate(uniform(3, 5))
    assert not abs_continuity_certificate(C3)


def test_gamma_bracket():
    br = gamma_bracket(C3, 8, 5)
    assert br.lower < br.upper
    assert br.meta["mode"] == "exact" and br.meta["stderr"] == 0
    mc = gamma_bracket(C3, 8, 5, "montecarlo", 50_000, 9)
    assert mc.lower == pytest.approx(mc.meta["lyapunov"] - 3 * mc.meta["stderr"])
    assert mc.meta["seed"] == 9 and mc.meta["samples"] == 50_000
    assert mc.lower <= br.lower + 1e-3
