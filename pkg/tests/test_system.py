import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfz.errors import (
    BadDimensions,
    BarrierNotFound,
    BudgetExceeded,
    NoBarrier,
    NotAProbabilityVector,
    NotRegular,
)
from mfz.system import (
    barrier_digits,
    cantor_convolution,
    convolve_weights,
    find_barrier,
    flip,
    is_regular,
    iterate,
    new_system,
    regularity_threshold,
    system_from_spec,
    uniform,
    DigitSystem,
)

C3 = ("1/8", "3/8", "3/8", "1/8")


def test_new_system_cantor3_constants():
    s = new_system(3, 3, C3)
    assert s.xi == Fraction(3, 2)
    assert s.a == 1
    assert s.theta == pytest.approx(3.0)
    assert s.delta == pytest.approx(-1 / math.log(3))


def test_new_system_cantor4_constants():
    s = new_system(3, 4, [Fraction(c, 16) for c in (1, 4, 6, 4, 1)])
    assert s.xi == 2 and s.a == 1


def test_new_system_rejects_irregular():
    with pytest.raises(NotRegular):
        new_system(3, 3, (0.5, 0.2, 0.2, 0.1))


@pytest.mark.parametrize("d,m", [(2, 3), (3, 2), (4, 3)])
def test_new_system_rejects_dimensions(d, m):
    with pytest.raises(BadDimensions):
        new_system(d, m, [1 / (m + 1)] * (m + 1))


@pytest.mark.parametrize("p", [(0.3, 0.3, 0.3, 0.3), (0.25, 0.25, 0.25), (-0.1, 0.6, 0.4, 0.1)])
def test_new_system_rejects_bad_weights(p):
    with pytest.raises(NotAProbabilityVector):
        new_system(3, 3, p)


def test_new_system_rejects_zero_weight():
    with pytest.raises(NotAProbabilityVector):
        new_system(3, 3, (0.0, 0.5, 0.5, 0.0))


def test_exact_weights_must_sum_exactly():
    with pytest.raises(NotAProbabilityVector):
        new_system(3, 3, ("1/8", "3/8", "3/8", "1/9"))


def test_is_regular_examples():
    assert is_regular((1 / 8, 3 / 8, 3 / 8, 1 / 8))
    assert not is_regular((0.4, 0.2, 0.4))
    b = 0.3
    binom = [math.comb(3, i) * (1 - b) ** i * b ** (3 - i) for i in range(4)]
    assert (1 - b) ** 3 > 3 * b**2 * (1 - b)
    assert not is_regular(binom)


def test_flip():
    s = DigitSystem(3, 3, (0.1, 0.3, 0.35, 0.25))
    assert flip(s) is s
    t = DigitSystem(3, 3, (0.25, 0.35, 0.3, 0.1))
    assert flip(t).p == (0.1, 0.3, 0.35, 0.25)
    assert flip(flip(t)).p == flip(t).p


def _brute_level(s, k):
    out = np.zeros(s.n_atoms(k))
    for w in itertools.product(range(s.m + 1), repeat=k):
        out[sum(c * s.d ** (k - 1 - i) for i, c in enumerate(w))] += math.prod(s.p[c] for c in w)
    return out


def test_iterate_cantor3_level2():
    s = cantor_convolution(3)
    it = iterate(s, 2)
    assert (it.d, it.m) == (9, 12)
    assert math.fsum(it.p) == pytest.approx(1, abs=1e-12)
    np.testing.assert_allclose(it.p, _brute_level(s, 2), rtol=1e-12)
    assert is_regular(it.p)


def test_iterate_identity_and_composition():
    s = cantor_convolution(3)
    assert iterate(s, 1) == s
    a, b = iterate(iterate(s, 2), 2), iterate(s, 4)
    assert (a.d, a.m) == (b.d, b.m)
    np.testing.assert_allclose(a.p, b.p, rtol=1e-10)


def test_iterate_budget():
    with pytest.raises(BudgetExceeded):
        iterate(cantor_convolution(3), 12, max_atoms=1000)


def test_convolve_weights_examples():
    assert convolve_weights((0.5, 0.5), (0.5, 0.5)) == pytest.approx((0.25, 0.5, 0.25))
    assert convolve_weights((0.25, 0.5, 0.25), (0.5, 0.5)) == pytest.approx((1 / 8, 3 / 8, 3 / 8, 1 / 8))
    p = (0.2, 0.3, 0.5)
    assert convolve_weights(p, (1.0,)) == pytest.approx(p)


prob = st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6).map(lambda v: tuple(x / sum(v) for x in v))


@settings(max_examples=60, deadline=None)
@given(prob, prob, prob)
def test_convolve_commutative_associative(p, q, r):
    np.testing.assert_allclose(convolve_weights(p, q), convolve_weights(q, p), atol=1e-14)
    left = convolve_weights(convolve_weights(p, q), r)
    right = convolve_weights(p, convolve_weights(q, r))
    np.testing.assert_allclose(left, right, atol=1e-14)
    assert math.fsum(left) == pytest.approx(1, abs=1e-12)


def test_cantor_convolution_examples():
    assert cantor_convolution(3).p == pytest.approx((1 / 8, 3 / 8, 3 / 8, 1 / 8))
    assert cantor_convolution(4).p == pytest.approx(tuple(c / 16 for c in (1, 4, 6, 4, 1)))
    with pytest.raises(NotRegular):
        cantor_convolution(3, 0.36)
    cantor_convolution(3, 0.37)


@pytest.mark.parametrize("k", [3, 4, 5, 6, 7])
def test_cantor_convolution_symmetric_exact(k):
    ex = cantor_convolution(k).exact
    assert all(ex[i] == ex[k - i] for i in range(k + 1))


def _threshold_oracle(m):
    # smallest bias with p_m <= p_1 for the binomial weights, by bisection
    lo, hi = 0.0, 0.5
    for _ in range(200):
        b = (lo + hi) / 2
        if (1 - b) ** m <= m * (1 - b) * b ** (m - 1):
            hi = b
        else:
            lo = b
    return hi


@pytest.mark.parametrize("m,expected", [(3, 0.366025), (2, 1 / 3), (4, 0.386488)])
def test_regularity_threshold(m, expected):
    assert regularity_threshold(m) == pytest.approx(expected, abs=1e-6)
    assert regularity_threshold(m) == pytest.approx(_threshold_oracle(m), abs=1e-12)


def test_find_barrier_cantor3():
    level, atoms = find_barrier(cantor_convolution(3), 3)
    assert level == 2 and atoms == [5, 6, 7]
    xi = Fraction(3, 2)
    for j in atoms:
        x = Fraction(j, 9)
        assert xi - 1 < x and x + xi / 9 < 1
    assert barrier_digits(iterate(cantor_convolution(3), 2)) == [5, 6, 7]


def test_find_barrier_rejects_long_support():
    with pytest.raises(NoBarrier):
        find_barrier(cantor_convolution(4))
    with pytest.raises(NoBarrier):
        find_barrier(uniform(4, 6))


def test_find_barrier_not_found():
    with pytest.raises(BarrierNotFound):
        find_barrier(cantor_convolution(3), 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 6), st.integers(0, 4))
def test_barrier_atoms_recheck_exact(d, extra):
    m = d + extra
    if Fraction(m, d - 1) >= 2:
        return
    s = uniform(d, m)
    level, atoms = find_barrier(s, 4)
    for j in atoms:
        x = Fraction(j, d**level)
        assert s.xi - 1 < x and x + s.xi / d**level < 1


def test_system_from_spec_forms():
    a = system_from_spec({"d": 3, "m": 3, "p": list(C3)})
    b = system_from_spec({"preset": "cantor_convolution", "k": 3})
    assert a == b
    c = system_from_spec({"iterate": {"of": {"preset": "cantor_convolution", "k": 3}, "k": 2}})
    assert (c.d, c.m) == (9, 12)
    assert system_from_spec({"preset": "uniform", "d": 4, "m": 4}).p == (0.2,) * 5
    with pytest.raises(ValueError):
        system_from_spec({"preset": "nope"})
