import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from choreoproof import rigor
from choreoproof.rigor import Ball, Interval, IntervalError, interval_arith

mpmath.mp.prec = 200

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


def exact(iv):
    return Fraction(iv.lo), Fraction(iv.hi)


def ulps(iv):
    n, x = 0, iv.lo
    while x < iv.hi:
        x = math.nextafter(x, math.inf)
        n += 1
    return n


def test_add_endpoints():
    assert interval_arith(Interval(1, 2), Interval(3, 4), "add").contains(Interval(4, 6))
    r = interval_arith(Interval(1, 2), Interval(3, 4), "add")
    assert ulps(Interval(r.lo, 4)) <= 1 and ulps(Interval(6, r.hi)) <= 1


def test_mul_sign_cases():
    r = interval_arith(Interval(-1, 1), Interval(-1, 1), "mul")
    assert r.contains(Interval(-1, 1))
    assert r.lo >= math.nextafter(-1.0, -2) and r.hi <= math.nextafter(1.0, 2)


def test_third():
    r = interval_arith(Interval(1, 1), Interval(3, 3), "div")
    assert r.contains(Fraction(1, 3))
    assert ulps(r) <= 2


def test_div_by_zero_interval():
    with pytest.raises(IntervalError):
        Interval(1, 1) / Interval(-1, 1)


def test_unknown_op():
    with pytest.raises(ValueError):
        interval_arith(Interval(1, 1), Interval(1, 1), "pow")


def test_sqrt3():
    s = rigor.enclose_elementary(Interval(3, 3), "sqrt")
    lo, hi = exact(s)
    assert lo * lo <= 3 <= hi * hi
    assert ulps(s) <= 2


def test_cbrt3():
    c = rigor.enclose_elementary(Interval(3, 3), "cbrt")
    lo, hi = exact(c)
    assert lo ** 3 <= 3 <= hi ** 3
    assert abs(c.mid - 1.44225) < 1e-5
    assert c.width < 1e-14


def test_exp_phase_exact_and_irrational():
    c, s = rigor.enclose_elementary(Interval(0, 0), "exp_phase", k=3)
    assert (c.lo, c.hi, s.lo, s.hi) == (1.0, 1.0, 0.0, 0.0)
    c, s = rigor.exp_phase(1)
    assert c.lo == c.hi == -0.5
    ref = mpmath.sin(4 * mpmath.pi / 3)
    assert mpmath.mpf(s.lo) <= ref <= mpmath.mpf(s.hi)
    assert s.width < 1e-15


@pytest.mark.parametrize("x", [0.0, 0.3, 1.0, 2.5, 3.14159, 10.0, 123.4, 4000.0])
def test_trig_contains_mpmath(x):
    iv = Interval(x, x)
    for f, ref in (("cos", mpmath.cos), ("sin", mpmath.sin)):
        e = rigor.enclose_elementary(iv, f)
        assert mpmath.mpf(e.lo) <= ref(mpmath.mpf(x)) <= mpmath.mpf(e.hi)


def test_cos_range_extrema():
    e = rigor.cos(Interval(-0.1, 0.1))
    assert e.hi == 1.0
    e = rigor.cos(Interval(3.0, 3.3))
    assert e.lo == -1.0


def test_int_pow_even_straddles_zero():
    assert rigor.int_pow(Interval(-2, 1), 2).contains(Interval(0, 4))
    assert rigor.int_pow(Interval(-2, 1), 2).lo == 0.0


@settings(max_examples=300, deadline=None)
@given(finite, finite, finite, finite, st.sampled_from(["add", "sub", "mul"]))
def test_ops_enclose_exact_rationals(a, b, c, d, op):
    x = Interval(min(a, b), max(a, b))
    y = Interval(min(c, d), max(c, d))
    r = interval_arith(x, y, op)
    f = {"add": lambda p, q: p + q, "sub": lambda p, q: p - q, "mul": lambda p, q: p * q}[op]
    for p in (x.lo, x.hi):
        for q in (y.lo, y.hi):
            assert r.contains(f(Fraction(p), Fraction(q)))


@settings(max_examples=200, deadline=None)
@given(finite, st.floats(min_value=0.01, max_value=1e6))
def test_division_encloses(a, b):
    r = Interval(a, a) / Interval(b, b)
    assert r.contains(Fraction(a) / Fraction(b))


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=1e-6, max_value=1e6))
def test_sqrt_cbrt_enclose(x):
    s = rigor.sqrt(Interval(x, x))
    lo, hi = exact(s)
    assert lo * lo <= Fraction(x) <= hi * hi
    c = rigor.cbrt(Interval(x, x))
    lo, hi = exact(c)
    assert lo ** 3 <= Fraction(x) <= hi ** 3


def test_from_fraction_eleven_tenths():
    nu = Interval.from_fraction(Fraction(11, 10))
    assert nu.contains(Fraction(11, 10)) and ulps(nu) == 1


def test_gamma_and_up():
    assert rigor.gamma(10) > 10 * 2.0 ** -53
    with pytest.raises(ValueError):
        rigor.gamma(2 ** 52)
    assert rigor.up(1.0, 3) > 1.0


@settings(max_examples=100, deadline=None)
@given(st.lists(finite, min_size=4, max_size=4), st.lists(st.floats(0, 1), min_size=4, max_size=4))
def test_ball_mul_encloses(vals, rads):
    a = Ball(np.array(vals[:2]), np.array(rads[:2]))
    b = Ball(np.array(vals[2:]), np.array(rads[2:]))
    p = a * b
    lo, hi = p.lo_hi()
    for i in range(2):
        for sa in (-1, 1):
            for sb in (-1, 1):
                x = Fraction(vals[i]) + sa * Fraction(rads[i])
                y = Fraction(vals[2 + i]) + sb * Fraction(rads[2 + i])
                assert Fraction(lo[i]) <= x * y <= Fraction(hi[i])


# the error-free range; outside it the ops fall back to one ulp per side
wide = st.floats(min_value=-1e140, max_value=1e140, allow_nan=False, allow_infinity=False)


@settings(max_examples=500, deadline=None)
@given(wide, wide, st.sampled_from(["add", "mul"]))
def test_point_ops_tight(a, b, op):
    r = interval_arith(Interval(a, a), Interval(b, b), op)
    exact = Fraction(a) + Fraction(b) if op == "add" else Fraction(a) * Fraction(b)
    assert r.contains(exact)
    if 0 < abs(exact) < 2.0 ** -960:
        return
    assert r.hi <= math.nextafter(r.lo, math.inf) or r.lo == r.hi
    if Fraction(float(exact)) == exact:
        assert r.lo == r.hi == float(exact)
