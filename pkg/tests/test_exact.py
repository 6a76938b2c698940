from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from compana.errors import DomainError, MalformedName
from compana.exact import (
    CReal,
    Dyadic,
    Interval,
    MonotoneSeq,
    Ordering,
    ceil_dyadic,
    creal_arith,
    creal_cmp_partial,
    creal_lim,
    creal_max,
    creal_sqrt,
    creal_sum,
    dyadic_arith,
    floor_dyadic,
    mct_stage,
    round_dyadic,
)
from compana.machines import StageSet
from compana.constructions import specker_seq

dyadics = st.builds(Dyadic, st.integers(-(1 << 40), 1 << 40), st.integers(-60, 20))
small = st.builds(Dyadic, st.integers(-1024, 1024), st.integers(-12, 2))


def valid_name(x: CReal, levels=range(0, 49)) -> bool:
    qs = {n: x.approx(n) for n in levels}
    return all(abs(qs[n] - qs[m]) <= Dyadic(1, -n) + Dyadic(1, -m) for n in qs for m in qs)


# -- Dyadic -------------------------------------------------------------------


def test_dyadic_canonical_form():
    assert (Dyadic(12, 0).mantissa, Dyadic(12, 0).exponent) == (3, 2)
    assert (Dyadic(0, 7).mantissa, Dyadic(0, 7).exponent) == (0, 0)
    assert Dyadic(6, -3) == Dyadic(3, -2)


@given(dyadics)
def test_dyadic_is_canonical(d):
    assert d.mantissa % 2 == 1 or (d.mantissa == 0 and d.exponent == 0)


def test_dyadic_examples():
    half, quarter = Dyadic(1, -1), Dyadic(1, -2)
    assert dyadic_arith(half, quarter, "add") == Dyadic(3, -2)
    assert dyadic_arith(Dyadic(5, -7), Dyadic(0), "mul") == 0
    assert dyadic_arith(Dyadic(3, -2), Dyadic(3, -2), "cmp") == 0
    assert dyadic_arith(half, quarter, "min") == quarter
    assert dyadic_arith(half, quarter, "max") == half


@given(dyadics, dyadics)
def test_dyadic_arith_matches_fractions(a, b):
    fa, fb = a.to_fraction(), b.to_fraction()
    assert (a + b).to_fraction() == fa + fb
    assert (a - b).to_fraction() == fa - fb
    assert (a * b).to_fraction() == fa * fb
    assert dyadic_arith(a, b, "cmp") == (fa > fb) - (fa < fb)


@given(dyadics)
def test_dyadic_string_round_trip(d):
    assert Dyadic.parse(str(d)) == d


def test_dyadic_parse_forms():
    assert Dyadic.parse("3/8") == Dyadic(3, -3)
    assert Dyadic.parse("-5") == Dyadic(-5)
    with pytest.raises(ValueError):
        Dyadic.parse("1/3")
    with pytest.raises(ValueError):
        Dyadic.from_fraction(Fraction(1, 3))


@given(st.fractions(), st.integers(-5, 40))
def test_rounding_helpers(q, n):
    eps = Fraction(1, 2**n) if n >= 0 else Fraction(2**-n)
    lo, hi, r = floor_dyadic(q, n), ceil_dyadic(q, n), round_dyadic(q, n)
    assert lo <= q <= hi and hi - lo <= eps
    assert abs(r.to_fraction() - q) <= eps / 2


# -- Interval -----------------------------------------------------------------


def test_interval_basics():
    iv = Interval(Dyadic(1, -2), Dyadic(3, -2))
    assert iv.width == Dyadic(1, -1)
    assert iv.midpoint == Dyadic(1, -1)
    assert iv.contains(Fraction(1, 3))
    with pytest.raises(ValueError):
        Interval(Dyadic(1), Dyadic(0))


@given(small, small, small, small)
def test_interval_arithmetic_encloses(a, b, c, d):
    i, j = Interval(min(a, b), max(a, b)), Interval(min(c, d), max(c, d))
    for x in (i.lo, i.hi, i.midpoint):
        for y in (j.lo, j.hi):
            assert (i + j).contains(x + y)
            assert (i - j).contains(x - y)
            assert (i * j).contains(x * y)
        assert abs(i).contains(abs(x))


# -- CReal --------------------------------------------------------------------


def test_creal_examples():
    third, sixth = CReal.constant(Fraction(1, 3)), CReal.constant(Fraction(1, 6))
    assert abs((third + sixth).approx(10) - Dyadic(1, -1)) <= Dyadic(1, -10)
    x = CReal.constant(Fraction(2, 7))
    for n in range(30):
        assert abs((x + CReal.constant(0)).approx(n).to_fraction() - Fraction(2, 7)) <= Fraction(1, 2**n)
        assert abs((x - x).approx(n)) <= 2 * Dyadic(1, -(n + 1))


def test_mul_needs_bounds():
    unbounded = CReal(lambda n: Dyadic(1))
    with pytest.raises(MalformedName):
        creal_arith(unbounded, CReal.constant(1), "mul")


@given(small, small, st.integers(0, 40))
def test_creal_arith_matches_dyadic(a, b, n):
    x, y = CReal.constant(a), CReal.constant(b)
    tol = Dyadic(1, -n + 1)
    for op in ("add", "sub", "mul"):
        exact = dyadic_arith(a, b, op)
        assert abs(creal_arith(x, y, op).approx(n) - exact) <= tol
    assert abs(creal_arith(x, None, "neg").approx(n) + a) <= tol
    assert abs(creal_arith(x, None, "abs").approx(n) - abs(a)) <= tol


def test_cmp_partial_examples():
    zero, one = CReal.constant(0), CReal.constant(1)
    assert creal_cmp_partial(zero, one, 3) is Ordering.LESS
    assert creal_cmp_partial(one, zero, 3) is Ordering.GREATER
    x = CReal.constant(Fraction(1, 3))
    assert all(creal_cmp_partial(x, x, n) is Ordering.UNKNOWN for n in range(20))
    near = CReal.constant(Dyadic(1, -1) + Dyadic(1, -20))
    assert creal_cmp_partial(CReal.constant(Dyadic(1, -1)), near, 4) is Ordering.UNKNOWN


@given(small, small, st.integers(0, 30))
def test_cmp_partial_never_lies(a, b, n):
    verdict = creal_cmp_partial(CReal.constant(a), CReal.constant(b), n)
    if verdict is Ordering.LESS:
        assert a < b
    elif verdict is Ordering.GREATER:
        assert a > b


def test_lim_examples():
    x = CReal.constant(Fraction(3, 7))
    same = creal_lim(lambda n: x, lambda k: 0)
    assert all(abs(same.approx(k).to_fraction() - Fraction(3, 7)) <= Fraction(1, 2**k) for k in range(40))
    to_one = creal_lim(lambda n: CReal.constant(1 - Dyadic(1, -n)), lambda k: k + 1)
    geo = creal_lim(lambda n: CReal.constant(sum((Dyadic(1, -i) for i in range(n + 1)), Dyadic(0))), lambda k: k + 1)
    for k in range(40):
        assert abs(to_one.approx(k) - 1) <= Dyadic(1, -k)
        assert abs(geo.approx(k) - 2) <= Dyadic(1, -k)
    assert valid_name(to_one) and valid_name(geo)


def test_sqrt_and_sum_and_max():
    two = creal_sqrt(CReal.constant(2))
    for n in range(60):
        q = two.approx(n).to_fraction()
        assert (q - Fraction(1, 2**n)) ** 2 <= 2 <= (q + Fraction(1, 2**n)) ** 2
    assert valid_name(two)
    third = CReal.constant(Fraction(1, 3))
    s = creal_sum([third] * 9)
    assert all(abs(s.approx(n) - 3) <= Dyadic(1, -n) for n in range(30))
    m = creal_max(third, CReal.constant(Fraction(1, 5)))
    assert all(abs(m.approx(n).to_fraction() - Fraction(1, 3)) <= Fraction(1, 2**n) for n in range(30))
    with pytest.raises(DomainError):
        creal_sqrt(CReal.constant(-1)).approx(3)


@given(st.fractions(min_value=0, max_value=100))
def test_sqrt_is_valid_name(q):
    assert valid_name(creal_sqrt(CReal.constant(q)), range(0, 30))


# -- monotone sequences -------------------------------------------------------


def test_mct_stage_examples():
    half = MonotoneSeq(lambda n: CReal.constant(Fraction(1, 2)), Dyadic(1))
    for stage in (0, 3, 50):
        assert abs(mct_stage(half, stage, 12) - Dyadic(1, -1)) <= Dyadic(1, -12)
    specker = specker_seq(StageSet.injected({1: 2, 3: 5}))
    for stage in range(5, 12):
        assert abs(mct_stage(specker, stage, 20) - Dyadic(5, -3)) <= Dyadic(1, -20)
    ramp = MonotoneSeq(lambda n: CReal.constant(1 - Dyadic(1, -n)), Dyadic(1))
    assert abs(mct_stage(ramp, 0, 10)) <= Dyadic(1, -10)


@given(st.dictionaries(st.integers(0, 30), st.integers(0, 40), max_size=8), st.integers(0, 40))
def test_mct_stage_monotone_and_bounded(entries, level):
    seq = specker_seq(StageSet.injected(entries))
    values = [mct_stage(seq, s, level) for s in range(45)]
    assert all(a <= b + Dyadic(1, -level + 1) for a, b in zip(values, values[1:]))
    assert all(v <= seq.bound + Dyadic(1, -level) for v in values)
