from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from shintani.errors import DomainError
from shintani.exact_core import (
    ChebyshevSeq,
    ReducedFraction,
    UnitCoeffSeq,
    chebyshev_T,
    frac,
    frac1,
    t_frac,
    unit_coeff_b,
)

rationals = st.fractions(max_denominator=10**6)


@pytest.mark.parametrize("r, expected", [(0, 0), (Fraction(-1, 3), Fraction(2, 3)), (Fraction(7, 2), Fraction(1, 2))])
def test_frac_examples(r, expected):
    assert frac(r) == expected


@pytest.mark.parametrize("r, expected", [(0, 1), (Fraction(-2, 6), Fraction(2, 3)), (2, 1), (Fraction(5, 4), Fraction(1, 4))])
def test_frac1_examples(r, expected):
    assert frac1(r) == expected


@given(rationals)
def test_frac_range_and_integer_difference(r):
    f = frac(r)
    assert 0 <= f < 1
    assert (r - f).denominator == 1


@given(rationals)
def test_frac1_range(r):
    f1 = frac1(r)
    assert 0 < f1 <= 1
    assert f1 == (frac(r) or 1)


def test_chebyshev_examples():
    assert chebyshev_T(0, 3) == 2
    assert chebyshev_T(5, 3) == 123
    assert chebyshev_T(-4, 3) == 47
    assert [chebyshev_T(k, 3) for k in range(6)] == [2, 3, 7, 18, 47, 123]


def test_chebyshev_matches_float_unit_powers():
    eps = (3 + math.sqrt(5)) / 2
    for k in range(12):
        assert chebyshev_T(k, 3) == round(eps**k + eps**-k)


def test_chebyshev_rejects_small_a():
    with pytest.raises(DomainError):
        chebyshev_T(3, 2)


@pytest.mark.parametrize("a", [3, 4, 5, 6])
def test_consecutive_gcd(a):
    for k in range(51):
        assert math.gcd(chebyshev_T(k, a), chebyshev_T(k + 1, a)) == math.gcd(a, 2)


@pytest.mark.parametrize("a, b", [(3, 1), (4, 2), (5, 1), (6, 4)])
def test_norm_identity(a, b):
    d = (a * a - 4) // (b * b)
    for k in range(31):
        assert chebyshev_T(k, a) ** 2 - d * unit_coeff_b(k, a, b) ** 2 == 4


@given(st.integers(0, 30), st.sampled_from([3, 4, 5, 6, 7]))
def test_chebyshev_symmetric(n, a):
    assert chebyshev_T(-n, a) == chebyshev_T(n, a)


@given(st.integers(1, 80), st.sampled_from([3, 4, 7, 11]))
def test_chebyshev_recurrence(k, a):
    assert chebyshev_T(k + 1, a) == a * chebyshev_T(k, a) - chebyshev_T(k - 1, a)


def test_unit_coeff_examples():
    assert unit_coeff_b(0, 3, 1) == 0
    assert unit_coeff_b(1, 3, 1) == 1
    assert unit_coeff_b(4, 3, 1) == 21


def test_unit_coeff_matches_float_powers():
    sqrt5 = math.sqrt(5)
    eps = (3 + sqrt5) / 2
    for k in range(10):
        assert math.isclose((chebyshev_T(k, 3) + unit_coeff_b(k, 3, 1) * sqrt5) / 2, eps**k, rel_tol=1e-12)


def test_sequence_classes_cache_consistently():
    seq = ChebyshevSeq(3)
    assert seq[30] == chebyshev_T(30, 3)
    assert seq[-7] == seq[7]
    assert UnitCoeffSeq(3, 1)[4] == 21


def test_t_frac_examples():
    assert t_frac(1, 3) == ReducedFraction(2, 3)
    assert t_frac(2, 4) == ReducedFraction(2, 7)
    assert t_frac(4, 3) == ReducedFraction(18, 47)


def test_t_frac_rejects_nonpositive():
    with pytest.raises(DomainError):
        t_frac(0, 3)


@pytest.mark.parametrize("a", [3, 4, 6])
def test_t_frac_decreases_toward_inverse_unit(a):
    # T_{n-1}/T_n - 1/eps = (eps - 1/eps) / (eps T_n) > 0, so the approach is from above.
    limit = (a - math.sqrt(a * a - 4)) / 2
    values = [t_frac(n, a).as_fraction() for n in range(1, 25)]
    assert all(u > v for u, v in zip(values, values[1:]))
    assert all(v > limit - 1e-15 for v in values)
    assert abs(float(values[-1]) - limit) < 1e-12


def test_reduced_fraction_validation():
    with pytest.raises(DomainError):
        ReducedFraction(2, 4)
    with pytest.raises(DomainError):
        ReducedFraction(1, 1)
    assert ReducedFraction.from_fraction(Fraction(6, 21)) == ReducedFraction(2, 7)
