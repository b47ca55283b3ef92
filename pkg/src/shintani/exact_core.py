"""Exact integer and rational primitives.

Rationals are :class:`fractions.Fraction`, which is always kept in lowest
terms with a positive denominator, so equality is structural.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from .errors import DomainError

__all__ = [
    "ChebyshevSeq",
    "ReducedFraction",
    "UnitCoeffSeq",
    "chebyshev_T",
    "frac",
    "frac1",
    "t_frac",
    "unit_coeff_b",
]


def frac(r: Fraction | int) -> Fraction:
    """Fractional part in ``[0, 1)``."""
    r = Fraction(r)
    return Fraction(r.numerator % r.denominator, r.denominator)


def frac1(r: Fraction | int) -> Fraction:
    """Fractional part in ``(0, 1]``: like :func:`frac` but integers map to 1."""
    f = frac(r)
    return f if f else Fraction(1)


@dataclass(frozen=True)
class ReducedFraction:
    """A fraction ``m/n`` in lowest terms with ``n > 1``."""

    m: int
    n: int

    def __post_init__(self) -> None:
        if self.n <= 1:
            raise DomainError(f"denominator must exceed 1, got {self.n}")
        if gcd(self.m, self.n) != 1:
            raise DomainError(f"{self.m}/{self.n} is not reduced")

    @classmethod
    def from_fraction(cls, r: Fraction) -> "ReducedFraction":
        return cls(r.numerator, r.denominator)

    def as_fraction(self) -> Fraction:
        return Fraction(self.m, self.n)

    def __str__(self) -> str:
        return f"{self.m}/{self.n}"


class _LinearRecurrence:
    # u_{k+1} = a*u_k - u_{k-1}, memoized; appends happen under a lock so
    # concurrent readers only ever see a fully built prefix.
    def __init__(self, a: int, u0: int, u1: int) -> None:
        self.a = a
        self._values = [u0, u1]
        self._lock = threading.Lock()

    def __getitem__(self, k: int) -> int:
        if k < 0:
            raise IndexError(k)
        values = self._values
        if k < len(values):
            return values[k]
        with self._lock:
            values = self._values
            while len(values) <= k:
                values.append(self.a * values[-1] - values[-2])
            return values[k]


class ChebyshevSeq(_LinearRecurrence):
    """Values ``T_k(a)`` with ``T_0 = 2``, ``T_1 = a``.

    These are the normalized Chebyshev values characterized by
    ``T_k(x + 1/x) = x**k + x**-k``; negative indices use ``T_{-k} = T_k``.
    """

    def __init__(self, a: int) -> None:
        if a < 3:
            raise DomainError(f"a must be at least 3, got {a}")
        super().__init__(a, 2, a)

    def __getitem__(self, k: int) -> int:
        return super().__getitem__(abs(k))


class UnitCoeffSeq(_LinearRecurrence):
    """Coefficients ``b_k`` with ``eps**k = (T_k(a) + b_k*sqrt(d)) / 2``."""

    def __init__(self, a: int, b: int) -> None:
        if a < 3 or b < 1:
            raise DomainError(f"need a >= 3 and b >= 1, got a={a}, b={b}")
        super().__init__(a, 0, b)
        self.b = b


_cheb_cache: dict[int, ChebyshevSeq] = {}
_unit_cache: dict[tuple[int, int], UnitCoeffSeq] = {}
_cache_lock = threading.Lock()


def _cheb(a: int) -> ChebyshevSeq:
    seq = _cheb_cache.get(a)
    if seq is None:
        with _cache_lock:
            seq = _cheb_cache.setdefault(a, ChebyshevSeq(a))
    return seq


def chebyshev_T(n: int, a: int) -> int:
    """Return ``T_n(a)`` for any integer ``n``; requires ``a >= 3``."""
    if a < 3:
        raise DomainError(f"a must be at least 3, got {a}")
    return _cheb(a)[n]


def unit_coeff_b(n: int, a: int, b: int) -> int:
    """Return ``b_n`` such that ``eps**n = (T_n(a) + b_n sqrt(d)) / 2``."""
    if n < 0:
        raise DomainError(f"n must be nonnegative, got {n}")
    seq = _unit_cache.get((a, b))
    if seq is None:
        with _cache_lock:
            seq = _unit_cache.setdefault((a, b), UnitCoeffSeq(a, b))
    return seq[n]


def t_frac(n: int, a: int) -> ReducedFraction:
    """The reduced fraction ``T_{n-1}(a) / T_n(a)`` for ``n >= 1``."""
    if n < 1:
        raise DomainError(f"n must be at least 1, got {n}")
    return ReducedFraction.from_fraction(Fraction(chebyshev_T(n - 1, a), chebyshev_T(n, a)))
