"""Real quadratic fields with a length-one unit, principal conductors, cone pairs.

A field ``Q(sqrt d)`` is described by the smallest ``(a, b)`` with
``a**2 - d*b**2 = 4``; ``eps = (a + b sqrt d)/2`` is then the totally
positive fundamental unit with ``eps + 1/eps = a``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from math import isqrt
from typing import Iterator

from sympy import factorint

from .errors import DomainError, OrbitPeriodError, OrderNotFoundError
from .exact_core import chebyshev_T, frac, frac1, unit_coeff_b

__all__ = [
    "ConePair",
    "FieldData",
    "OrbitConvention",
    "PrincipalConductor",
    "QuadInt",
    "conductor",
    "cone_pair",
    "divides",
    "enumerate_conductors",
    "g_of",
    "orbit",
    "solve_field",
]


@dataclass(frozen=True)
class FieldData:
    d: int
    a: int
    b: int

    def __post_init__(self) -> None:
        if self.a * self.a - self.d * self.b * self.b != 4:
            raise DomainError(f"a^2 - d b^2 != 4 for (d, a, b) = ({self.d}, {self.a}, {self.b})")

    @property
    def eps(self) -> "QuadInt":
        return QuadInt(self.a, self.b)

    def eps_power(self, k: int) -> "QuadInt":
        """``eps**k`` for ``k >= 0`` as an exact quadratic integer."""
        return QuadInt(chebyshev_T(k, self.a), unit_coeff_b(k, self.a, self.b))

    def describe(self) -> str:
        root = f"√{self.d}" if self.b == 1 else f"{self.b}√{self.d}"
        return f"a={self.a} b={self.b} eps=({self.a}+{root})/2"


@dataclass(frozen=True)
class QuadInt:
    """The number ``(p + q sqrt d)/2``; integrality is checked against a field."""

    p: int
    q: int

    def is_integral(self, d: int) -> bool:
        if d % 4 == 1:
            return (self.p - self.q) % 2 == 0
        return self.p % 2 == 0 and self.q % 2 == 0

    def conj(self) -> "QuadInt":
        return QuadInt(self.p, -self.q)

    def norm4(self, d: int) -> int:
        """Four times the norm, ``p**2 - d q**2``."""
        return self.p * self.p - d * self.q * self.q

    def is_zero(self) -> bool:
        return self.p == 0 and self.q == 0


class OrbitConvention(enum.Enum):
    """How ``U = [[a, -1], [1, 0]]`` acts on the pair ``(x, y)``.

    ROW:    (x, y) -> ([a x + y]_1, [-x])   (row vector times U)
    COLUMN: (x, y) -> ([a x - y]_1, [x])    (U times column vector)
    """

    ROW = "row"
    COLUMN = "column"

    def step(self, a: int, x: Fraction, y: Fraction) -> tuple[Fraction, Fraction]:
        if self is OrbitConvention.ROW:
            return frac1(a * x + y), frac(-x)
        return frac1(a * x - y), frac(x)


@dataclass(frozen=True)
class ConePair:
    x: Fraction
    y: Fraction

    def __post_init__(self) -> None:
        if not (0 < self.x <= 1 and 0 <= self.y < 1):
            raise DomainError(f"cone pair ({self.x}, {self.y}) out of range")

    def __iter__(self) -> Iterator[Fraction]:
        yield self.x
        yield self.y

    def __str__(self) -> str:
        return f"({self.x}, {self.y})"


@dataclass(frozen=True)
class PrincipalConductor:
    """The ideal generated by ``u + v sqrt d``."""

    u: int
    v: int
    norm: int
    field_data: FieldData = dc_field(repr=False, compare=False, hash=False)

    @property
    def generator(self) -> QuadInt:
        return QuadInt(2 * self.u, 2 * self.v)

    @property
    def is_degenerate(self) -> bool:
        """True for the unit ideal."""
        return self.norm == 1

    @property
    def is_rational(self) -> bool:
        return self.v == 0

    @property
    def g(self) -> int:
        # g_of memoizes per (d, u, v); computing lazily here is safe to race.
        return g_of(self.field_data, self)

    def __str__(self) -> str:
        if self.v == 0:
            return f"({self.u})"
        root = f"√{self.field_data.d}"
        vpart = root if abs(self.v) == 1 else f"{abs(self.v)}{root}"
        if self.u == 0:
            return f"({'-' if self.v < 0 else ''}{vpart})"
        return f"({self.u}{'-' if self.v < 0 else '+'}{vpart})"


def _is_squarefree(d: int) -> bool:
    return all(e == 1 for e in factorint(d).values())


def solve_field(d: int) -> FieldData:
    """Find the minimal ``(a, b)`` with ``a**2 - d b**2 = 4``, ``a >= 3``, ``b >= 1``."""
    if d < 2:
        raise DomainError(f"d must be at least 2, got {d}")
    if not _is_squarefree(d):
        raise DomainError(f"d={d} is not squarefree")
    b = 1
    while True:
        a2 = 4 + d * b * b
        a = isqrt(a2)
        if a * a == a2:
            return FieldData(d, a, b)
        b += 1


def conductor(fld: FieldData, u: int, v: int) -> PrincipalConductor:
    """The principal ideal ``(u + v sqrt d)``; the unit ideal is allowed."""
    if u == 0 and v == 0:
        raise DomainError("the zero ideal is not a conductor")
    return PrincipalConductor(u, v, abs(u * u - fld.d * v * v), fld)


def divides(fld: FieldData, w: QuadInt, alpha: QuadInt) -> bool:
    """Decide exactly whether ``alpha / w`` lies in the ring of integers."""
    if w.is_zero():
        raise DomainError("division by zero")
    d = fld.d
    # alpha/w = alpha*conj(w)/N(w); with halves tracked this is
    # (P + Q sqrt d)/2 where P = 2(ps - qtd)/M, Q = 2(qs - pt)/M, M = s^2 - d t^2.
    p, q, s, t = alpha.p, alpha.q, w.p, w.q
    m = s * s - d * t * t
    num_p = 2 * (p * s - q * t * d)
    num_q = 2 * (q * s - p * t)
    if num_p % m or num_q % m:
        return False
    return QuadInt(num_p // m, num_q // m).is_integral(d)


_g_cache: dict[tuple[int, int, int], int] = {}


def g_of(fld: FieldData, cond: PrincipalConductor, cap: int | None = None) -> int:
    """Smallest ``l >= 1`` with ``eps**l = 1`` modulo the conductor.

    The default cap is ``4 * norm**2``.
    """
    key = (fld.d, cond.u, cond.v)
    if key in _g_cache:
        return _g_cache[key]
    if cap is None:
        cap = 4 * cond.norm * cond.norm
    if cap < 1:
        raise DomainError(f"cap must be positive, got {cap}")
    w = cond.generator
    for l in range(1, cap + 1):
        e = fld.eps_power(l)
        if divides(fld, w, QuadInt(e.p - 2, e.q)):
            _g_cache[key] = l
            return l
    raise OrderNotFoundError(f"order not found within cap {cap} for {cond}")


def cone_pair(fld: FieldData, cond: PrincipalConductor) -> ConePair:
    den = fld.b * cond.norm
    x = frac1(Fraction(-2 * cond.v, den))
    y = frac(Fraction(fld.b * cond.u + fld.a * cond.v, den))
    return ConePair(x, y)


def orbit(pair: ConePair, g: int, conv: OrbitConvention, a: int) -> list[ConePair]:
    """The ``g`` points of the normalized orbit of ``pair``.

    Raises :class:`OrbitPeriodError` unless the ``g``-th step returns to
    ``pair``.
    """
    if g < 1:
        raise DomainError(f"g must be positive, got {g}")
    points = [pair]
    x, y = pair.x, pair.y
    for _ in range(g):
        x, y = conv.step(a, x, y)
        points.append(ConePair(x, y))
    if points[-1] != pair:
        raise OrbitPeriodError(
            f"orbit not g-periodic under convention {conv.value}: "
            f"{pair} -> {points[-1]} after g={g} steps"
        )
    return points[:-1]


def enumerate_conductors(fld: FieldData, norm_max: int, norm_min: int = 2) -> list[PrincipalConductor]:
    """Conductors ``u + v sqrt d`` with ``norm_min <= norm <= norm_max``.

    Generators are taken with ``u >= 0`` (and ``v >= 0`` when ``u == 0``);
    associates are not identified. Sorted by norm, then ``u``, then ``v``.
    """
    d = fld.d
    found = []
    # Box search; not every associate class is guaranteed a representative.
    vmax = fld.b * (isqrt(norm_max) + 1) + 1
    for v in range(-vmax, vmax + 1):
        umax = isqrt(d * v * v + norm_max) + 1
        for u in range(0, umax + 1):
            if u == 0 and v < 0:
                continue
            n = abs(u * u - d * v * v)
            if norm_min <= n <= norm_max:
                found.append(conductor(fld, u, v))
    found.sort(key=lambda c: (c.norm, c.u, abs(c.v), c.v))
    return found
