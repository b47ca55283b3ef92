"""Working-precision contract for the transcendental evaluations.

Real numbers are MPFR values (:class:`gmpy2.mpfr`). Every operation that
produces one opens its own explicit context built from a
:class:`PrecisionContext`, so results never depend on ambient precision
and are bit-identical across threads and processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
import mpmath

from .errors import DomainError
from .exact_core import frac

__all__ = [
    "BigReal",
    "PrecisionContext",
    "decimal_digits",
    "format_real",
    "from_mpmath",
    "parse_real",
    "rational_to_real",
    "reduce_mod1_exact",
    "to_mpmath",
]

BigReal = type(gmpy2.mpfr(0))

DEFAULT_BITS = 256


@dataclass(frozen=True)
class PrecisionContext:
    """Precision settings, passed explicitly to every evaluation.

    Parameters
    ----------
    p_bits : int
        Target precision of reported values, at least 64.
    guard_bits : int
        Extra bits carried internally.
    quad_degree : int
        Maximum tanh-sinh refinement degree for the double-sine integral.
    """

    p_bits: int = DEFAULT_BITS
    guard_bits: int = 32
    quad_degree: int = 10

    def __post_init__(self) -> None:
        if self.p_bits < 64:
            raise DomainError(f"p_bits must be at least 64, got {self.p_bits}")
        if self.guard_bits < 0:
            raise DomainError("guard_bits must be nonnegative")

    @property
    def work_bits(self) -> int:
        return self.p_bits + self.guard_bits

    def mpfr_context(self, extra_bits: int = 0) -> gmpy2.context:
        """A fresh MPFR context at working precision plus ``extra_bits``.

        The exponent range is widened to the MPFR maximum: long products
        of magnitudes overflow the default range.
        """
        return gmpy2.context(
            precision=self.work_bits + extra_bits,
            emax=gmpy2.get_emax_max(),
            emin=gmpy2.get_emin_min(),
        )

    def output_context(self) -> gmpy2.context:
        return gmpy2.context(
            precision=self.p_bits, emax=gmpy2.get_emax_max(), emin=gmpy2.get_emin_min()
        )

    def mpmath_context(self, extra_bits: int = 0) -> mpmath.ctx_mp.MPContext:
        ctx = mpmath.MPContext()
        ctx.prec = self.work_bits + extra_bits
        return ctx

    def doubled(self) -> "PrecisionContext":
        return PrecisionContext(2 * self.p_bits, self.guard_bits, self.quad_degree)

    def slack(self) -> BigReal:
        """Smallest error indicator a reported value may quote."""
        with self.output_context():
            return gmpy2.mul_2exp(gmpy2.mpfr(1), -self.p_bits + self.guard_bits)


def reduce_mod1_exact(r: Fraction | int) -> Fraction:
    """Exact reduction into ``[0, 1)``; every phase goes through this."""
    return frac(r)


def rational_to_real(r: Fraction | int, ctx: PrecisionContext) -> BigReal:
    """Correctly rounded conversion of an exact rational at ``p_bits``."""
    r = Fraction(r)
    with ctx.output_context():
        return gmpy2.mpfr(gmpy2.mpq(r.numerator, r.denominator))


def to_mpmath(x: BigReal, mctx: mpmath.ctx_mp.MPContext):
    """Exact conversion of an MPFR value into an mpmath context."""
    if gmpy2.is_zero(x):
        return mctx.zero
    man, exp = x.as_mantissa_exp()
    return mctx.ldexp(mctx.mpf(int(man)), int(exp))


def from_mpmath(v, ctx: PrecisionContext, extra_bits: int = 0) -> BigReal:
    """Convert an mpmath real to MPFR, rounding to the working precision."""
    sign, man, exp, _bc = v._mpf_
    if not man:
        return gmpy2.mpfr(0)
    with ctx.mpfr_context(extra_bits):
        x = gmpy2.mul_2exp(gmpy2.mpfr(int(man)), int(exp))
        return -x if sign else x


def decimal_digits(p_bits: int) -> int:
    """Significant digits that make a decimal string round-trip at ``p_bits``."""
    return math.ceil(p_bits * math.log10(2)) + 1


def format_real(x: BigReal, p_bits: int) -> str:
    """Decimal string that parses back to the same ``p_bits`` value."""
    if gmpy2.is_zero(x):
        return "0"
    with gmpy2.context(precision=p_bits, emax=gmpy2.get_emax_max(), emin=gmpy2.get_emin_min()):
        y = gmpy2.mpfr(x)
        if not gmpy2.is_finite(y):
            return str(y)
        mant, exp, _ = y.digits(10, decimal_digits(p_bits))
        sign = ""
        if mant.startswith("-"):
            sign, mant = "-", mant[1:]
        return f"{sign}{mant[0]}.{mant[1:]}e{exp - 1:+d}"


def parse_real(s: str, p_bits: int) -> BigReal:
    with gmpy2.context(precision=p_bits, emax=gmpy2.get_emax_max(), emin=gmpy2.get_emin_min()):
        return gmpy2.mpfr(s)
