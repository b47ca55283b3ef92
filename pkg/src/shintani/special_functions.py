"""q-Pochhammer symbol, cyclic quantum dilogarithm and double sine.

Every phase entering a sine or an exponential is first reduced modulo 1
in exact rational arithmetic, and ``|1 - exp(2 pi i theta)|`` is always
evaluated as ``2 |sin(pi theta)|`` with ``theta`` folded into
``[0, 1/2]``. The loops below run over up to a few million terms, so
magnitudes are accumulated as MPFR products (one logarithm at the end)
in a fixed order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import gmpy2

from .errors import DegenerateArgumentError, DomainError
from .exact_core import ReducedFraction, chebyshev_T, frac
from .precision import BigReal, PrecisionContext, from_mpmath, to_mpmath
from .quadratic_field import FieldData

__all__ = [
    "DilogResult",
    "GeodesicPoint",
    "HalfPlanePoint",
    "cyclic_dilog_abs",
    "cyclic_dilog_complex",
    "double_sine",
    "log_double_sine",
    "qpoch_abs",
    "qpoch_log_abs",
    "tau",
]

# Magnitude terms between forced recomputations of the exponential
# recurrence in the q-Pochhammer kernel.
_RESEED = 1024


@dataclass(frozen=True)
class HalfPlanePoint:
    """A point of the upper half-plane with exact rational real part."""

    re: Fraction
    im: BigReal

    def __post_init__(self) -> None:
        if not self.im > 0:
            raise DomainError("point must lie in the upper half-plane")


@dataclass(frozen=True)
class GeodesicPoint(HalfPlanePoint):
    """``tau_n = (T_{n+1}(a) + i b sqrt d) / T_n(a)``."""

    n: int = 0
    re_numerator: int = 0
    re_denominator: int = 1


def tau(fld: FieldData, n: int, ctx: PrecisionContext) -> GeodesicPoint:
    """The ``n``-th point of the discretized geodesic from ``eps'`` to ``eps``."""
    num = chebyshev_T(n + 1, fld.a)
    den = chebyshev_T(n, fld.a)
    with ctx.mpfr_context():
        im = fld.b * gmpy2.sqrt(gmpy2.mpfr(fld.d)) / den
    return GeodesicPoint(Fraction(num, den), im, n, num, den)


@dataclass(frozen=True)
class DilogResult:
    """``|D_{m/n}(x, y)|`` as a logarithm, or an exact zero."""

    log_abs: BigReal | None
    p_bits: int

    @property
    def is_zero(self) -> bool:
        return self.log_abs is None

    @property
    def value(self) -> BigReal:
        with gmpy2.context(precision=self.p_bits, emax=gmpy2.get_emax_max(), emin=gmpy2.get_emin_min()):
            if self.log_abs is None:
                return gmpy2.mpfr(0)
            return gmpy2.exp(self.log_abs)


def _phase_progression(base: Fraction, step: Fraction) -> tuple[int, int, int]:
    """Integers ``(A0, S, L)`` with ``frac(base + k*step) = ((A0 + k*S) mod L)/L``."""
    base = frac(base)
    step = frac(step)
    L = base.denominator * step.denominator // gcd(base.denominator, step.denominator)
    return base.numerator * (L // base.denominator), step.numerator * (L // step.denominator), L


def cyclic_dilog_abs(f: ReducedFraction, x: Fraction, y: Fraction, ctx: PrecisionContext) -> DilogResult:
    """``|D_{m/n}(x, y)| = prod_{k=1}^{n-1} |1 - e^{2 pi i ((k + x) m/n + y)}|^{k/n}``.

    Vanishing factors are detected exactly, in which case the result is
    Zero. Otherwise the weighted sum ``sum_k k log|2 sin(pi theta_k)|`` is
    formed as ``log prod_j P_j`` with suffix products
    ``P_j = prod_{k >= j} |2 sin(pi theta_k)|``, iterating ``k`` from
    ``n - 1`` down to ``1``.
    """
    m, n = f.m, f.n
    x, y = Fraction(x), Fraction(y)
    A0, S, L = _phase_progression(x * Fraction(m, n) + y, Fraction(m, n))
    # theta_k = 0 iff A0 + k S = 0 (mod L); S = m (L/n) with gcd(m, n) = 1.
    c = L // n
    if A0 % c == 0 and (A0 // c) % n != 0:
        return DilogResult(None, ctx.p_bits)
    with ctx.mpfr_context(n.bit_length()):
        pi_over_L = gmpy2.const_pi() / L
        half = L // 2
        A = (A0 + (n - 1) * S) % L
        suffix = gmpy2.mpfr(1)
        total = gmpy2.mpfr(1)
        sin = gmpy2.sin
        for _ in range(n - 1):
            folded = A if A <= half else L - A
            suffix *= 2 * sin(pi_over_L * folded)
            total *= suffix
            A -= S
            if A < 0:
                A += L
        log_abs = gmpy2.log(total) / n
    with ctx.mpfr_context():
        return DilogResult(+log_abs, ctx.p_bits)


def cyclic_dilog_complex(
    f: ReducedFraction, x: Fraction, y: Fraction, ctx: PrecisionContext, max_n: int = 10_000
):
    """Complex ``D_{m/n}(x, y)``, principal branch for every factor's power.

    Small-``n`` oracle for :func:`cyclic_dilog_abs`; returns an mpmath
    complex number at working precision.
    """
    m, n = f.m, f.n
    if n > max_n:
        raise DomainError(f"n={n} exceeds the oracle bound {max_n}")
    mctx = ctx.mpmath_context()
    x, y = Fraction(x), Fraction(y)
    result = mctx.mpc(1)
    for k in range(1, n):
        theta = frac((k + x) * Fraction(m, n) + y)
        if theta == 0:
            raise DegenerateArgumentError(f"degenerate argument: factor k={k} vanishes")
        factor = 1 - mctx.expjpi(2 * mctx.mpf(theta.numerator) / theta.denominator)
        result *= mctx.exp(mctx.mpf(k) / n * mctx.log(factor))
    return result


def _log_abs_one_minus_run(
    x: Fraction, y: Fraction, re: Fraction, im: BigReal, count: int, mctx_factory
) -> BigReal:
    """``sum_{j=0}^{count-1} log|1 - e^{2 pi i ((j + x)(re + i im) + y)}|``.

    Uses ``|1 - rho e^{2 pi i phi}|^2 = (1 - rho)^2 + 4 rho sin^2(pi phi)``
    with ``1 - rho`` from ``expm1``, so nothing cancels.
    """
    A0, S, L = _phase_progression(x * re + y, re)
    half = L // 2
    with mctx_factory():
        pi_over_L = gmpy2.const_pi() / L
        two_pi_im = 2 * gmpy2.const_pi() * im
        xr = gmpy2.mpfr(gmpy2.mpq(x.numerator, x.denominator))
        c = gmpy2.exp(-two_pi_im)
        e = -gmpy2.expm1(-two_pi_im)
        sin, expm1 = gmpy2.sin, gmpy2.expm1
        prod = gmpy2.mpfr(1)
        A = A0
        delta = None
        for j in range(count):
            if j % _RESEED == 0:
                delta = -expm1(-two_pi_im * (j + xr))
            else:
                delta = delta * c + e
            folded = A if A <= half else L - A
            s = sin(pi_over_L * folded)
            prod *= delta * delta + 4 * (1 - delta) * s * s
            A += S
            if A >= L:
                A -= L
        return gmpy2.log(prod) / 2


def _block_tail(x: Fraction, y: Fraction, re: Fraction, im: BigReal, mctx_factory, bits: int) -> BigReal:
    """``sum_{j<T} sum_{l>=1} log|1 - w_j r^l|`` in closed form, ``T = den(re)``.

    With ``Q = e^{2 pi i tau}`` and ``Q^T = r`` this equals
    ``-Re sum_{i>=1} r^i w_0^i / (i (1 - Q^i))``.
    """
    T = re.denominator
    base = x * re + y
    with mctx_factory():
        pi = gmpy2.const_pi()
        two_pi_im = 2 * pi * im
        xr = gmpy2.mpfr(gmpy2.mpq(x.numerator, x.denominator))
        log_r_w0 = -two_pi_im * (T + xr)
        threshold = -bits * math.log(2)
        total = gmpy2.mpfr(0)
        i = 1
        while True:
            rho = gmpy2.exp(-two_pi_im * i)
            delta = -gmpy2.expm1(-two_pi_im * i)
            log_mag = log_r_w0 * i - gmpy2.log(delta)
            if log_mag < threshold:
                break
            psi = frac(i * re)
            s_half = gmpy2.sin(pi * gmpy2.mpfr(gmpy2.mpq(psi.numerator, psi.denominator)))
            s_full = gmpy2.sin(2 * pi * gmpy2.mpfr(gmpy2.mpq(psi.numerator, psi.denominator)))
            alpha = delta + 2 * rho * s_half * s_half
            beta = rho * s_full
            theta = frac(i * base)
            ang = 2 * pi * gmpy2.mpfr(gmpy2.mpq(theta.numerator, theta.denominator))
            sn, cs = gmpy2.sin_cos(ang)
            coeff = gmpy2.exp(log_r_w0 * i) / i
            total += coeff * (alpha * cs - beta * sn) / (alpha * alpha + beta * beta)
            i += 1
        return -total


def qpoch_log_abs(
    x: Fraction,
    y: Fraction,
    tau_pt: HalfPlanePoint,
    ctx: PrecisionContext,
    method: str = "auto",
    truncation: int | None = None,
) -> BigReal:
    """``log |(x, y; tau)_inf|`` where ``(x, y; tau)_inf = prod_{k>=0} (1 - e^{2 pi i (k tau + x tau + y)})``.

    ``method="direct"`` truncates the product after ``truncation`` factors
    (default: the first ``K`` with ``2 pi (K + x) Im tau >= work_bits ln 2``).
    ``method="block"`` groups ``k = j + l T`` with ``T`` the denominator
    of ``Re tau``: the first block is summed directly and all later
    blocks in closed form, so no truncation in ``k`` is needed.
    ``"auto"`` picks ``block`` when ``exp(-2 pi T Im tau) <= 1/2``.
    """
    x, y = Fraction(x), Fraction(y)
    if x <= 0:
        raise DomainError(f"x must be positive, got {x}")
    re, im = tau_pt.re, tau_pt.im
    if not im > 0:
        raise DomainError("Im tau must be positive")
    y = frac(y)
    T = re.denominator
    if method == "auto":
        method = "block" if 2 * math.pi * T * float(im) >= math.log(2) else "direct"
    if method == "direct":
        if truncation is None:
            need = ctx.work_bits * math.log(2) / (2 * math.pi * float(im)) - float(x)
            truncation = max(1, math.ceil(need) + 1)
        count = truncation
    elif method == "block":
        count = T
    else:
        raise ValueError(f"unknown method {method!r}")
    extra = count.bit_length() + 8

    def factory() -> gmpy2.context:
        return ctx.mpfr_context(extra)

    main = _log_abs_one_minus_run(x, y, re, im, count, factory)
    tail = _block_tail(x, y, re, im, factory, ctx.work_bits + extra) if method == "block" else 0
    with ctx.mpfr_context():
        return main + tail


def qpoch_abs(
    x: Fraction,
    y: Fraction,
    tau_pt: HalfPlanePoint,
    ctx: PrecisionContext,
    method: str = "auto",
    truncation: int | None = None,
) -> BigReal:
    """``|(x, y; tau)_inf|``; see :func:`qpoch_log_abs`."""
    log_abs = qpoch_log_abs(x, y, tau_pt, ctx, method, truncation)
    with ctx.mpfr_context():
        return gmpy2.exp(log_abs)


def _log_double_sine_mp(mctx, omega, z):
    A = 1 + omega - 2 * z
    if not A:
        return mctx.zero, mctx.zero
    p = mctx.prec
    cut = mctx.ldexp(1, -(p // 2 + 8))
    # h(t) = (f(t) - A/(2 omega t))/t is even and analytic at 0 with
    # h(0) = A (A^2 - 1 - omega^2) / (12 omega); h''(0) t^2 < 2^-p below cut.
    h0 = A * (A * A - 1 - omega * omega) / (12 * omega)

    def near(t):
        if t < cut:
            return h0
        # The two terms of h agree to ~2 log2(1/t) bits.
        lost = int(-2 * mctx.log(t, 2)) + 16 if t < 1 else 16
        with mctx.extraprec(lost):
            return (mctx.sinh(A * t) / (2 * mctx.sinh(t) * mctx.sinh(omega * t)) - A / (2 * omega * t)) / t

    def far(t):
        return mctx.sinh(A * t) / (2 * mctx.sinh(t) * mctx.sinh(omega * t) * t)

    decay = 1 / (2 * min(z, 1 + omega - z))
    points = [mctx.one] + [1 + decay * k for k in (1, 4, 16)] + [mctx.inf]
    i1, e1 = mctx.quad(near, [0, 1], error=True)
    i2, e2 = mctx.quad(far, points, error=True)
    return -(i1 + i2 - A / (2 * omega)), e1 + e2


def log_double_sine(omega, z, ctx: PrecisionContext) -> tuple[BigReal, BigReal]:
    """``log S(omega, z)`` and a quadrature error estimate.

    ``S`` is the double sine with periods ``(1, omega)``, normalized so
    that ``S(z + 1) = S(z) / (2 sin(pi z / omega))``,
    ``S(z + omega) = S(z) / (2 sin(pi z))`` and ``S(z) S(1 + omega - z) = 1``.
    It is evaluated from

        log S(omega, z) = -int_0^inf ( sinh((1 + omega - 2z) t) / (2 sinh(t) sinh(omega t))
                                       - (1 + omega - 2z) / (2 omega t) ) dt / t,

    valid for ``0 < z < 1 + omega``.
    """
    mctx = ctx.mpmath_context(16)
    mctx_omega = _to_mp(mctx, omega)
    mctx_z = _to_mp(mctx, z)
    if not mctx_omega > 0:
        raise DomainError("omega must be positive")
    if not (0 < mctx_z < 1 + mctx_omega):
        raise DomainError(f"z must lie in (0, 1 + omega); got z={mctx.nstr(mctx_z, 10)}")
    value, err = _log_double_sine_mp(mctx, mctx_omega, mctx_z)
    return from_mpmath(value, ctx), from_mpmath(mctx.mpf(err), ctx)


def double_sine(omega, z, ctx: PrecisionContext) -> BigReal:
    """``S(omega, z)`` for real ``omega > 0`` and ``0 < z < 1 + omega``."""
    log_s, _ = log_double_sine(omega, z, ctx)
    with ctx.mpfr_context():
        return gmpy2.exp(log_s)


def _to_mp(mctx, v):
    if isinstance(v, BigReal):
        return to_mpmath(v, mctx)
    if isinstance(v, Fraction):
        return mctx.mpf(v.numerator) / v.denominator
    if isinstance(v, (int, str)):
        return mctx.mpf(v)
    if isinstance(v, float):
        return mctx.mpf(v)
    return mctx.convert(v)
