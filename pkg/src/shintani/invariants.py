"""Shintani's invariant ``X = X1 * X2`` by four routes, and their cross-check.

Routes
------
r1  finite product of double sines over the normalized orbit of ``(x, y)``.
r2  ratio of q-Pochhammer symbols at ``tau_{n -/+ g}`` (``tau_{-n -/+ g}`` for X2).
r3  ratio of cyclic dilogarithms at ``t_n = T_{n-1}/T_n`` and ``t_{n+g}``;
    X1 uses the swapped arguments ``(y, x)``, X2 uses ``(x, y)``.
r4  for rational conductors ``(u)``: the r3 ratio with arguments ``(1/u, 0)``.

r2-r4 produce sequences in ``n`` whose limits are estimated from the tail.
"""

from __future__ import annotations

import enum
import itertools
import threading
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import gmpy2

from .errors import (
    CalibrationError,
    DomainError,
    FeasibilityError,
    OrbitPeriodError,
    RouteUnavailableError,
    ShintaniError,
)
from .exact_core import chebyshev_T, frac, t_frac
from .precision import BigReal, PrecisionContext
from .quadratic_field import (
    ConePair,
    FieldData,
    OrbitConvention,
    PrincipalConductor,
    cone_pair,
    conductor,
    enumerate_conductors,
    orbit,
)
from .special_functions import cyclic_dilog_abs, log_double_sine, qpoch_log_abs, tau

__all__ = [
    "DEFAULT_CAP",
    "Deviation",
    "LimitEstimate",
    "RouteEstimate",
    "RouteId",
    "RouteSequence",
    "SequenceSample",
    "VerificationReport",
    "calibrate_convention",
    "clear_caches",
    "estimate_limit",
    "route_estimate",
    "verify",
    "x1_r2_seq",
    "x1_r3_seq",
    "x2_r2_seq",
    "x2_r3_seq",
    "x_r1",
    "x_r4_seq",
]

DEFAULT_CAP = 10**7
# Largest norm searched for a conductor that separates the orbit conventions.
CALIBRATION_NORM_MAX = 50


class RouteId(enum.Enum):
    R1 = "r1"
    R2 = "r2"
    R3 = "r3"
    R4 = "r4"

    @classmethod
    def parse(cls, text: str) -> "RouteId":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise DomainError(f"unknown route {text!r}; expected one of r1, r2, r3, r4") from None


@dataclass(frozen=True)
class SequenceSample:
    n: int
    value: BigReal
    delta: BigReal | None = None


@dataclass(frozen=True)
class RouteSequence:
    """Samples of one component (``"x1"`` or ``"x2"``) of one route.

    Indices where a factor vanishes exactly are listed in ``degenerate``
    and carry no sample.
    """

    route: RouteId
    component: str
    samples: tuple[SequenceSample, ...]
    degenerate: tuple[int, ...] = ()

    @property
    def values(self) -> list[BigReal]:
        return [s.value for s in self.samples]


@dataclass(frozen=True)
class LimitEstimate:
    estimate: BigReal
    error_indicator: BigReal
    method: str  # "last", "aitken", or "exact" for the finite product


@dataclass(frozen=True)
class RouteEstimate:
    route: RouteId
    x1: LimitEstimate
    x2: LimitEstimate
    x: BigReal
    sequences: tuple[RouteSequence, ...] = ()


@dataclass(frozen=True)
class Deviation:
    first: RouteId
    second: RouteId
    component: str
    value: BigReal


@dataclass(frozen=True)
class VerificationReport:
    field: FieldData
    conductor: PrincipalConductor
    pair: ConePair
    g: int
    convention: OrbitConvention | None
    routes: dict[RouteId, RouteEstimate]
    errors: dict[RouteId, str]
    deviations: tuple[Deviation, ...]
    tolerance: float
    passed: bool
    calibration_error: str | None = None
    p_bits: int = 256

    def max_deviation(self) -> BigReal | None:
        if not self.deviations:
            return None
        return max(dv.value for dv in self.deviations)


# --- cached per-index evaluations ------------------------------------------

_cache_lock = threading.Lock()
_qpoch_cache: dict[tuple, BigReal] = {}
_dilog_cache: dict[tuple, BigReal | None] = {}
_calibration_cache: dict[tuple, OrbitConvention] = {}


def clear_caches() -> None:
    """Forget all memoized evaluations and calibrations."""
    with _cache_lock:
        _qpoch_cache.clear()
        _dilog_cache.clear()
        _calibration_cache.clear()


def _qpoch_key(fld: FieldData, index: int, x: Fraction, y: Fraction, ctx: PrecisionContext) -> tuple:
    return ("q", fld.d, fld.a, fld.b, index, x, frac(y), ctx)


def _dilog_key(a: int, index: int, x: Fraction, y: Fraction, ctx: PrecisionContext) -> tuple:
    # y only enters through exp(2 pi i y); x does not reduce.
    return ("D", a, index, x, frac(y), ctx)


def _eval_key(key: tuple):
    if key[0] == "q":
        _, d, a, b, index, x, y, ctx = key
        return qpoch_log_abs(x, y, tau(FieldData(d, a, b), index, ctx), ctx)
    _, a, index, x, y, ctx = key
    return cyclic_dilog_abs(t_frac(index, a), x, y, ctx).log_abs


def _cache_for(key: tuple) -> dict:
    return _qpoch_cache if key[0] == "q" else _dilog_cache


def _ensure(keys: Iterable[tuple], jobs: int = 1) -> None:
    """Populate the caches for ``keys``, in parallel over keys when ``jobs > 1``.

    Each key is evaluated by one deterministic call, so the cached values do
    not depend on ``jobs``.
    """
    missing = []
    for key in keys:
        if key not in _cache_for(key) and key not in missing:
            missing.append(key)
    if not missing:
        return
    if jobs > 1 and len(missing) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_eval_key, missing))
    else:
        results = [_eval_key(k) for k in missing]
    with _cache_lock:
        for key, value in zip(missing, results):
            _cache_for(key)[key] = value


def _lookup(key: tuple):
    cache = _cache_for(key)
    if key not in cache:
        _ensure([key])
    return cache[key]


def _check_feasible(fld: FieldData, index: int, cap: int) -> None:
    size = chebyshev_T(index, fld.a)
    if size > cap:
        raise FeasibilityError(f"T_{abs(index)}({fld.a}) = {size} exceeds the feasibility cap {cap}")


# --- sequences ---------------------------------------------------------------


def _samples(
    route: RouteId,
    component: str,
    ns: Sequence[int],
    logs: Callable[[int], BigReal | None],
    ctx: PrecisionContext,
) -> RouteSequence:
    samples: list[SequenceSample] = []
    degenerate: list[int] = []
    for n in ns:
        log_value = logs(n)
        if log_value is None:
            degenerate.append(n)
            continue
        with ctx.mpfr_context():
            value = gmpy2.exp(log_value)
            delta = abs(value - samples[-1].value) if samples else None
        samples.append(SequenceSample(n, value, delta))
    return RouteSequence(route, component, tuple(samples), tuple(degenerate))


def _setup(fld: FieldData, cond: PrincipalConductor) -> tuple[int, Fraction, Fraction]:
    g = cond.g
    pair = cone_pair(fld, cond)
    return g, pair.x, pair.y


def _r2_keys(fld, x, y, ns, g, ctx, sign):
    return [_qpoch_key(fld, sign * n + s * g, x, y, ctx) for n in ns for s in (-1, 1)]


def _r2_seq(fld, cond, n_range, ctx, cap, jobs, component):
    g, x, y = _setup(fld, cond)
    ns = list(n_range)
    sign = 1 if component == "x1" else -1
    for n in ns:
        _check_feasible(fld, n + g, cap)
    _ensure(_r2_keys(fld, x, y, ns, g, ctx, sign), jobs)

    def logs(n: int) -> BigReal:
        # X1: (x,y;tau_{n-g}) / (x,y;tau_{n+g});  X2: (x,y;tau_{-n-g}) / (x,y;tau_{-n+g})
        num = _lookup(_qpoch_key(fld, sign * n - g, x, y, ctx))
        den = _lookup(_qpoch_key(fld, sign * n + g, x, y, ctx))
        with ctx.mpfr_context():
            return num - den

    return _samples(RouteId.R2, component, ns, logs, ctx)


def x1_r2_seq(fld, cond, n_range, ctx, cap: int = DEFAULT_CAP, jobs: int = 1) -> RouteSequence:
    """``|(x, y; tau_{n-g})_inf / (x, y; tau_{n+g})_inf|`` for ``n`` in ``n_range``."""
    return _r2_seq(fld, cond, n_range, ctx, cap, jobs, "x1")


def x2_r2_seq(fld, cond, n_range, ctx, cap: int = DEFAULT_CAP, jobs: int = 1) -> RouteSequence:
    """``|(x, y; tau_{-n-g})_inf / (x, y; tau_{-n+g})_inf|`` for ``n`` in ``n_range``."""
    return _r2_seq(fld, cond, n_range, ctx, cap, jobs, "x2")


def _dilog_ratio_seq(fld, route, component, args, g, n_range, ctx, cap, jobs) -> RouteSequence:
    ns = list(n_range)
    if any(n < 1 for n in ns):
        raise DomainError("dilogarithm routes need n >= 1")
    for n in ns:
        _check_feasible(fld, n + g, cap)
    u, w = args
    _ensure([_dilog_key(fld.a, k, u, w, ctx) for n in ns for k in (n, n + g)], jobs)

    def logs(n: int) -> BigReal | None:
        num = _lookup(_dilog_key(fld.a, n, u, w, ctx))
        den = _lookup(_dilog_key(fld.a, n + g, u, w, ctx))
        if num is None or den is None:
            return None
        with ctx.mpfr_context():
            return num - den

    seq = _samples(route, component, ns, logs, ctx)
    if not seq.samples:
        raise RouteUnavailableError(
            f"route unavailable: every n in {ns[0]}..{ns[-1]} has a vanishing factor"
        )
    return seq


def x1_r3_seq(fld, cond, n_range, ctx, cap: int = DEFAULT_CAP, jobs: int = 1) -> RouteSequence:
    """``|D_{t_n}(y, x) / D_{t_{n+g}}(y, x)|``; degenerate ``n`` are skipped."""
    g, x, y = _setup(fld, cond)
    return _dilog_ratio_seq(fld, RouteId.R3, "x1", (y, x), g, n_range, ctx, cap, jobs)


def x2_r3_seq(fld, cond, n_range, ctx, cap: int = DEFAULT_CAP, jobs: int = 1) -> RouteSequence:
    """``|D_{t_n}(x, y) / D_{t_{n+g}}(x, y)|``; degenerate ``n`` are skipped."""
    g, x, y = _setup(fld, cond)
    return _dilog_ratio_seq(fld, RouteId.R3, "x2", (x, y), g, n_range, ctx, cap, jobs)


def x_r4_seq(fld, u: int, n_range, ctx, cap: int = DEFAULT_CAP, jobs: int = 1) -> RouteSequence:
    """``|D_{t_n}(1/u) / D_{t_{n+g}}(1/u)|`` for the conductor ``(u)``.

    The one-variable form is read as ``D_t(w) = D_t(w, 0)``.
    """
    if u <= 1:
        raise DomainError(f"r4 needs u >= 2 (u = {u} makes a factor vanish)")
    g = conductor(fld, u, 0).g
    return _dilog_ratio_seq(fld, RouteId.R4, "x1", (Fraction(1, u), Fraction(0)), g, n_range, ctx, cap, jobs)


# --- limits ------------------------------------------------------------------


def estimate_limit(samples: Sequence[SequenceSample], aitken: bool = False, ctx: PrecisionContext | None = None) -> LimitEstimate:
    """Estimate the limit of a sequence from its last samples.

    By default the last value is returned with the last ``|delta|`` as error
    indicator. With ``aitken=True`` and the last three deltas nonzero and
    decreasing, the Aitken delta-squared value of the last three samples is
    returned instead, with ``|aitken - last|`` as indicator.
    """
    if len(samples) < 2:
        raise DomainError("need at least two samples to estimate a limit")
    ctx = ctx or PrecisionContext()
    with ctx.mpfr_context():
        values = [s.value for s in samples]
        last = values[-1]
        indicator = abs(last - values[-2])
        if aitken and len(values) >= 4:
            deltas = [abs(values[i + 1] - values[i]) for i in range(len(values) - 4, len(values) - 1)]
            if all(dl > 0 for dl in deltas) and deltas[0] > deltas[1] > deltas[2]:
                v0, v1, v2 = values[-3:]
                denom = (v2 - v1) - (v1 - v0)
                if denom != 0:
                    acc = v2 - (v2 - v1) ** 2 / denom
                    return LimitEstimate(acc, abs(acc - v2), "aitken")
        return LimitEstimate(+last, indicator, "last")


# --- route r1 ----------------------------------------------------------------


def _units(fld: FieldData, ctx: PrecisionContext, extra: int = 16) -> tuple[BigReal, BigReal]:
    with ctx.mpfr_context(extra):
        s = fld.a + fld.b * gmpy2.sqrt(gmpy2.mpfr(fld.d))
        return s / 2, 2 / s


def x_r1(fld: FieldData, cond: PrincipalConductor, conv: OrbitConvention, ctx: PrecisionContext) -> RouteEstimate:
    """``X1 = prod_l S(eps, x_l eps + y_l)`` and ``X2 = prod_l S(eps', x_l eps' + y_l)``."""
    g = cond.g
    points = orbit(cone_pair(fld, cond), g, conv, fld.a)
    eps, eps_conj = _units(fld, ctx)
    parts = []
    for omega in (eps, eps_conj):
        total_log = gmpy2.mpfr(0)
        total_err = gmpy2.mpfr(0)
        for p in points:
            with ctx.mpfr_context(16):
                z = gmpy2.mpfr(gmpy2.mpq(p.x.numerator, p.x.denominator)) * omega + gmpy2.mpfr(
                    gmpy2.mpq(p.y.numerator, p.y.denominator)
                )
            log_s, err = log_double_sine(omega, z, ctx)
            with ctx.mpfr_context():
                total_log += log_s
                total_err += err
        with ctx.mpfr_context():
            value = gmpy2.exp(total_log)
            parts.append(LimitEstimate(value, value * total_err, "exact"))
    with ctx.mpfr_context():
        x = parts[0].estimate * parts[1].estimate
    return RouteEstimate(RouteId.R1, parts[0], parts[1], x)


# --- calibration -------------------------------------------------------------


def _periodic_orbits(fld: FieldData, cond: PrincipalConductor) -> dict[OrbitConvention, list[ConePair]]:
    pair = cone_pair(fld, cond)
    found = {}
    for conv in OrbitConvention:
        try:
            found[conv] = orbit(pair, cond.g, conv, fld.a)
        except OrbitPeriodError:
            continue
    return found


def _calibrate_on(fld, cond, ctx, tol, n_range, cap, jobs) -> OrbitConvention | None:
    """Convention selected by ``cond``, or None if ``cond`` cannot tell them apart."""
    orbits = _periodic_orbits(fld, cond)
    if not orbits:
        raise CalibrationError(f"calibration inconclusive: no convention is periodic on {cond}")
    if len(orbits) == 2:
        row, col = (orbits[c] for c in (OrbitConvention.ROW, OrbitConvention.COLUMN))
        if sorted(row, key=_pair_key) == sorted(col, key=_pair_key):
            return None
    r2 = route_estimate(RouteId.R2, fld, cond, n_range, ctx, cap=cap, jobs=jobs)
    matches = []
    for conv in orbits:
        r1 = x_r1(fld, cond, conv, ctx)
        with ctx.mpfr_context():
            if abs(r1.x1.estimate - r2.x1.estimate) <= tol and abs(r1.x2.estimate - r2.x2.estimate) <= tol:
                matches.append(conv)
    if len(matches) == 1:
        return matches[0]
    if not matches:
        raise CalibrationError(
            f"calibration inconclusive: no convention reproduces the q-Pochhammer limit on {cond} within {tol}"
        )
    return None


def _pair_key(p: ConePair) -> tuple[Fraction, Fraction]:
    return (p.x, p.y)


def calibrate_convention(
    fld: FieldData,
    cond: PrincipalConductor,
    ctx: PrecisionContext,
    tol: float,
    n_range: Iterable[int] = range(4, 13),
    cap: int = DEFAULT_CAP,
    jobs: int = 1,
) -> OrbitConvention:
    """Pick the orbit convention under which r1 agrees with the r2 limit.

    Conventions whose orbit does not close after ``g`` steps are discarded
    first. If ``cond`` cannot separate the conventions (same orbit up to
    order, or both agree), further conductors of the same field are tried
    by increasing norm. The result is cached per field.
    """
    if cond.norm <= 1:
        raise DomainError("calibration needs a conductor of norm > 1")
    ns = tuple(n_range)
    key = (fld, ctx, float(tol), ns, cap)
    if key in _calibration_cache:
        return _calibration_cache[key]
    candidates = [cond] + [c for c in enumerate_conductors(fld, CALIBRATION_NORM_MAX) if (c.u, c.v) != (cond.u, cond.v)]
    for cand in candidates:
        try:
            chosen = _calibrate_on(fld, cand, ctx, tol, ns, cap, jobs)
        except (FeasibilityError, RouteUnavailableError):
            continue
        if chosen is not None:
            with _cache_lock:
                _calibration_cache[key] = chosen
            return chosen
    raise CalibrationError(f"calibration inconclusive: no conductor of norm <= {CALIBRATION_NORM_MAX} separates the conventions")


# --- estimates and verification ------------------------------------------------


def _prefetch(route, fld, cond, ns, ctx, cap, jobs) -> None:
    # Batch both components so one process pool covers the whole route.
    g, x, y = _setup(fld, cond)
    for n in ns:
        _check_feasible(fld, n + g, cap)
    if route is RouteId.R2:
        keys = _r2_keys(fld, x, y, ns, g, ctx, 1) + _r2_keys(fld, x, y, ns, g, ctx, -1)
    else:
        keys = [_dilog_key(fld.a, k, u, w, ctx) for u, w in ((y, x), (x, y)) for n in ns for k in (n, n + g)]
    _ensure(keys, jobs)


def _estimate_pair(seq1: RouteSequence, seq2: RouteSequence, route: RouteId, ctx, aitken) -> RouteEstimate:
    e1 = estimate_limit(seq1.samples, aitken, ctx)
    e2 = estimate_limit(seq2.samples, aitken, ctx)
    with ctx.mpfr_context():
        x = e1.estimate * e2.estimate
    return RouteEstimate(route, e1, e2, x, (seq1, seq2))


def route_estimate(
    route: RouteId,
    fld: FieldData,
    cond: PrincipalConductor,
    n_range: Iterable[int],
    ctx: PrecisionContext,
    conv: OrbitConvention | None = None,
    cap: int = DEFAULT_CAP,
    jobs: int = 1,
    aitken: bool = False,
) -> RouteEstimate:
    """Evaluate one route; ``conv`` is required for r1."""
    ns = list(n_range)
    if route is RouteId.R1:
        if conv is None:
            raise DomainError("r1 needs an orbit convention")
        return x_r1(fld, cond, conv, ctx)
    if route is RouteId.R2:
        _prefetch(route, fld, cond, ns, ctx, cap, jobs)
        return _estimate_pair(
            x1_r2_seq(fld, cond, ns, ctx, cap), x2_r2_seq(fld, cond, ns, ctx, cap), route, ctx, aitken
        )
    if route is RouteId.R3:
        _prefetch(route, fld, cond, ns, ctx, cap, jobs)
        return _estimate_pair(
            x1_r3_seq(fld, cond, ns, ctx, cap), x2_r3_seq(fld, cond, ns, ctx, cap), route, ctx, aitken
        )
    if cond.v != 0:
        raise DomainError("route r4 applies only to conductors (u) with v = 0")
    seq = x_r4_seq(fld, cond.u, ns, ctx, cap, jobs)
    est = estimate_limit(seq.samples, aitken, ctx)
    with ctx.mpfr_context():
        x = est.estimate * est.estimate
    return RouteEstimate(route, est, est, x, (seq,))


def verify(
    fld: FieldData,
    cond: PrincipalConductor,
    n_range: Iterable[int],
    ctx: PrecisionContext,
    tol: float,
    routes: Iterable[RouteId] = tuple(RouteId),
    cap: int = DEFAULT_CAP,
    jobs: int = 1,
    aitken: bool = False,
) -> VerificationReport:
    """Compute every requested route and compare them pairwise.

    Route failures are recorded in ``errors`` rather than raised. The report
    passes when at least two routes are available and every pairwise
    deviation of X1, X2 and X is at most ``tol``.
    """
    ns = list(n_range)
    routes = list(routes)
    g = cond.g
    pair = cone_pair(fld, cond)
    estimates: dict[RouteId, RouteEstimate] = {}
    errors: dict[RouteId, str] = {}
    convention = None
    calibration_error = None
    if RouteId.R1 in routes:
        try:
            convention = calibrate_convention(fld, cond, ctx, tol, ns, cap, jobs)
        except (CalibrationError, DomainError) as exc:
            calibration_error = str(exc)
            errors[RouteId.R1] = calibration_error
    for route in routes:
        if route is RouteId.R1 and convention is None:
            continue
        if route is RouteId.R4 and cond.v != 0:
            errors[route] = "not applicable: conductor is not of the form (u)"
            continue
        try:
            estimates[route] = route_estimate(route, fld, cond, ns, ctx, convention, cap, jobs, aitken)
        except ShintaniError as exc:
            errors[route] = str(exc)
    deviations = []
    with ctx.mpfr_context():
        for r1, r2 in itertools.combinations(sorted(estimates, key=lambda r: r.value), 2):
            e1, e2 = estimates[r1], estimates[r2]
            deviations.append(Deviation(r1, r2, "x1", abs(e1.x1.estimate - e2.x1.estimate)))
            deviations.append(Deviation(r1, r2, "x2", abs(e1.x2.estimate - e2.x2.estimate)))
            deviations.append(Deviation(r1, r2, "x", abs(e1.x - e2.x)))
    passed = len(estimates) >= 2 and all(dv.value <= tol for dv in deviations)
    return VerificationReport(
        fld, cond, pair, g, convention, estimates, errors, tuple(deviations), tol, passed, calibration_error, ctx.p_bits
    )
