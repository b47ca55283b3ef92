from __future__ import annotations

from fractions import Fraction

import gmpy2
import pytest

from shintani.errors import CalibrationError, DomainError, FeasibilityError, OrbitPeriodError, RouteUnavailableError
from shintani.invariants import (
    RouteId,
    SequenceSample,
    calibrate_convention,
    clear_caches,
    estimate_limit,
    route_estimate,
    verify,
    x1_r2_seq,
    x1_r3_seq,
    x2_r2_seq,
    x2_r3_seq,
    x_r1,
    x_r4_seq,
)
from shintani.precision import PrecisionContext
from shintani.quadratic_field import OrbitConvention, conductor, solve_field
from shintani.special_functions import log_double_sine

CTX = PrecisionContext(128)
F5 = solve_field(5)
F3 = solve_field(3)
TWO = conductor(F5, 2, 0)
ROOT3 = conductor(F3, 0, 1)
NS = range(4, 9)


def samples(values):
    with CTX.mpfr_context():
        return [SequenceSample(i, gmpy2.mpfr(v)) for i, v in enumerate(values)]


def test_route_parse():
    assert RouteId.parse(" R3 ") is RouteId.R3
    with pytest.raises(DomainError):
        RouteId.parse("r5")


def test_estimate_limit_constant():
    est = estimate_limit(samples([2, 2, 2]), ctx=CTX)
    assert est.estimate == 2 and est.error_indicator == 0 and est.method == "last"


def test_estimate_limit_two_samples_last_value():
    est = estimate_limit(samples([1, 3]), aitken=True, ctx=CTX)
    assert est.method == "last" and est.estimate == 3 and est.error_indicator == 2
    with pytest.raises(DomainError):
        estimate_limit(samples([1]), ctx=CTX)


def test_estimate_limit_aitken_geometric():
    L, r, rho = Fraction(7, 3), Fraction(5), Fraction(1, 2)
    with CTX.mpfr_context():
        seq = [SequenceSample(n, gmpy2.mpfr(gmpy2.mpq(L + r * rho**n))) for n in range(1, 7)]
        est = estimate_limit(seq, aitken=True, ctx=CTX)
        assert est.method == "aitken"
        assert abs(est.estimate - gmpy2.mpq(7, 3)) <= rho**2 * r * 1e-20
        plain = estimate_limit(seq, ctx=CTX)
        assert abs(plain.estimate - gmpy2.mpq(7, 3)) > abs(est.estimate - gmpy2.mpq(7, 3))


def test_estimate_limit_aitken_needs_decreasing_deltas():
    est = estimate_limit(samples([1, 2, 4, 8]), aitken=True, ctx=CTX)
    assert est.method == "last"


def test_r1_unit_ideal():
    unit = conductor(F5, 1, 0)
    est = x_r1(F5, unit, OrbitConvention.ROW, CTX)
    with CTX.mpfr_context():
        eps = (3 + gmpy2.sqrt(gmpy2.mpfr(5))) / 2
        s1, _ = log_double_sine(eps, eps, CTX)
        s2, _ = log_double_sine(1 / eps, 1 / eps, CTX)
        assert abs(gmpy2.log(est.x1.estimate) - s1) < 1e-35
        assert abs(gmpy2.log(est.x2.estimate) - s2) < 1e-35
        assert est.x == est.x1.estimate * est.x2.estimate


def test_r1_rejects_non_periodic_convention():
    # (sqrt 5) has g = 2; the column action does not close after 2 steps.
    with pytest.raises(OrbitPeriodError):
        x_r1(F5, conductor(F5, 0, 1), OrbitConvention.COLUMN, CTX)


def test_r2_sequences_converge_monotonically():
    for seq in (x1_r2_seq(F5, TWO, range(4, 11), CTX), x2_r2_seq(F5, TWO, range(4, 11), CTX)):
        deltas = [s.delta for s in seq.samples[1:]]
        assert all(dl > 0 for dl in deltas)
        assert all(a > b for a, b in zip(deltas, deltas[1:]))
        assert all(s.value > 0 for s in seq.samples)


def test_r3_integer_second_argument_drops_out():
    # X1 for (2) uses D(1/2, 1); the R4 route uses D(1/2, 0).
    r3 = x1_r3_seq(F5, TWO, NS, CTX)
    r4 = x_r4_seq(F5, 2, NS, CTX)
    assert r3.degenerate == r4.degenerate
    assert [(s.n, s.value) for s in r3.samples] == [(s.n, s.value) for s in r4.samples]


def test_r3_argument_swap():
    cond = conductor(F5, 3, 2)  # pair (7/11, 9/11), g = 5
    x1 = x1_r3_seq(F5, cond, range(3, 6), CTX)
    x2 = x2_r3_seq(F5, cond, range(3, 6), CTX)
    assert x1.component == "x1" and x2.component == "x2"
    assert [s.value for s in x1.samples] != [s.value for s in x2.samples]


def test_r4_domain():
    with pytest.raises(DomainError):
        x_r4_seq(F5, 1, NS, CTX)


def test_r4_second_field_smoke():
    seq = x_r4_seq(F3, 5, range(3, 7), CTX)
    assert seq.samples and all(s.value > 0 for s in seq.samples)
    r3 = x1_r3_seq(F3, conductor(F3, 5, 0), range(3, 7), CTX)
    assert [s.value for s in seq.samples] == [s.value for s in r3.samples]


def test_r3_route_unavailable_when_all_degenerate():
    with pytest.raises(RouteUnavailableError, match="route unavailable"):
        route_estimate(RouteId.R3, F3, ROOT3, range(3, 8), CTX)


def test_feasibility_cap():
    with pytest.raises(FeasibilityError):
        route_estimate(RouteId.R2, F5, TWO, range(4, 13), CTX, cap=1000)


def test_calibration_and_cross_route_agreement():
    clear_caches()
    conv = calibrate_convention(F5, TWO, CTX, 1e-2, range(4, 10))
    assert conv is OrbitConvention.ROW
    r1 = route_estimate(RouteId.R1, F5, TWO, NS, CTX, conv)
    r2 = route_estimate(RouteId.R2, F5, TWO, range(4, 11), CTX)
    with CTX.mpfr_context():
        assert abs(r1.x1.estimate - r2.x1.estimate) < 1e-2
        assert abs(r1.x2.estimate - r2.x2.estimate) < 1e-2


def test_calibration_zero_tolerance_inconclusive():
    clear_caches()
    with pytest.raises(CalibrationError, match="inconclusive"):
        calibrate_convention(F5, TWO, CTX, 0.0, range(4, 8))


def test_calibration_rejects_unit_ideal():
    with pytest.raises(DomainError):
        calibrate_convention(F5, conductor(F5, 1, 0), CTX, 1e-3)


def test_verify_report_structure():
    rep = verify(F5, TWO, range(4, 11), CTX, 1e-2, routes=(RouteId.R2, RouteId.R3, RouteId.R4))
    assert set(rep.routes) == {RouteId.R2, RouteId.R3, RouteId.R4}
    assert rep.g == 3 and rep.convention is None
    with CTX.mpfr_context():
        for est in rep.routes.values():
            assert est.x == est.x1.estimate * est.x2.estimate
    assert len(rep.deviations) == 9
    assert rep.passed
    assert not verify(F5, TWO, range(4, 11), CTX, 1e-30, routes=(RouteId.R2, RouteId.R3)).passed


def test_verify_records_route_errors():
    rep = verify(F5, conductor(F5, 0, 1), NS, CTX, 1e-2, routes=(RouteId.R2, RouteId.R4))
    assert RouteId.R4 in rep.errors and not rep.passed


def test_parallel_matches_serial():
    clear_caches()
    serial = route_estimate(RouteId.R3, F5, TWO, NS, CTX, jobs=1)
    clear_caches()
    parallel = route_estimate(RouteId.R3, F5, TWO, NS, CTX, jobs=3)
    assert serial.x1.estimate == parallel.x1.estimate and serial.x2.estimate == parallel.x2.estimate
