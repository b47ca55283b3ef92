"""Shintani invariants of real quadratic fields from limits of quantum modular forms.

Exact field and orbit arithmetic, arbitrary-precision double sine,
q-Pochhammer and cyclic dilogarithm evaluations, and four independent
routes to the invariant that can be cross-checked against each other.
"""

from __future__ import annotations

from .errors import (
    CalibrationError,
    DegenerateArgumentError,
    DomainError,
    FeasibilityError,
    OrbitPeriodError,
    OrderNotFoundError,
    RouteUnavailableError,
    ShintaniError,
)
from .exact_core import ReducedFraction, chebyshev_T, frac, frac1, t_frac, unit_coeff_b
from .invariants import (
    RouteEstimate,
    RouteId,
    VerificationReport,
    calibrate_convention,
    clear_caches,
    estimate_limit,
    route_estimate,
    verify,
    x_r1,
)
from .precision import PrecisionContext, format_real, parse_real
from .quadratic_field import (
    ConePair,
    FieldData,
    OrbitConvention,
    PrincipalConductor,
    QuadInt,
    conductor,
    cone_pair,
    divides,
    enumerate_conductors,
    g_of,
    orbit,
    solve_field,
)
from .special_functions import (
    cyclic_dilog_abs,
    cyclic_dilog_complex,
    double_sine,
    log_double_sine,
    qpoch_abs,
    qpoch_log_abs,
    tau,
)

__version__ = "0.1.0"

__all__ = [
    "calibrate_convention",
    "CalibrationError",
    "chebyshev_T",
    "clear_caches",
    "conductor",
    "cone_pair",
    "ConePair",
    "cyclic_dilog_abs",
    "cyclic_dilog_complex",
    "DegenerateArgumentError",
    "divides",
    "DomainError",
    "double_sine",
    "enumerate_conductors",
    "estimate_limit",
    "FeasibilityError",
    "FieldData",
    "format_real",
    "frac",
    "frac1",
    "g_of",
    "log_double_sine",
    "orbit",
    "OrbitConvention",
    "OrbitPeriodError",
    "OrderNotFoundError",
    "parse_real",
    "PrecisionContext",
    "PrincipalConductor",
    "qpoch_abs",
    "qpoch_log_abs",
    "QuadInt",
    "ReducedFraction",
    "route_estimate",
    "RouteEstimate",
    "RouteId",
    "RouteUnavailableError",
    "ShintaniError",
    "solve_field",
    "t_frac",
    "tau",
    "unit_coeff_b",
    "VerificationReport",
    "verify",
    "x_r1",
]
