"""Exception hierarchy shared by every module."""

from __future__ import annotations


class ShintaniError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(ShintaniError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class OrderNotFoundError(ShintaniError):
    """The multiplicative order of the unit was not found within the cap."""


class OrbitPeriodError(ShintaniError):
    """An orbit did not close after the expected number of steps."""


class DegenerateArgumentError(ShintaniError):
    """A product has an exactly vanishing factor."""


class RouteUnavailableError(ShintaniError):
    """No admissible index produced a value for a route."""


class FeasibilityError(ShintaniError):
    """The requested index exceeds the configured cost cap."""


class CalibrationError(ShintaniError):
    """The orbit convention could not be determined uniquely."""
