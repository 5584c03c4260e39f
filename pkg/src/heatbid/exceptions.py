"""Exception types shared across the package."""


class HeatbidError(Exception):
    """Base class for all package errors."""


class LengthMismatch(HeatbidError):
    """A series length does not match the planning horizon."""


class UnknownUnit(HeatbidError):
    """A unit id is not part of the configured system."""


class InfeasibleFloor(HeatbidError):
    """A production floor exceeds the unit's heat capacity."""


class NotOptimal(HeatbidError):
    """An operation required an optimal solution but got none."""


class IntegralityViolation(HeatbidError):
    """A binary variable value is farther than tolerance from {0, 1}."""


class WrongKind(HeatbidError):
    """A unit of the wrong kind was passed (CHP vs heat-only)."""


class NoHeatOnly(HeatbidError):
    """Bidding requires at least one heat-only unit."""


class InfeasibleProblem(HeatbidError):
    """The MILP has no feasible point."""


class ParseError(HeatbidError):
    """A solution or data file could not be parsed."""


class InfeasiblePoint(HeatbidError):
    """An externally supplied point fails feasibility verification."""


class TooShort(HeatbidError):
    """Not enough price history to fit the forecasting model."""


class SingularRegression(HeatbidError):
    """The forecaster's regression matrix is rank deficient."""


class ConfigError(HeatbidError):
    """Invalid system configuration or run configuration."""
