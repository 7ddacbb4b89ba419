"""Exception types shared across the package."""


class GridClearError(Exception):
    """Base class for errors raised by this package."""


class ConfigurationError(GridClearError):
    """A configuration is internally inconsistent or physically unrealizable."""


class InfeasibleDispatchError(GridClearError):
    """No dispatch satisfies the balance and generator bounds.

    Carries the offending demand and the fleet bounds so callers can report
    a useful diagnostic.
    """

    def __init__(self, message, demand=None, fleet_bounds=None):
        super().__init__(message)
        self.demand = demand
        self.fleet_bounds = fleet_bounds


class FleetParseError(ConfigurationError):
    """A fleet CSV file could not be parsed; carries the 1-based line number."""

    def __init__(self, message, line_number=None):
        super().__init__(message)
        self.line_number = line_number
