"""Exception hierarchy shared by every flightopt module."""


class FlightOptError(Exception):
    """Base class for all errors raised by flightopt."""


class DomainError(FlightOptError, ValueError):
    """An input lies outside the domain where a model is defined."""


class DataError(FlightOptError, ValueError):
    """A data file is malformed; the message carries file and line context."""


class FitError(FlightOptError):
    """Least-squares wind fit cannot be carried out on the given samples."""


class InfeasibleError(FlightOptError):
    """No feasible horizon was found during a minimum-time search.

    The best diagnostics seen during the search are attached as ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ConfigError(FlightOptError, ValueError):
    """A scenario or command-line configuration is missing or invalid."""
