"""Exception hierarchy shared by every module.

The CLI maps each family onto an exit code, so library code should raise the
most specific class that fits.
"""


class DyspillError(Exception):
    """Base class for all package errors."""


class ConfigError(DyspillError, ValueError):
    """Invalid or infeasible run configuration (exit code 2)."""


class DataError(DyspillError, ValueError):
    """Malformed or inconsistent input data (exit code 3)."""


class NumericalError(DyspillError, ArithmeticError):
    """A numerical routine could not produce a valid result (exit code 4)."""


class RankDeficiencyError(NumericalError):
    """Too few observations for the number of estimated parameters."""


class InfeasibleWindowError(ConfigError):
    """Rolling window too short to support the requested VAR."""
