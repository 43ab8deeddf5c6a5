"""Exception types shared across the package.

The command line tool maps these onto exit codes: ConfigError -> 2,
BudgetError -> 3, InvariantError -> 4.
"""


class SpinLearnError(Exception):
    """Base class for package-specific errors."""


class ConfigError(SpinLearnError, ValueError):
    """Invalid configuration values, arguments, or input files."""


class DimensionError(SpinLearnError, ValueError):
    """Mismatched variable counts or array shapes."""


class BudgetError(SpinLearnError, RuntimeError):
    """A requested computation exceeds its sample or enumeration budget."""


class InvariantError(SpinLearnError, RuntimeError):
    """A runtime invariant that should hold by construction was violated."""
