"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: configuration / validation problems
exit with 2, numerical failures with 3.
"""


class FarisError(Exception):
    """Base class for all package errors."""


class ValidationError(FarisError, ValueError):
    """An argument or configuration value violates a documented contract."""


class ConfigError(ValidationError):
    """A configuration file could not be parsed or contains unknown keys."""


class NumericalError(FarisError, RuntimeError):
    """A numerical routine failed (factorization, bracketing, NaN contamination)."""
