"""Exception types raised across the package."""


class SpinGatesError(Exception):
    """Base class for all package errors."""


class ContractError(SpinGatesError, ValueError):
    """An argument violates the documented precondition of an operation."""


class DegeneracyError(ContractError):
    """Eigenstates cannot be matched unambiguously to product states."""


class NumericError(SpinGatesError, ArithmeticError):
    """A numerical computation produced non-finite or unusable values."""


class ConfigError(SpinGatesError, ValueError):
    """A configuration file is malformed or fails validation."""
